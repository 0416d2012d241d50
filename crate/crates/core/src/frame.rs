//! Localized spectral graph filter dictionaries: analysis, synthesis, frame
//! bounds and the three fast inverse transforms.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{apply_many, chebyshev_fit, ChebyshevApprox};
use crate::design::{uniform_points, FilterBank, GRID_POINTS};
use crate::eigen::EigenDecomposition;
use crate::error::{check_len, invalid, Error, Result};
use crate::laplacian::Laplacian;
use crate::linalg::{axpy, conjugate_gradient, dot, norm_sq, CgReport};
use crate::rng;

#[derive(Debug, Clone)]
enum Backend {
    /// Responses `g_j(lambda_l)` at every eigenvalue, one row per band.
    Exact { eig: Arc<EigenDecomposition>, response: Vec<Vec<f64>> },
    Poly { approx: Vec<ChebyshevApprox> },
}

/// A filter bank paired with per-band center-vertex sets.
///
/// Atoms are `phi_{i,j} = g_j(L) delta_i` for `i` in `V_j`, evaluated either
/// exactly through an eigendecomposition or through Chebyshev approximants.
#[derive(Debug, Clone)]
pub struct Dictionary {
    laplacian: Arc<Laplacian>,
    bank: FilterBank,
    centers: Vec<Vec<usize>>,
    backend: Backend,
    id: u64,
}

/// Analysis coefficients `alpha_{i,j}`, one vector per band, aligned with the
/// band's center list.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub bands: Vec<Vec<f64>>,
    pub centers: Vec<Vec<usize>>,
    /// Identity of the dictionary that produced them, if known.
    pub provenance: Option<u64>,
}

impl Coefficients {
    pub fn zeros_like(&self) -> Self {
        Self {
            bands: self.bands.iter().map(|b| vec![0.0; b.len()]).collect(),
            centers: self.centers.clone(),
            provenance: self.provenance,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.bands.iter().map(Vec::len).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.bands.concat()
    }

    /// Replaces the values band by band from a flat vector.
    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        check_len(self.n_atoms(), flat.len())?;
        let mut out = self.clone();
        let mut k = 0;
        for band in &mut out.bands {
            let len = band.len();
            band.copy_from_slice(&flat[k..k + len]);
            k += len;
        }
        Ok(out)
    }

    pub fn dot(&self, other: &Coefficients) -> f64 {
        self.bands
            .iter()
            .zip(&other.bands)
            .map(|(a, b)| dot(a, b))
            .sum()
    }

    pub fn energy(&self) -> f64 {
        self.bands.iter().map(|b| norm_sq(b)).sum()
    }
}

/// Where frame bounds were evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsBasis {
    /// At the Laplacian eigenvalues.
    ExactSigma,
    /// On a uniform grid of `[0, lambda_bar]`.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub a: f64,
    pub b: f64,
    pub basis: BoundsBasis,
    /// Set when some band is subsampled: `G` then only describes the
    /// complete-sampling dictionary.
    pub heuristic: bool,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.b / self.a
    }
}

/// How to map coefficients back to a signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Inverse {
    /// Conjugate gradient on `Phi Phi^* f = Phi alpha`.
    Cg { tol: f64, max_iter: usize },
    /// `T` steps of the frame algorithm with bounds `A`, `B`.
    FrameIteration { a: f64, b: f64, t: usize },
    /// `(2 / (A + B)) Phi alpha`.
    SinglePass { a: f64, b: f64 },
}

/// Diagnostics of a conjugate-gradient inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseReport {
    pub cg: CgReport,
    /// `Some(true)` when `G` vanishes somewhere on the spectrum; `None` when
    /// that cannot be decided (no eigenvalues, or subsampled bands).
    pub rank_deficient: Option<bool>,
}

/// Centers `V_j = V` for every band.
pub fn complete_centers(n: usize, n_bands: usize) -> Vec<Vec<usize>> {
    vec![(0..n).collect(); n_bands]
}

impl Dictionary {
    fn check_centers(n: usize, n_bands: usize, centers: &[Vec<usize>]) -> Result<()> {
        check_len(n_bands, centers.len())?;
        for (j, set) in centers.iter().enumerate() {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return invalid(format!("band {j}: center {bad} out of range for {n} vertices"));
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return invalid(format!("band {j}: repeated center vertex"));
            }
        }
        if centers.iter().all(Vec::is_empty) {
            return invalid("dictionary has no atoms");
        }
        Ok(())
    }

    fn finish(laplacian: Arc<Laplacian>, bank: FilterBank, centers: Vec<Vec<usize>>, backend: Backend) -> Self {
        let mut d = Dictionary { laplacian, bank, centers, backend, id: 0 };
        d.id = d.compute_id();
        d
    }

    /// Exact-mode dictionary from an eigendecomposition of `laplacian`.
    /// `centers = None` means complete sampling.
    pub fn exact(
        laplacian: Arc<Laplacian>,
        eig: Arc<EigenDecomposition>,
        bank: FilterBank,
        centers: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let n = laplacian.n();
        check_len(n, eig.n())?;
        let centers = centers.unwrap_or_else(|| complete_centers(n, bank.len()));
        Self::check_centers(n, bank.len(), &centers)?;
        let response = bank
            .kernels
            .iter()
            .map(|k| eig.eigenvalues().iter().map(|&l| k.eval(l)).collect())
            .collect();
        Ok(Self::finish(laplacian, bank, centers, Backend::Exact { eig, response }))
    }

    /// Polynomial-mode dictionary: every kernel fitted with a degree-`degree`
    /// Chebyshev expansion on `[0, L.lambda_max_bound()]`.
    pub fn poly(
        laplacian: Arc<Laplacian>,
        bank: FilterBank,
        degree: usize,
        jackson: bool,
        centers: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let lb = laplacian.lambda_max_bound();
        let approx = bank
            .kernels
            .iter()
            .map(|k| chebyshev_fit(k, degree, lb, jackson))
            .collect::<Result<Vec<_>>>()?;
        Self::from_approximants(laplacian, bank, approx, centers)
    }

    /// Polynomial-mode dictionary from given approximants (one per kernel).
    pub fn from_approximants(
        laplacian: Arc<Laplacian>,
        bank: FilterBank,
        approx: Vec<ChebyshevApprox>,
        centers: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let n = laplacian.n();
        check_len(bank.len(), approx.len())?;
        let centers = centers.unwrap_or_else(|| complete_centers(n, bank.len()));
        Self::check_centers(n, bank.len(), &centers)?;
        Ok(Self::finish(laplacian, bank, centers, Backend::Poly { approx }))
    }

    /// Same filters with different center sets.
    pub fn with_centers(&self, centers: Vec<Vec<usize>>) -> Result<Self> {
        Self::check_centers(self.n(), self.n_bands(), &centers)?;
        Ok(Self::finish(self.laplacian.clone(), self.bank.clone(), centers, self.backend.clone()))
    }

    fn compute_id(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.n().hash(&mut h);
        self.bank.design_name.hash(&mut h);
        self.centers.hash(&mut h);
        let probe = uniform_points(self.laplacian.lambda_max_bound(), 64);
        match &self.backend {
            Backend::Exact { .. } => 0u8.hash(&mut h),
            Backend::Poly { approx } => {
                1u8.hash(&mut h);
                for p in approx {
                    for c in p.coefficients() {
                        c.to_bits().hash(&mut h);
                    }
                }
            }
        }
        for j in 0..self.n_bands() {
            for &x in &probe {
                self.bank.kernels[j].eval(x).to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn n(&self) -> usize {
        self.laplacian.n()
    }

    pub fn n_bands(&self) -> usize {
        self.bank.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.centers.iter().map(Vec::len).sum()
    }

    pub fn centers(&self) -> &[Vec<usize>] {
        &self.centers
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn laplacian(&self) -> &Arc<Laplacian> {
        &self.laplacian
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.backend, Backend::Exact { .. })
    }

    pub fn is_complete(&self) -> bool {
        let n = self.n();
        self.centers.iter().all(|s| s.len() == n)
    }

    pub fn eigen(&self) -> Option<&Arc<EigenDecomposition>> {
        match &self.backend {
            Backend::Exact { eig, .. } => Some(eig),
            Backend::Poly { .. } => None,
        }
    }

    pub fn approximants(&self) -> Option<&[ChebyshevApprox]> {
        match &self.backend {
            Backend::Poly { approx } => Some(approx),
            Backend::Exact { .. } => None,
        }
    }

    /// The response actually realized by band `j` at `lambda`: the kernel in
    /// exact mode, its approximant in polynomial mode.
    pub fn band_response(&self, j: usize, lambda: f64) -> f64 {
        match &self.backend {
            Backend::Exact { .. } => self.bank.kernels[j].eval(lambda),
            Backend::Poly { approx } => approx[j].eval(lambda),
        }
    }

    /// `g_j(L) f` for every band.
    pub fn filter_all(&self, f: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len(self.n(), f.len())?;
        match &self.backend {
            Backend::Exact { eig, response } => {
                let hat = eig.forward(f)?;
                response
                    .iter()
                    .map(|r| {
                        let filtered: Vec<f64> = hat.iter().zip(r).map(|(h, g)| h * g).collect();
                        eig.inverse(&filtered)
                    })
                    .collect()
            }
            Backend::Poly { approx } => apply_many(approx, &self.laplacian, f),
        }
    }

    /// `g_j(L) f` for a single band.
    pub fn filter_band(&self, j: usize, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), f.len())?;
        match &self.backend {
            Backend::Exact { eig, response } => eig.apply_response(&response[j], f),
            Backend::Poly { approx } => approx[j].apply(&self.laplacian, f),
        }
    }

    /// `alpha_{i,j} = (g_j(L) f)(i)` for `i` in `V_j`.
    pub fn analysis(&self, f: &[f64]) -> Result<Coefficients> {
        let filtered = self.filter_all(f)?;
        let bands = filtered
            .iter()
            .zip(&self.centers)
            .map(|(g, set)| set.iter().map(|&i| g[i]).collect())
            .collect();
        Ok(Coefficients { bands, centers: self.centers.clone(), provenance: Some(self.id) })
    }

    fn check_coefficients(&self, c: &Coefficients) -> Result<()> {
        if let Some(p) = c.provenance {
            if p != self.id {
                return Err(Error::ProvenanceMismatch);
            }
        }
        check_len(self.n_bands(), c.bands.len())?;
        for (band, set) in c.bands.iter().zip(&self.centers) {
            check_len(set.len(), band.len())?;
        }
        if c.centers != self.centers {
            return invalid("coefficient centers differ from the dictionary's");
        }
        Ok(())
    }

    fn upsample(&self, j: usize, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (&i, &v) in self.centers[j].iter().zip(values) {
            out[i] = v;
        }
        out
    }

    /// `sum_j g_j(L) up_j(alpha_j)`, the adjoint of [`Dictionary::analysis`].
    pub fn synthesis(&self, c: &Coefficients) -> Result<Vec<f64>> {
        self.check_coefficients(c)?;
        let n = self.n();
        match &self.backend {
            Backend::Exact { eig, response } => {
                let mut spectral = vec![0.0; n];
                for (j, band) in c.bands.iter().enumerate() {
                    if band.is_empty() {
                        continue;
                    }
                    let hat = eig.forward(&self.upsample(j, band))?;
                    for ((s, h), g) in spectral.iter_mut().zip(&hat).zip(&response[j]) {
                        *s += g * h;
                    }
                }
                eig.inverse(&spectral)
            }
            Backend::Poly { approx } => {
                let parts = (0..self.n_bands())
                    .into_par_iter()
                    .map(|j| {
                        if c.bands[j].is_empty() {
                            return Ok(None);
                        }
                        approx[j].apply(&self.laplacian, &self.upsample(j, &c.bands[j])).map(Some)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut out = vec![0.0; n];
                for p in parts.into_iter().flatten() {
                    axpy(1.0, &p, &mut out);
                }
                Ok(out)
            }
        }
    }

    /// `Phi Phi^* f`.
    pub fn frame_operator(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.synthesis(&self.analysis(f)?)
    }

    /// The atom `phi_{i,j} = g_j(L) delta_i`.
    pub fn materialize_atom(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        if j >= self.n_bands() {
            return invalid(format!("band {j} out of range"));
        }
        if !self.centers[j].contains(&i) {
            return invalid(format!("vertex {i} is not a center of band {j}"));
        }
        let mut delta = vec![0.0; self.n()];
        delta[i] = 1.0;
        self.filter_band(j, &delta)
    }

    /// All atoms as the columns of an `N x M` matrix, bands in order.
    pub fn atom_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, self.n_atoms());
        match &self.backend {
            Backend::Exact { eig, response } => {
                let u = eig.eigenvectors();
                let mut col = 0;
                for (j, set) in self.centers.iter().enumerate() {
                    if set.is_empty() {
                        continue;
                    }
                    let mut scaled = u.clone();
                    for (l, g) in response[j].iter().enumerate() {
                        scaled.column_mut(l).scale_mut(*g);
                    }
                    let rows = u.select_rows(set.iter());
                    let block = scaled * rows.transpose();
                    m.columns_mut(col, set.len()).copy_from(&block);
                    col += set.len();
                }
            }
            Backend::Poly { approx } => {
                let cols: Vec<Vec<Vec<f64>>> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut delta = vec![0.0; n];
                        delta[i] = 1.0;
                        apply_many(approx, &self.laplacian, &delta)
                    })
                    .collect::<Result<_>>()?;
                let mut col = 0;
                for (j, set) in self.centers.iter().enumerate() {
                    for &i in set {
                        for (r, v) in cols[i][j].iter().enumerate() {
                            m[(r, col)] = *v;
                        }
                        col += 1;
                    }
                }
            }
        }
        Ok(m)
    }

    /// Exact `||phi_{i,j}||_2` for every atom. Uses the eigendecomposition in
    /// exact mode and materializes the atoms in polynomial mode.
    pub fn atom_norms_exact(&self) -> Result<Vec<Vec<f64>>> {
        match &self.backend {
            Backend::Exact { eig, response } => {
                let u = eig.eigenvectors();
                Ok(self
                    .centers
                    .iter()
                    .enumerate()
                    .map(|(j, set)| {
                        set.iter()
                            .map(|&i| {
                                response[j]
                                    .iter()
                                    .enumerate()
                                    .map(|(l, g)| (g * u[(i, l)]).powi(2))
                                    .sum::<f64>()
                                    .sqrt()
                            })
                            .collect()
                    })
                    .collect())
            }
            Backend::Poly { .. } => {
                let phi = self.atom_matrix()?;
                let mut col = 0;
                Ok(self
                    .centers
                    .iter()
                    .map(|set| {
                        set.iter()
                            .map(|_| {
                                let v = phi.column(col).norm();
                                col += 1;
                                v
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// Stochastic atom norms for every band: per-vertex sample standard
    /// deviation of `g_j(L) x` over `n_probes` standard-normal vectors `x`.
    pub fn atom_norms_estimate(&self, n_probes: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if n_probes < 2 {
            return invalid("atom norm estimation needs at least 2 probes");
        }
        let n = self.n();
        let filtered: Vec<Vec<Vec<f64>>> = (0..n_probes)
            .into_par_iter()
            .map(|p| {
                let mut rng = rng::stream(seed, p as u64);
                self.filter_all(&rng::gaussian(&mut rng, n))
            })
            .collect::<Result<_>>()?;
        let np = n_probes as f64;
        Ok(self
            .centers
            .iter()
            .enumerate()
            .map(|(j, set)| {
                set.iter()
                    .map(|&i| {
                        let mean = filtered.iter().map(|f| f[j][i]).sum::<f64>() / np;
                        let var = filtered.iter().map(|f| (f[j][i] - mean).powi(2)).sum::<f64>()
                            / (np - 1.0);
                        var.sqrt()
                    })
                    .collect()
            })
            .collect())
    }

    /// Stochastic norm estimate for the atoms of a single band.
    pub fn atom_norm_estimate(&self, j: usize, n_probes: usize, seed: u64) -> Result<Vec<f64>> {
        if j >= self.n_bands() {
            return invalid(format!("band {j} out of range"));
        }
        Ok(self.atom_norms_estimate(n_probes, seed)?.swap_remove(j))
    }

    /// `G` evaluated at the given points with the realized band responses.
    pub fn realized_g(&self, points: &[f64]) -> Vec<f64> {
        points
            .iter()
            .map(|&x| (0..self.n_bands()).map(|j| self.band_response(j, x).powi(2)).sum())
            .collect()
    }
}

/// Frame bounds from `G = sum_j |g_j|^2`.
///
/// Uses the eigenvalues when available (the dictionary's own in exact mode,
/// or `eig` in polynomial mode, where `G` is built from the approximants),
/// otherwise a uniform grid on `[0, lambda_bar]`. Tagged heuristic unless
/// every band is completely sampled.
pub fn frame_bounds(d: &Dictionary, eig: Option<&EigenDecomposition>) -> FrameBounds {
    let (points, basis) = match d.eigen().map(|e| e.as_ref()).or(eig) {
        Some(e) => (e.eigenvalues().to_vec(), BoundsBasis::ExactSigma),
        None => (
            uniform_points(d.laplacian.lambda_max_bound(), GRID_POINTS),
            BoundsBasis::Grid,
        ),
    };
    let g = d.realized_g(&points);
    let a = g.iter().copied().fold(f64::INFINITY, f64::min);
    let b = g.iter().copied().fold(0.0, f64::max);
    FrameBounds { a, b, basis, heuristic: !d.is_complete() }
}

/// Conjugate gradient on the normal equations `Phi Phi^* f = Phi alpha`.
/// Returns the best iterate together with diagnostics.
pub fn inverse_cg(
    d: &Dictionary,
    c: &Coefficients,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, InverseReport)> {
    let rhs = d.synthesis(c)?;
    let mut failure = None;
    let (x, cg) = conjugate_gradient(
        |v| match d.frame_operator(v) {
            Ok(y) => y,
            Err(e) => {
                failure.get_or_insert(e);
                vec![0.0; v.len()]
            }
        },
        &rhs,
        None,
        tol,
        max_iter,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !cg.converged {
        log::warn!(
            "CG inverse stopped after {} iterations at relative residual {:.3e}",
            cg.iterations,
            cg.rel_residual
        );
    }
    let rank_deficient = match d.eigen() {
        Some(eig) if d.is_complete() => {
            let g = d.realized_g(eig.eigenvalues());
            let top = g.iter().copied().fold(0.0, f64::max);
            Some(g.iter().any(|&v| v <= 1e-12 * top.max(1e-300)))
        }
        _ => None,
    };
    Ok((x, InverseReport { cg, rank_deficient }))
}

fn check_bounds(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) {
        return invalid(format!("lower frame bound must be positive, got {a}"));
    }
    if !(b >= a) || !b.is_finite() {
        return invalid(format!("need A <= B < inf, got A = {a}, B = {b}"));
    }
    Ok(())
}

/// Every iterate `f^(0), ..., f^(T)` of the frame algorithm.
pub fn frame_iteration_trace(
    d: &Dictionary,
    c: &Coefficients,
    a: f64,
    b: f64,
    t: usize,
) -> Result<Vec<Vec<f64>>> {
    check_bounds(a, b)?;
    let step = 2.0 / (a + b);
    let f0: Vec<f64> = d.synthesis(c)?.iter().map(|v| step * v).collect();
    let mut trace = vec![f0.clone()];
    for _ in 0..t {
        let prev = trace.last().expect("nonempty");
        let sf = d.frame_operator(prev)?;
        let next: Vec<f64> = (0..prev.len())
            .map(|i| f0[i] + prev[i] - step * sf[i])
            .collect();
        trace.push(next);
    }
    Ok(trace)
}

/// `T` steps of `f_t = f_0 + f_{t-1} - (2/(A+B)) Phi Phi^* f_{t-1}` from
/// `f_0 = (2/(A+B)) Phi alpha`.
pub fn inverse_frame_iteration(
    d: &Dictionary,
    c: &Coefficients,
    a: f64,
    b: f64,
    t: usize,
) -> Result<Vec<f64>> {
    Ok(frame_iteration_trace(d, c, a, b, t)?.pop().expect("nonempty"))
}

/// `(2/(A+B)) Phi alpha`.
pub fn inverse_single_pass(d: &Dictionary, c: &Coefficients, a: f64, b: f64) -> Result<Vec<f64>> {
    inverse_frame_iteration(d, c, a, b, 0)
}

/// Runs the selected inverse.
pub fn reconstruct(d: &Dictionary, c: &Coefficients, inverse: &Inverse) -> Result<Vec<f64>> {
    match *inverse {
        Inverse::Cg { tol, max_iter } => Ok(inverse_cg(d, c, tol, max_iter)?.0),
        Inverse::FrameIteration { a, b, t } => inverse_frame_iteration(d, c, a, b, t),
        Inverse::SinglePass { a, b } => inverse_single_pass(d, c, a, b),
    }
}

/// `((B - A) / (B + A))^{T+1}`
pub fn frame_iteration_bound(a: f64, b: f64, t: usize) -> f64 {
    ((b - a) / (b + a)).powi(t as i32 + 1)
}

/// `r / (2 + r)` with `r = B/A - 1`.
pub fn single_pass_bound(a: f64, b: f64) -> f64 {
    let r = b / a - 1.0;
    r / (2.0 + r)
}

/// Cumulative coherence `mu_1(k)` of the normalized atoms: the largest, over
/// atoms, sum of its `k` largest absolute inner products with other atoms.
pub fn cumulative_coherence(d: &Dictionary, k: usize) -> Result<f64> {
    let phi = d.atom_matrix()?;
    cumulative_coherence_of(&phi, k)
}

/// [`cumulative_coherence`] for an explicit atom matrix (atoms as columns).
pub fn cumulative_coherence_of(phi: &DMatrix<f64>, k: usize) -> Result<f64> {
    let m = phi.ncols();
    if k >= m {
        return invalid(format!("k = {k} must be below the atom count {m}"));
    }
    let mut normalized = phi.clone();
    for mut col in normalized.column_iter_mut() {
        let nv = col.norm();
        if nv > 0.0 {
            col /= nv;
        }
    }
    let gram = normalized.tr_mul(&normalized);
    let best = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut others: Vec<f64> = (0..m).filter(|&b| b != a).map(|b| gram[(a, b)].abs()).collect();
            others.sort_unstable_by(|x, y| y.total_cmp(x));
            others[..k].iter().sum::<f64>()
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{make_ideal_partition, make_sgwt, make_uniform_translates, Spacing};
    use crate::eigen::eigendecompose;
    use crate::generators;
    use crate::kernel::{Kernel, Prototype};
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use crate::linalg::norm;

    fn setup(g: &crate::SparseGraph) -> (Arc<Laplacian>, Arc<EigenDecomposition>) {
        let l = Arc::new(build_laplacian(g, LaplacianKind::Combinatorial).unwrap());
        let eig = Arc::new(eigendecompose(&l, 1000).unwrap());
        (l, eig)
    }

    fn signal(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 99);
        rng::gaussian(&mut r, n)
    }

    #[test]
    fn identity_bank_gives_deltas() {
        let (l, eig) = setup(&generators::path(6));
        let bank = FilterBank::new(vec![Kernel::constant(1.0, l.lambda_max_bound())], l.lambda_max_bound(), "id").unwrap();
        let d = Dictionary::exact(l.clone(), eig, bank.clone(), None).unwrap();
        let f = signal(6, 1);
        let c = d.analysis(&f).unwrap();
        for (a, b) in c.bands[0].iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
        let atom = d.materialize_atom(2, 0).unwrap();
        for (i, v) in atom.iter().enumerate() {
            assert!((v - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        let p = Dictionary::poly(l, bank, 5, false, None).unwrap();
        assert!(p.materialize_atom(2, 0).unwrap().iter().enumerate().all(|(i, v)| (v - if i == 2 { 1.0 } else { 0.0 }).abs() < 1e-12));
    }

    #[test]
    fn eigenvector_lands_in_its_band() {
        let (l, eig) = setup(&generators::cycle(8));
        let bank = make_ideal_partition(l.lambda_max_bound(), 2, Spacing::Uniform, None).unwrap();
        let d = Dictionary::exact(l, eig.clone(), bank, None).unwrap();
        let u = eig.eigenvector(1);
        let c = d.analysis(&u).unwrap();
        for (a, b) in c.bands[0].iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(c.bands[1].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn parseval_round_trip_and_adjoint() {
        let (l, eig) = setup(&generators::sensor(80, 5, 3).graph);
        let bank = make_uniform_translates(l.lambda_max_bound(), 5, Prototype::Itersine).unwrap();
        let d = Dictionary::exact(l.clone(), eig, bank.clone(), None).unwrap();
        let f = signal(80, 2);
        let c = d.analysis(&f).unwrap();
        assert!((c.energy() - norm_sq(&f)).abs() <= 1e-10 * norm_sq(&f));
        let back = d.synthesis(&c).unwrap();
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).abs() < 1e-10);
        }
        for dict in [d, Dictionary::poly(l, bank, 30, false, None).unwrap()] {
            let mut r = rng::stream(5, 0);
            let rand_c = c.with_flat(&rng::gaussian(&mut r, c.n_atoms())).unwrap();
            let rand_c = Coefficients { provenance: Some(dict.id()), ..rand_c };
            let lhs = dict.analysis(&f).unwrap().dot(&rand_c);
            let rhs = dot(&f, &dict.synthesis(&rand_c).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn provenance_is_checked() {
        let (l, eig) = setup(&generators::path(10));
        let bank = make_uniform_translates(l.lambda_max_bound(), 3, Prototype::Hann).unwrap();
        let d1 = Dictionary::exact(l.clone(), eig.clone(), bank.clone(), None).unwrap();
        let d2 = d1.with_centers(vec![vec![0, 1], (0..10).collect(), vec![5]]).unwrap();
        let c = d1.analysis(&signal(10, 0)).unwrap();
        assert!(matches!(d2.synthesis(&c), Err(Error::ProvenanceMismatch)));
        assert!(d2.materialize_atom(3, 0).is_err());
    }

    #[test]
    fn atom_matrix_matches_materialized_atoms() {
        let (l, eig) = setup(&generators::grid(4, 5).graph);
        let bank = make_sgwt(l.lambda_max_bound(), 3).unwrap();
        let centers = vec![vec![0, 7], vec![3], (0..20).collect()];
        for d in [
            Dictionary::exact(l.clone(), eig.clone(), bank.clone(), Some(centers.clone())).unwrap(),
            Dictionary::poly(l.clone(), bank.clone(), 15, true, Some(centers.clone())).unwrap(),
        ] {
            let m = d.atom_matrix().unwrap();
            let norms = d.atom_norms_exact().unwrap().concat();
            let mut col = 0;
            for (j, set) in centers.iter().enumerate() {
                for &i in set {
                    let a = d.materialize_atom(i, j).unwrap();
                    for r in 0..20 {
                        assert!((m[(r, col)] - a[r]).abs() < 1e-12);
                    }
                    assert!((norms[col] - norm(&a)).abs() < 1e-12);
                    col += 1;
                }
            }
        }
    }

    #[test]
    fn tight_frame_inverses_are_exact() {
        let (l, eig) = setup(&generators::sensor(60, 4, 9).graph);
        let bank = make_uniform_translates(l.lambda_max_bound(), 4, Prototype::Meyer).unwrap();
        let d = Dictionary::exact(l, eig, bank, None).unwrap();
        let fb = frame_bounds(&d, None);
        assert!((fb.a - 1.0).abs() < 1e-12 && (fb.b - 1.0).abs() < 1e-12);
        let f = signal(60, 4);
        let c = d.analysis(&f).unwrap();
        let (x, rep) = inverse_cg(&d, &c, 1e-12, 50).unwrap();
        assert_eq!(rep.cg.iterations, 1);
        assert_eq!(rep.rank_deficient, Some(false));
        let sp = inverse_single_pass(&d, &c, 1.0, 1.0).unwrap();
        for i in 0..60 {
            assert!((x[i] - f[i]).abs() < 1e-10);
            assert!((sp[i] - f[i]).abs() < 1e-10);
        }
        assert!(inverse_single_pass(&d, &c, 0.0, 1.0).is_err());
    }

    #[test]
    fn rank_deficient_band_is_flagged() {
        let (l, eig) = setup(&generators::path(8));
        let lb = l.lambda_max_bound();
        // heat-like band that vanishes at the top eigenvalue
        let top = eig.lambda_max();
        let bank = FilterBank::new(vec![Kernel::custom(move |x| (top - x).max(0.0), lb)], lb, "null").unwrap();
        let d = Dictionary::exact(l, eig.clone(), bank, None).unwrap();
        let f = signal(8, 1);
        let (x, rep) = inverse_cg(&d, &d.analysis(&f).unwrap(), 1e-12, 100).unwrap();
        assert_eq!(rep.rank_deficient, Some(true));
        let u = eig.eigenvector(7);
        let lost = dot(&f, &u).powi(2);
        let err = norm_sq(&crate::linalg::sub(&f, &x));
        assert!((err - lost).abs() < 1e-8, "{err} vs {lost}");
    }

    #[test]
    fn coherence_of_basis_and_duplicates() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert_eq!(cumulative_coherence_of(&id, 3).unwrap(), 0.0);
        let mut dup = DMatrix::<f64>::zeros(3, 4);
        dup[(0, 0)] = 1.0;
        dup[(0, 1)] = 2.0;
        dup[(1, 2)] = 1.0;
        dup[(2, 3)] = 1.0;
        assert!((cumulative_coherence_of(&dup, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(cumulative_coherence_of(&dup, 4).is_err());
    }
}
