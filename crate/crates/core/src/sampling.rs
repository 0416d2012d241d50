//! Center-vertex selection, sample allocation across bands, and band-by-band
//! reconstruction from subsampled coefficients.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{apply_many, atom, fit_fn, ChebyshevApprox};
use crate::design::{uniform_points, FilterBank, GRID_POINTS};
use crate::eigen::EigenDecomposition;
use crate::error::{check_len, invalid, Error, Result};
use crate::laplacian::Laplacian;
use crate::linalg::{conjugate_gradient, CgReport};
use crate::rng;
use crate::spectrum::SpectralCdf;

/// One probability vector over the vertices per band.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    pub bands: Vec<Vec<f64>>,
}

/// Selected centers per band together with their selection weights, which
/// enter the reconstruction as `Omega_j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CenterSets {
    pub sets: Vec<Vec<usize>>,
    pub weights: Vec<Vec<f64>>,
}

fn normalized(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    w
}

pub fn uniform_weights(n: usize, n_bands: usize) -> SamplingWeights {
    SamplingWeights { bands: vec![vec![1.0 / n as f64; n]; n_bands] }
}

/// Band coherences `||U_{R_j}^T delta_i||^2` generalized to smooth kernels
/// as `sum_l g_j(lambda_l)^2 u_l(i)^2`, normalized per band.
pub fn exact_weights(eig: &EigenDecomposition, bank: &FilterBank) -> SamplingWeights {
    let u = eig.eigenvectors();
    let n = eig.n();
    let bands = bank
        .kernels
        .iter()
        .map(|k| {
            let resp: Vec<f64> = eig.eigenvalues().iter().map(|&l| k.eval(l).powi(2)).collect();
            normalized(
                (0..n)
                    .map(|i| resp.iter().enumerate().map(|(l, r)| r * u[(i, l)].powi(2)).sum())
                    .collect(),
            )
        })
        .collect();
    SamplingWeights { bands }
}

/// Stochastic band coherences: `w_j(i) ∝ mean_eta (p_j(L) eta)(i)^2` over
/// Rademacher probes.
pub fn nonuniform_weights(
    l: &Laplacian,
    approx: &[ChebyshevApprox],
    n_probes: usize,
    seed: u64,
) -> Result<SamplingWeights> {
    if n_probes == 0 {
        return invalid("n_probes must be >= 1");
    }
    let n = l.n();
    let per_probe: Vec<Vec<Vec<f64>>> = (0..n_probes)
        .into_par_iter()
        .map(|p| {
            let mut r = rng::stream(seed, p as u64);
            apply_many(approx, l, &rng::rademacher(&mut r, n))
        })
        .collect::<Result<_>>()?;
    let bands = (0..approx.len())
        .map(|j| {
            let mut acc = vec![0.0; n];
            for probe in &per_probe {
                for (a, v) in acc.iter_mut().zip(&probe[j]) {
                    *a += v * v;
                }
            }
            normalized(acc)
        })
        .collect();
    Ok(SamplingWeights { bands })
}

/// `w_j(i) <- w_j(i) ln(1 + |(g_j(L) f)(i)|)`, renormalized; a band whose
/// product vanishes keeps its base weights.
pub fn signal_adapted_weights(base: &SamplingWeights, filtered: &[Vec<f64>]) -> Result<SamplingWeights> {
    check_len(base.bands.len(), filtered.len())?;
    let bands = base
        .bands
        .iter()
        .zip(filtered)
        .map(|(w, f)| {
            check_len(w.len(), f.len())?;
            let prod: Vec<f64> = w.iter().zip(f).map(|(wi, fi)| wi * fi.abs().ln_1p()).collect();
            Ok(if prod.iter().sum::<f64>() > 0.0 { normalized(prod) } else { w.clone() })
        })
        .collect::<Result<_>>()?;
    Ok(SamplingWeights { bands })
}

/// Weighted sampling without replacement by sequential draws; band `j` uses
/// random stream `j`. The recorded weights are the original probabilities.
pub fn draw_centers(w: &SamplingWeights, counts: &[usize], seed: u64) -> Result<CenterSets> {
    check_len(w.bands.len(), counts.len())?;
    let mut out = CenterSets::default();
    for (j, (probs, &count)) in w.bands.iter().zip(counts).enumerate() {
        let available = probs.iter().filter(|&&p| p > 0.0).count();
        if count > available {
            return invalid(format!(
                "band {j}: cannot draw {count} centers from {available} positively weighted vertices"
            ));
        }
        let mut rng = rng::stream(seed, j as u64);
        let mut remaining = probs.clone();
        let mut chosen = Vec::with_capacity(count);
        for _ in 0..count {
            let total: f64 = remaining.iter().sum();
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &p) in remaining.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                acc += p;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            let i = pick.expect("positive mass remains");
            remaining[i] = 0.0;
            chosen.push(i);
        }
        chosen.sort_unstable();
        out.weights.push(chosen.iter().map(|&i| probs[i]).collect());
        out.sets.push(chosen);
    }
    Ok(out)
}

/// Greedy center selection without an eigendecomposition.
///
/// Scores every vertex by `||p(L) delta_i||_1`, repeatedly takes the best
/// unselected vertex (lowest index on ties), then damps the scores of the
/// vertices its atom covers: every `n` with `|a(n)| > 0.01 ||a||_inf` is
/// multiplied by `1 - |a(n)| / ||a||_inf`.
pub fn ed_free_greedy(l: &Laplacian, p: &ChebyshevApprox, count: usize) -> Result<Vec<usize>> {
    let n = l.n();
    if count > n {
        return invalid(format!("cannot select {count} of {n} vertices"));
    }
    let mut score: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| atom(p, l, i).map(|a| a.iter().map(|v| v.abs()).sum()))
        .collect::<Result<_>>()?;
    let mut taken = vec![false; n];
    let mut selected = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            if best.is_none_or(|b: usize| score[i] > score[b]) {
                best = Some(i);
            }
        }
        let i = best.expect("count <= n");
        taken[i] = true;
        selected.push(i);
        let a = atom(p, l, i)?;
        let peak = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            for (s, v) in score.iter_mut().zip(&a) {
                let r = v.abs() / peak;
                if r > 0.01 {
                    *s *= 1.0 - r;
                }
            }
        }
    }
    Ok(selected)
}

/// Points used to integrate CDF increments against band supports.
const ALLOCATION_GRID: usize = 2000;

/// Estimated eigenvalue share of every band: CDF mass on the cells where
/// `g_j^2 >= 0.5 max g_j^2`. A jump at `x` is attributed to the kernel value
/// at `x`, and the mass at zero counts from `P(0^-) = 0`.
pub fn band_eigen_shares(cdf: &SpectralCdf, bank: &FilterBank) -> Vec<f64> {
    let top = bank.lambda_bar.max(cdf.lambda_bar());
    let mut pts: Vec<f64> = (0..ALLOCATION_GRID)
        .map(|i| top * i as f64 / (ALLOCATION_GRID - 1) as f64)
        .collect();
    pts.extend(cdf.grid().iter().filter(|&&z| (0.0..=top).contains(&z)));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut increments = Vec::with_capacity(pts.len());
    let mut prev = 0.0;
    for &x in &pts {
        let v = cdf.eval(x);
        increments.push(v - prev);
        prev = v;
    }
    bank.kernels
        .iter()
        .map(|k| {
            let sq: Vec<f64> = pts.iter().map(|&x| k.eval(x).powi(2)).collect();
            let peak = sq.iter().copied().fold(0.0, f64::max);
            sq.iter()
                .zip(&increments)
                .filter(|(s, _)| peak > 0.0 && **s >= 0.5 * peak)
                .map(|(_, inc)| inc)
                .sum()
        })
        .collect()
}

/// Splits `total` samples across bands in proportion to their estimated
/// eigenvalue counts, optionally boosted by `1 + e_j / sum e`, rounded by
/// largest remainder; every band receives at least one sample.
pub fn allocate_samples(
    cdf: &SpectralCdf,
    bank: &FilterBank,
    total: usize,
    energy: Option<&[f64]>,
) -> Result<Vec<usize>> {
    let j = bank.len();
    if total < j {
        return invalid(format!("total {total} is below the band count {j}"));
    }
    let mut share = band_eigen_shares(cdf, bank);
    if let Some(e) = energy {
        check_len(j, e.len())?;
        let sum: f64 = e.iter().sum();
        if sum > 0.0 {
            for (s, ej) in share.iter_mut().zip(e) {
                *s *= 1.0 + ej / sum;
            }
        }
    }
    let sum: f64 = share.iter().sum();
    if !(sum > 0.0) {
        share = vec![1.0; j];
    }
    let sum: f64 = share.iter().sum();
    let exact: Vec<f64> = share.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..j).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - counts.iter().sum::<usize>();
    for &k in order.iter().take(short) {
        counts[k] += 1;
    }
    while let Some(z) = counts.iter().position(|&c| c == 0) {
        let big = (0..j).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).expect("J >= 1");
        counts[big] -= 1;
        counts[z] += 1;
    }
    Ok(counts)
}

/// Penalty operator `phi(L)` of the band reconstruction.
#[derive(Debug, Clone)]
pub enum Penalty {
    Poly(ChebyshevApprox),
    /// Exact response at every eigenvalue.
    Spectral { eig: Arc<EigenDecomposition>, response: Vec<f64> },
}

impl Penalty {
    fn apply(&self, l: &Laplacian, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Penalty::Poly(p) => p.apply(l, x),
            Penalty::Spectral { eig, response } => eig.apply_response(response, x),
        }
    }

    fn diagonal(&self, l: &Laplacian, probes: usize, seed: u64) -> Result<Vec<f64>> {
        let n = l.n();
        match self {
            Penalty::Spectral { eig, response } => {
                let u = eig.eigenvectors();
                Ok((0..n)
                    .map(|i| response.iter().enumerate().map(|(k, r)| r * u[(i, k)].powi(2)).sum())
                    .collect())
            }
            Penalty::Poly(p) => {
                let mut diag = vec![0.0; n];
                for k in 0..probes {
                    let mut r = rng::stream(seed, k as u64);
                    let eta = rng::rademacher(&mut r, n);
                    let y = p.apply(l, &eta)?;
                    for i in 0..n {
                        diag[i] += eta[i] * y[i] / probes as f64;
                    }
                }
                Ok(diag)
            }
        }
    }
}

/// `(1 - p(lambda)^2)^2`, small on the band and growing off it. Fitted at
/// its exact degree `4 deg(p)` so the expansion is exact and nonnegative.
pub fn default_penalty(p: &ChebyshevApprox) -> Result<Penalty> {
    let degree = (4 * p.degree()).max(4);
    let q = p.clone();
    Ok(Penalty::Poly(fit_fn(
        move |x| (1.0 - q.eval(x).powi(2)).powi(2),
        degree,
        p.lambda_bar(),
        false,
    )?))
}

/// `1 - p(lambda)^2 / m` with `m = max(1, max p^2)` on a dense grid, fitted
/// at its exact degree `2 deg(p)`. Grows linearly in `1 - p^2` off the band
/// instead of quadratically, which keeps the system better conditioned when
/// few samples are available.
pub fn complement_penalty(p: &ChebyshevApprox) -> Result<Penalty> {
    let degree = (2 * p.degree()).max(2);
    let lb = p.lambda_bar();
    let peak = uniform_points(lb, GRID_POINTS)
        .into_iter()
        .map(|x| p.eval(x).powi(2))
        .fold(1.0, f64::max);
    let q = p.clone();
    Ok(Penalty::Poly(fit_fn(move |x| 1.0 - q.eval(x).powi(2) / peak, degree, lb, false)?))
}

/// Choice of polynomial penalty for [`band_reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// [`default_penalty`]
    #[default]
    Squared,
    /// [`complement_penalty`]
    Complement,
}

impl PenaltyKind {
    pub fn build(self, p: &ChebyshevApprox) -> Result<Penalty> {
        match self {
            PenaltyKind::Squared => default_penalty(p),
            PenaltyKind::Complement => complement_penalty(p),
        }
    }
}

/// `0` on the eigenvalues of a band (`response > 1/2`), `1` elsewhere.
pub fn spectral_penalty(eig: Arc<EigenDecomposition>, band_response: &[f64]) -> Penalty {
    let response = band_response.iter().map(|&g| if g.abs() > 0.5 { 0.0 } else { 1.0 }).collect();
    Penalty::Spectral { eig, response }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub kappa: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Probes for the Hutchinson estimate of `diag(phi(L))` in the
    /// preconditioner.
    pub diag_probes: usize,
    pub seed: u64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self { kappa: 1e4, tol: 1e-8, max_iter: 2000, diag_probes: 8, seed: 0 }
    }
}

/// Solves `(kappa M^T Omega^{-1} M + phi(L)) z = kappa M^T Omega^{-1} alpha`
/// by Jacobi-preconditioned conjugate gradient.
pub fn band_reconstruct(
    l: &Laplacian,
    centers: &[usize],
    omega: &[f64],
    alpha: &[f64],
    penalty: &Penalty,
    cfg: &ReconstructConfig,
) -> Result<(Vec<f64>, CgReport)> {
    let n = l.n();
    check_len(centers.len(), omega.len())?;
    check_len(centers.len(), alpha.len())?;
    if !(cfg.kappa > 0.0) {
        return invalid("kappa must be positive");
    }
    if let Some(&bad) = centers.iter().find(|&&i| i >= n) {
        return invalid(format!("center {bad} out of range"));
    }
    if omega.iter().any(|&w| !(w > 0.0)) {
        return invalid("sampling weights of selected centers must be positive");
    }
    let mut data_diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for ((&i, &w), &a) in centers.iter().zip(omega).zip(alpha) {
        data_diag[i] += cfg.kappa / w;
        rhs[i] += cfg.kappa * a / w;
    }
    let pen_diag = penalty.diagonal(l, cfg.diag_probes.max(1), cfg.seed)?;
    let floor = 1e-3 * pen_diag.iter().map(|d| d.abs()).sum::<f64>() / n as f64;
    let inv_diag: Vec<f64> = data_diag
        .iter()
        .zip(&pen_diag)
        .map(|(d, p)| {
            let v = d + p.max(floor);
            if v > 0.0 {
                1.0 / v
            } else {
                1.0
            }
        })
        .collect();

    let mut failure = None;
    let (z, report) = conjugate_gradient(
        |x| {
            let mut y = match penalty.apply(l, x) {
                Ok(y) => y,
                Err(e) => {
                    failure.get_or_insert(e);
                    vec![0.0; n]
                }
            };
            for i in 0..n {
                y[i] += data_diag[i] * x[i];
            }
            y
        },
        &rhs,
        Some(&inv_diag),
        cfg.tol,
        cfg.max_iter,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !report.converged {
        log::warn!(
            "band reconstruction stopped after {} iterations at relative residual {:.3e}",
            report.iterations,
            report.rel_residual
        );
    }
    Ok((z, report))
}

/// Greedy row selection for the uniqueness partition: picks `d` rows of
/// `a` (and simultaneously of `b`) by column-pivoted Gram-Schmidt on the
/// rows, maximizing the smaller of the two relative residuals.
fn pivot_rows(a: &DMatrix<f64>, b: &DMatrix<f64>, d: usize) -> Option<Vec<usize>> {
    let rows = a.nrows();
    let mut ra: Vec<Vec<f64>> = (0..rows).map(|i| a.row(i).iter().copied().collect()).collect();
    let mut rb: Vec<Vec<f64>> = (0..rows).map(|i| b.row(i).iter().copied().collect()).collect();
    let na: Vec<f64> = ra.iter().map(|r| crate::linalg::norm(r)).collect();
    let nb: Vec<f64> = rb.iter().map(|r| crate::linalg::norm(r)).collect();
    let scale_a = na.iter().copied().fold(0.0, f64::max).max(1e-300);
    let scale_b = nb.iter().copied().fold(0.0, f64::max).max(1e-300);
    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..rows).filter(|i| !chosen.contains(i)) {
            let s = (crate::linalg::norm(&ra[i]) / scale_a).min(crate::linalg::norm(&rb[i]) / scale_b);
            if best.is_none_or(|(_, v)| s > v) {
                best = Some((i, s));
            }
        }
        let (p, s) = best?;
        if s < 1e-9 {
            return None;
        }
        chosen.push(p);
        for rset in [&mut ra, &mut rb] {
            let q: Vec<f64> = {
                let v = &rset[p];
                let nv = crate::linalg::norm(v);
                v.iter().map(|x| x / nv).collect()
            };
            for (i, row) in rset.iter_mut().enumerate() {
                if i == p || chosen.contains(&i) {
                    continue;
                }
                let c = crate::linalg::dot(row, &q);
                crate::linalg::axpy(-c, &q, row);
            }
        }
    }
    Some(chosen)
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Largest condition number accepted for a band's square sampling block.
pub const MAX_BLOCK_CONDITION: f64 = 1e10;

fn try_partition(
    u: &DMatrix<f64>,
    bands: &[Vec<usize>],
    order: &[usize],
) -> Option<Vec<Vec<usize>>> {
    let n = u.nrows();
    let mut sets = vec![Vec::new(); bands.len()];
    let mut avail: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = order.iter().flat_map(|&j| bands[j].clone()).collect();
    for (step, &j) in order.iter().enumerate() {
        let d = bands[j].len();
        // Q: rows = available vertices, columns = eigenvectors of the bands
        // not yet placed (current band first).
        let q = u.select_rows(avail.iter()).select_columns(cols.iter());
        let chosen_local = if step + 1 == order.len() {
            (0..avail.len()).collect::<Vec<_>>()
        } else {
            let qinv_t = q.clone().try_inverse()?.transpose();
            let a = q.columns(0, d).into_owned();
            let b = qinv_t.columns(0, d).into_owned();
            pivot_rows(&a, &b, d)?
        };
        let block = q.select_rows(chosen_local.iter()).columns(0, d).into_owned();
        if condition_number(&block) > MAX_BLOCK_CONDITION {
            return None;
        }
        let mut set: Vec<usize> = chosen_local.iter().map(|&k| avail[k]).collect();
        set.sort_unstable();
        avail.retain(|v| !set.contains(v));
        cols.drain(0..d);
        sets[j] = set;
    }
    Some(sets)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Partition of the vertices into one uniqueness set per ideal band, with
/// `|V_j|` equal to the number of eigenvalues in band `j`.
///
/// Bands are processed in decreasing dimension; each takes pivot rows of
/// its eigenvector block among the unassigned vertices, chosen so that the
/// remaining vertices stay a uniqueness set for the remaining bands. Other
/// band orders are tried if that fails.
pub fn uniqueness_partition(eig: &EigenDecomposition, bank: &FilterBank) -> Result<CenterSets> {
    let n = eig.n();
    let mut bands: Vec<Vec<usize>> = vec![Vec::new(); bank.len()];
    for (l, &lam) in eig.eigenvalues().iter().enumerate() {
        let hits: Vec<usize> = (0..bank.len()).filter(|&j| bank.kernels[j].eval(lam) == 1.0).collect();
        let others_zero = (0..bank.len()).all(|j| hits.contains(&j) || bank.kernels[j].eval(lam) == 0.0);
        if hits.len() != 1 || !others_zero {
            return invalid(format!(
                "uniqueness partition needs an exact ideal partition; eigenvalue {lam} is not in exactly one band"
            ));
        }
        bands[hits[0]].push(l);
    }
    let mut first: Vec<usize> = (0..bank.len()).collect();
    first.sort_by_key(|&j| (std::cmp::Reverse(bands[j].len()), j));
    let mut orders = vec![first.clone()];
    if bank.len() <= 6 {
        orders.extend(permutations(&first).into_iter().filter(|o| *o != first));
    }
    let u = eig.eigenvectors();
    for order in &orders {
        if let Some(sets) = try_partition(u, &bands, order) {
            let weights = sets.iter().map(|s| vec![1.0 / n as f64; s.len()]).collect();
            return Ok(CenterSets { sets, weights });
        }
    }
    Err(Error::NoPartition(format!(
        "no band order gave invertible sampling blocks ({} orders tried)",
        orders.len()
    )))
}
