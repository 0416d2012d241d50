//! Applications: SURE soft-threshold denoising, sparse approximation by OMP
//! and by hard thresholding, and the error metrics used to score them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::FilterBank;
use crate::error::{check_len, invalid, Error, Result};
use crate::frame::{reconstruct, Coefficients, Dictionary, Inverse};
use crate::linalg::{norm_sq, sub};

/// Reported improvement when the reconstruction is exact.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub nmse: f64,
    pub delta_snr_db: Option<f64>,
}

/// `||f_hat - f||^2 / ||f||^2`
pub fn nmse(f: &[f64], f_hat: &[f64]) -> Result<f64> {
    check_len(f.len(), f_hat.len())?;
    let ref_energy = norm_sq(f);
    if ref_energy == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(norm_sq(&sub(f_hat, f)) / ref_energy)
}

/// `10 log10(||noise||^2 / ||f_hat - f||^2)`, capped at [`SNR_CAP_DB`].
pub fn delta_snr_db(f: &[f64], f_hat: &[f64], noise: &[f64]) -> Result<f64> {
    check_len(f.len(), f_hat.len())?;
    check_len(f.len(), noise.len())?;
    let err = norm_sq(&sub(f_hat, f));
    if err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (norm_sq(noise) / err).log10()).min(SNR_CAP_DB))
}

pub fn metrics(f: &[f64], f_hat: &[f64], noise: Option<&[f64]>) -> Result<Metrics> {
    Ok(Metrics {
        nmse: nmse(f, f_hat)?,
        delta_snr_db: noise.map(|xi| delta_snr_db(f, f_hat, xi)).transpose()?,
    })
}

/// Bands whose kernel passes DC (`g_j(0) > 0`); they are not thresholded.
pub fn scaling_bands(bank: &FilterBank) -> Vec<bool> {
    bank.kernels.iter().map(|k| k.eval(0.0) > 0.0).collect()
}

/// SURE objective of one band, without the constant `-sigma^2 sum ||phi||^2`:
/// `sum_i min(alpha_i^2, t_i^2) + 2 sigma^2 ||phi_i||^2 1{|alpha_i| > t_i}`
/// with `t_i = upsilon sigma ||phi_i||`.
pub fn sure_objective(alpha: &[f64], norms: &[f64], sigma: f64, upsilon: f64) -> f64 {
    alpha
        .iter()
        .zip(norms)
        .map(|(&a, &nv)| {
            let t = upsilon * sigma * nv;
            let kept = if a.abs() > t { 2.0 * sigma * sigma * nv * nv } else { 0.0 };
            (a * a).min(t * t) + kept
        })
        .sum()
}

/// Minimizer of [`sure_objective`] over `upsilon >= 0`, found by scanning
/// `0` and every breakpoint `|alpha_i| / (sigma ||phi_i||)`; ties go to the
/// smaller threshold.
pub fn sure_threshold_band(alpha: &[f64], norms: &[f64], sigma: f64) -> Result<f64> {
    check_len(alpha.len(), norms.len())?;
    if alpha.is_empty() {
        return invalid("SURE threshold of an empty band");
    }
    if !(sigma > 0.0) {
        return invalid("sigma must be positive");
    }
    if norms.iter().any(|&v| !(v >= 0.0)) {
        return invalid("atom norms must be nonnegative");
    }
    // zero atoms contribute nothing at any threshold
    let (alpha, norms): (Vec<f64>, Vec<f64>) = alpha
        .iter()
        .zip(norms)
        .filter(|(_, &nv)| nv > 0.0)
        .map(|(&a, &nv)| (a, nv))
        .unzip();
    if alpha.is_empty() {
        return Ok(0.0);
    }
    let mut candidates: Vec<f64> = alpha
        .iter()
        .zip(&norms)
        // nudged up so that `upsilon sigma ||phi||` does not round below
        // `|alpha|` and flip the strict indicator at its own breakpoint
        .map(|(a, nv)| a.abs() / (sigma * nv) * (1.0 + 8.0 * f64::EPSILON))
        .collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = (f64::INFINITY, 0.0);
    for u in candidates {
        let v = sure_objective(&alpha, &norms, sigma, u);
        if v < best.0 {
            best = (v, u);
        }
    }
    Ok(best.1)
}

/// Per-band SURE thresholds `Upsilon_j`; bands flagged in `skip` get 0, as do
/// bands without atoms.
pub fn sure_thresholds(c: &Coefficients, norms: &[Vec<f64>], sigma: f64, skip: &[bool]) -> Result<Vec<f64>> {
    check_len(c.bands.len(), norms.len())?;
    check_len(c.bands.len(), skip.len())?;
    c.bands
        .iter()
        .zip(norms)
        .zip(skip)
        .map(|((a, nv), &s)| if s || a.is_empty() { Ok(0.0) } else { sure_threshold_band(a, nv, sigma) })
        .collect()
}

/// `sgn(a) max(0, |a| - Upsilon_j sigma ||phi_{i,j}||)`
pub fn soft_threshold(c: &Coefficients, norms: &[Vec<f64>], sigma: f64, upsilon: &[f64]) -> Result<Coefficients> {
    check_len(c.bands.len(), norms.len())?;
    check_len(c.bands.len(), upsilon.len())?;
    let mut out = c.clone();
    for ((band, nv), &u) in out.bands.iter_mut().zip(norms).zip(upsilon) {
        check_len(band.len(), nv.len())?;
        for (a, &w) in band.iter_mut().zip(nv) {
            let t = u * sigma * w;
            *a = a.signum() * (a.abs() - t).max(0.0);
        }
    }
    Ok(out)
}

/// Exact atom norms in exact mode; stochastic estimates in polynomial mode.
pub fn atom_norms(d: &Dictionary, n_probes: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d.is_exact() {
        d.atom_norms_exact()
    } else {
        d.atom_norms_estimate(n_probes, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    /// Noise standard deviation (assumed known).
    pub sigma: f64,
    /// Fixed thresholds `Upsilon_j`; SURE-selected when absent.
    pub thresholds: Option<Vec<f64>>,
    /// Probes for atom-norm estimation in polynomial mode.
    pub norm_probes: usize,
    pub seed: u64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self { sigma: 1.0, thresholds: None, norm_probes: 100, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub signal: Vec<f64>,
    pub thresholds: Vec<f64>,
}

/// Analysis, soft thresholding with atom-adapted thresholds, resynthesis.
pub fn denoise(d: &Dictionary, y: &[f64], cfg: &DenoiseConfig, inverse: &Inverse) -> Result<Denoised> {
    if !(cfg.sigma > 0.0) {
        return invalid("sigma must be positive");
    }
    let c = d.analysis(y)?;
    let norms = atom_norms(d, cfg.norm_probes, cfg.seed)?;
    let thresholds = match &cfg.thresholds {
        Some(t) => {
            check_len(d.n_bands(), t.len())?;
            t.clone()
        }
        None => sure_thresholds(&c, &norms, cfg.sigma, &scaling_bands(d.bank()))?,
    };
    let shrunk = soft_threshold(&c, &norms, cfg.sigma, &thresholds)?;
    Ok(Denoised { signal: reconstruct(d, &shrunk, inverse)?, thresholds })
}

/// Outcome of orthogonal matching pursuit on an explicit atom matrix.
#[derive(Debug, Clone)]
pub struct OmpResult {
    /// Selected columns in selection order.
    pub selected: Vec<usize>,
    /// Coefficients of the selected columns of the original (unnormalized)
    /// matrix.
    pub coefficients: Vec<f64>,
    pub reconstruction: Vec<f64>,
    /// `||f - f_t||` after each round.
    pub residual_norms: Vec<f64>,
}

/// OMP with at most `t0` atoms on normalized columns of `phi`, least-squares
/// refit by an incrementally updated QR factorization. Stops early once the
/// residual vanishes. Ties go to the lowest column index.
pub fn omp_on_atoms(phi: &DMatrix<f64>, f: &[f64], t0: usize) -> Result<OmpResult> {
    let (n, m) = phi.shape();
    check_len(n, f.len())?;
    if t0 > m {
        return invalid(format!("T0 = {t0} exceeds the atom count {m}"));
    }
    let norms: Vec<f64> = phi.column_iter().map(|c| c.norm()).collect();
    let fv = DVector::from_column_slice(f);
    let f_norm = fv.norm();
    let mut q_basis: Vec<DVector<f64>> = Vec::new();
    let mut r = DMatrix::<f64>::zeros(t0, t0);
    let mut selected: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    let mut residual = fv.clone();
    let mut residual_norms = Vec::new();

    while selected.len() < t0 && residual.norm() > 1e-14 * f_norm.max(1e-300) {
        let corr = phi.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for k in (0..m).filter(|&k| !used[k] && norms[k] > 0.0) {
            let c = corr[k].abs() / norms[k];
            if best.is_none_or(|(_, v)| c > v) {
                best = Some((k, c));
            }
        }
        let Some((k, _)) = best else { break };
        let atom = phi.column(k) / norms[k];
        let t = selected.len();
        let mut v = atom.clone();
        for _ in 0..2 {
            for (s, q) in q_basis.iter().enumerate() {
                let c = q.dot(&v);
                r[(s, t)] += c;
                v -= q * c;
            }
        }
        let nv = v.norm();
        used[k] = true;
        if nv <= 1e-12 {
            // atom already in the span: refit cannot improve
            for s in 0..t {
                r[(s, t)] = 0.0;
            }
            continue;
        }
        r[(t, t)] = nv;
        let q = v / nv;
        let proj = q.dot(&residual);
        residual -= &q * proj;
        q_basis.push(q);
        selected.push(k);
        residual_norms.push(residual.norm());
    }

    let t = selected.len();
    let qtf: Vec<f64> = q_basis.iter().map(|q| q.dot(&fv)).collect();
    let mut x = vec![0.0; t];
    for i in (0..t).rev() {
        let s: f64 = (i + 1..t).map(|k| r[(i, k)] * x[k]).sum();
        x[i] = (qtf[i] - s) / r[(i, i)];
    }
    let coefficients: Vec<f64> = selected.iter().zip(&x).map(|(&k, xi)| xi / norms[k]).collect();
    let reconstruction = (&fv - &residual).as_slice().to_vec();
    Ok(OmpResult { selected, coefficients, reconstruction, residual_norms })
}

/// OMP on a dictionary's materialized atoms. Returns sparse coefficients in
/// the dictionary's own (unnormalized) convention and the approximation.
pub fn compress_omp(d: &Dictionary, f: &[f64], t0: usize) -> Result<(Coefficients, Vec<f64>, OmpResult)> {
    let phi = d.atom_matrix()?;
    let res = omp_on_atoms(&phi, f, t0)?;
    let mut flat = vec![0.0; d.n_atoms()];
    for (&k, &c) in res.selected.iter().zip(&res.coefficients) {
        flat[k] = c;
    }
    let template = Coefficients {
        bands: d.centers().iter().map(|s| vec![0.0; s.len()]).collect(),
        centers: d.centers().to_vec(),
        provenance: Some(d.id()),
    };
    let c = template.with_flat(&flat)?;
    let rec = res.reconstruction.clone();
    Ok((c, rec, res))
}

/// Keeps the `t0` analysis coefficients with the largest `|alpha| / ||phi||`
/// (ties to the lowest band, then position), zeroes the rest and resynthesizes.
pub fn compress_hard_threshold(
    d: &Dictionary,
    f: &[f64],
    t0: usize,
    norms: &[Vec<f64>],
    inverse: &Inverse,
) -> Result<Vec<f64>> {
    let c = d.analysis(f)?;
    let kept = hard_threshold(&c, norms, t0)?;
    reconstruct(d, &kept, inverse)
}

pub fn hard_threshold(c: &Coefficients, norms: &[Vec<f64>], t0: usize) -> Result<Coefficients> {
    let flat = c.flatten();
    let flat_norms = norms.concat();
    check_len(flat.len(), flat_norms.len())?;
    let mut order: Vec<usize> = (0..flat.len()).collect();
    let score = |k: usize| if flat_norms[k] > 0.0 { flat[k].abs() / flat_norms[k] } else { 0.0 };
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    let mut kept = vec![0.0; flat.len()];
    for &k in order.iter().take(t0) {
        kept[k] = flat[k];
    }
    c.with_flat(&kept)
}
