//! Cumulative spectral densities.
//!
//! [`SpectralCdf`] approximates `P(z) = (1/N) #{l : lambda_l <= z}`, either
//! exactly from an eigendecomposition (a right-continuous step function) or
//! by the kernel polynomial method: Hutchinson trace estimates of
//! Jackson-Chebyshev approximations to `1{lambda <= z}` on a uniform grid,
//! joined by a monotone piecewise-cubic interpolant.
//!
//! [`EnergyCdf`] is the same object built from training signals: the share
//! of their (non-DC) spectral energy at or below `z`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{chebyshev_moments, indicator_coefficients, jackson_factors};
use crate::eigen::EigenDecomposition;
use crate::error::{check_len, invalid, Error, Result};
use crate::laplacian::Laplacian;
use crate::linalg::{axpy, dot, norm};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
enum Interp {
    /// Right-continuous step through the grid points, zero below the first.
    Step,
    /// Fritsch–Carlson monotone cubic Hermite; slopes per grid point.
    Cubic(Vec<f64>),
}

/// Monotone estimate of a cumulative spectral distribution on `[0, lambda_bar]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCdf {
    grid: Vec<f64>,
    values: Vec<f64>,
    interp: Interp,
}

impl SpectralCdf {
    fn validate(grid: &[f64], values: &[f64]) -> Result<()> {
        check_len(grid.len(), values.len())?;
        if grid.is_empty() {
            return invalid("empty CDF grid");
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("CDF grid must be strictly increasing");
        }
        if values.windows(2).any(|w| w[0] > w[1] + 1e-15) {
            return invalid("CDF values must be nondecreasing");
        }
        if values.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            return invalid("CDF values must lie in [0, 1]");
        }
        Ok(())
    }

    /// Step function: `P(z) = values[k]` for the last grid point `<= z`.
    pub fn step(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::validate(&points, &values)?;
        Ok(Self { grid: points, values, interp: Interp::Step })
    }

    /// Monotone cubic interpolant through `(grid, values)`.
    pub fn monotone_cubic(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::validate(&grid, &values)?;
        let slopes = fritsch_carlson_slopes(&grid, &values);
        Ok(Self { grid, values, interp: Interp::Cubic(slopes) })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_step(&self) -> bool {
        self.interp == Interp::Step
    }

    /// Right end of the domain.
    pub fn lambda_bar(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    fn tol(&self) -> f64 {
        1e-9 * self.lambda_bar().abs().max(1.0)
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.interp {
            Interp::Step => {
                let t = z + self.tol();
                let k = self.grid.partition_point(|&g| g <= t);
                if k == 0 {
                    0.0
                } else {
                    self.values[k - 1]
                }
            }
            Interp::Cubic(slopes) => {
                let n = self.grid.len();
                if z <= self.grid[0] {
                    return self.values[0];
                }
                if z >= self.grid[n - 1] {
                    return self.values[n - 1];
                }
                let k = self.grid.partition_point(|&g| g <= z) - 1;
                let h = self.grid[k + 1] - self.grid[k];
                let t = (z - self.grid[k]) / h;
                let (t2, t3) = (t * t, t * t * t);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                let v = h00 * self.values[k]
                    + h10 * h * slopes[k]
                    + h01 * self.values[k + 1]
                    + h11 * h * slopes[k + 1];
                v.clamp(self.values[k], self.values[k + 1])
            }
        }
    }

    /// Generalized inverse: smallest `z` with `P(z) >= p`.
    pub fn inverse(&self, p: f64) -> f64 {
        match &self.interp {
            Interp::Step => {
                let k = self.values.partition_point(|&v| v < p - 1e-12);
                self.grid[k.min(self.grid.len() - 1)]
            }
            Interp::Cubic(_) => {
                let (mut lo, mut hi) = (self.grid[0], self.lambda_bar());
                if self.eval(lo) >= p {
                    return lo;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) >= p {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }

    /// Largest grid point strictly below `z`, used to place band edges
    /// between distinct eigenvalues of a step CDF.
    pub(crate) fn previous_point(&self, z: f64) -> Option<f64> {
        let k = self.grid.partition_point(|&g| g < z - self.tol());
        (k > 0).then(|| self.grid[k - 1])
    }

    /// `(z, P(z))` on `n` uniformly spaced points of `[0, lambda_bar]`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let top = self.lambda_bar();
        (0..n)
            .map(|i| {
                let z = if n > 1 { top * i as f64 / (n - 1) as f64 } else { top };
                (z, self.eval(z))
            })
            .collect()
    }

    /// Sup distance to another CDF over `n` uniform points and both grids.
    pub fn sup_distance(&self, other: &SpectralCdf, n: usize) -> f64 {
        let top = self.lambda_bar().max(other.lambda_bar());
        let mut pts: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
        pts.extend_from_slice(&self.grid);
        pts.extend_from_slice(&other.grid);
        pts.iter()
            .map(|&z| (self.eval(z) - other.eval(z)).abs())
            .fold(0.0, f64::max)
    }
}

fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![0.0];
    }
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        m[i] = if delta[i - 1] * delta[i] <= 0.0 {
            0.0
        } else {
            0.5 * (delta[i - 1] + delta[i])
        };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / delta[i];
        let b = m[i + 1] / delta[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            m[i] = tau * a * delta[i];
            m[i + 1] = tau * b * delta[i];
        }
    }
    m
}

/// Ensemble energy CDF of training signals; DC energy excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCdf(SpectralCdf);

impl EnergyCdf {
    pub fn new(cdf: SpectralCdf) -> Self {
        Self(cdf)
    }

    pub fn cdf(&self) -> &SpectralCdf {
        &self.0
    }

    pub fn into_cdf(self) -> SpectralCdf {
        self.0
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.0.eval(z)
    }
}

/// Kernel-polynomial estimation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpmConfig {
    pub n_probes: usize,
    pub degree: usize,
    pub n_grid: usize,
    pub seed: u64,
}

impl Default for KpmConfig {
    fn default() -> Self {
        Self { n_probes: 10, degree: 30, n_grid: 50, seed: 0 }
    }
}

fn group_tol(eigenvalues: &[f64]) -> f64 {
    1e-9 * eigenvalues.last().copied().unwrap_or(1.0).abs().max(1.0)
}

/// Distinct eigenvalues (within tolerance, clamped at 0) with their
/// multiplicity-weighted masses from `mass`.
fn grouped(eigenvalues: &[f64], mass: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let tol = group_tol(eigenvalues);
    let mut points: Vec<f64> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    let mut start = f64::NEG_INFINITY;
    for (&lam, &m) in eigenvalues.iter().zip(mass) {
        let lam = lam.max(0.0);
        if points.is_empty() || lam - start > tol {
            start = lam;
            points.push(lam);
            sums.push(m);
        } else {
            *points.last_mut().unwrap() = lam;
            *sums.last_mut().unwrap() += m;
        }
    }
    (points, sums)
}

fn cumulative(sums: &[f64], total: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = sums
        .iter()
        .map(|s| {
            acc += s;
            (acc / total).clamp(0.0, 1.0)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

/// Exact eigenvalue counting function as a step CDF.
pub fn exact_spectral_cdf(eig: &EigenDecomposition) -> SpectralCdf {
    let n = eig.n();
    let (points, counts) = grouped(eig.eigenvalues(), &vec![1.0; n]);
    let values = cumulative(&counts, n as f64);
    SpectralCdf::step(points, values).expect("eigenvalue step CDF is valid")
}

/// Rademacher-probe Chebyshev moments `mean_eta eta^T T_k(L~) eta`, summed in
/// probe order so the result is independent of the thread count.
fn probe_moments(l: &Laplacian, degree: usize, n_probes: usize, seed: u64) -> Vec<f64> {
    let n = l.n();
    let lambda_bar = l.lambda_max_bound();
    let per_probe: Vec<Vec<f64>> = (0..n_probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng::stream(seed, p as u64);
            let eta = rng::rademacher(&mut rng, n);
            chebyshev_moments(l, lambda_bar, &eta, degree)
        })
        .collect();
    let mut mean = vec![0.0; degree + 1];
    for m in &per_probe {
        axpy(1.0 / n_probes as f64, m, &mut mean);
    }
    mean
}

/// Damped Chebyshev estimate of `sum_l w_l 1{lambda_l <= z}` from moments.
fn indicator_estimate(moments: &[f64], z: f64, lambda_bar: f64, damping: &[f64]) -> f64 {
    let coeffs = indicator_coefficients(z, lambda_bar, moments.len() - 1);
    coeffs
        .iter()
        .zip(damping)
        .zip(moments)
        .map(|((c, g), m)| c * g * m)
        .sum()
}

fn repair(values: &mut [f64]) {
    let mut running = 0.0f64;
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0).max(running);
        running = *v;
    }
    if let Some(last) = values.last_mut() {
        *last = 1.0;
    }
}

fn uniform_grid(lambda_bar: f64, n_grid: usize) -> Vec<f64> {
    (0..n_grid)
        .map(|i| lambda_bar * i as f64 / (n_grid - 1) as f64)
        .collect()
}

/// Kernel polynomial method estimate of the spectral CDF on the interval
/// `[0, L.lambda_max_bound()]`.
pub fn estimate_spectral_cdf(l: &Laplacian, cfg: &KpmConfig) -> Result<SpectralCdf> {
    if cfg.n_probes == 0 {
        return invalid("n_probes must be >= 1");
    }
    if cfg.degree < 4 {
        return invalid("kpm degree must be >= 4");
    }
    if cfg.n_grid < 2 {
        return invalid("n_grid must be >= 2");
    }
    let n = l.n() as f64;
    let lambda_bar = l.lambda_max_bound();
    let moments = probe_moments(l, cfg.degree, cfg.n_probes, cfg.seed);
    let damping = jackson_factors(cfg.degree);
    let grid = uniform_grid(lambda_bar, cfg.n_grid);
    let mut values: Vec<f64> = grid
        .iter()
        .map(|&z| indicator_estimate(&moments, z, lambda_bar, &damping) / n)
        .collect();
    repair(&mut values);
    SpectralCdf::monotone_cubic(grid, values)
}

fn normalized_training(training: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    if training.is_empty() {
        return invalid("at least one training signal is required");
    }
    training
        .iter()
        .map(|y| {
            check_len(n, y.len())?;
            let ny = norm(y);
            if ny == 0.0 {
                return Err(Error::ZeroSignal);
            }
            Ok(y.iter().map(|v| v / ny).collect())
        })
        .collect()
}

/// Exact ensemble energy CDF from Fourier coefficients, excluding the zero
/// eigenvalue(s).
pub fn exact_energy_cdf(eig: &EigenDecomposition, training: &[Vec<f64>]) -> Result<EnergyCdf> {
    let n = eig.n();
    let ys = normalized_training(training, n)?;
    let tol = group_tol(eig.eigenvalues());
    let mut mass = vec![0.0; n];
    for y in &ys {
        let hat = eig.forward(y)?;
        for (l, h) in hat.iter().enumerate() {
            if eig.eigenvalues()[l] > tol {
                mass[l] += h * h / ys.len() as f64;
            }
        }
    }
    let total: f64 = mass.iter().sum();
    if !(total > 1e-14) {
        return invalid("training signals carry no non-DC energy");
    }
    let (mut points, mut sums) = grouped(eig.eigenvalues(), &mass);
    if points[0] > 0.0 {
        points.insert(0, 0.0);
        sums.insert(0, 0.0);
    }
    let mut values = cumulative(&sums, total);
    values[0] = 0.0;
    Ok(EnergyCdf(SpectralCdf::step(points, values)?))
}

/// Polynomial estimate of the ensemble energy CDF: each normalized training
/// signal is projected off the Laplacian null vector and its energy below
/// each grid point is read from Jackson–Chebyshev indicator approximants.
pub fn estimate_energy_cdf(
    l: &Laplacian,
    training: &[Vec<f64>],
    cfg: &KpmConfig,
) -> Result<EnergyCdf> {
    if cfg.degree < 4 || cfg.n_grid < 2 {
        return invalid("kpm degree must be >= 4 and n_grid >= 2");
    }
    let n = l.n();
    let lambda_bar = l.lambda_max_bound();
    let ys = normalized_training(training, n)?;
    let null = l.null_vector();
    let mut moments = vec![0.0; cfg.degree + 1];
    let mut total = 0.0;
    for y in &ys {
        let mut centered = y.clone();
        axpy(-dot(y, &null), &null, &mut centered);
        total += dot(&centered, &centered);
        let m = chebyshev_moments(l, lambda_bar, &centered, cfg.degree);
        axpy(1.0, &m, &mut moments);
    }
    if !(total > 1e-14) {
        return invalid("training signals carry no non-DC energy");
    }
    let damping = jackson_factors(cfg.degree);
    let grid = uniform_grid(lambda_bar, cfg.n_grid);
    let mut values: Vec<f64> = grid
        .iter()
        .map(|&z| indicator_estimate(&moments, z, lambda_bar, &damping) / total)
        .collect();
    values[0] = 0.0;
    repair(&mut values);
    Ok(EnergyCdf(SpectralCdf::monotone_cubic(grid, values)?))
}
