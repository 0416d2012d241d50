//! Chebyshev and Jackson–Chebyshev approximation of spectral kernels, and
//! polynomial filtering of graph signals by the three-term recurrence.

use std::f64::consts::PI;

use crate::error::{check_len, invalid, Result};
use crate::kernel::Kernel;
use crate::laplacian::Laplacian;

/// Minimum number of collocation points used by [`fit_fn`].
pub const MIN_COLLOCATION: usize = 256;

/// `p(lambda) = sum_k c_k T_k(2 lambda / lambda_bar - 1)` on `[0, lambda_bar]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevApprox {
    coefficients: Vec<f64>,
    lambda_bar: f64,
    jackson: bool,
}

impl ChebyshevApprox {
    pub fn from_coefficients(coefficients: Vec<f64>, lambda_bar: f64, jackson: bool) -> Result<Self> {
        if coefficients.is_empty() {
            return invalid("a Chebyshev expansion needs at least one coefficient");
        }
        if !(lambda_bar > 0.0) || !lambda_bar.is_finite() {
            return invalid(format!("lambda_bar must be positive, got {lambda_bar}"));
        }
        Ok(Self { coefficients, lambda_bar, jackson })
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn jackson(&self) -> bool {
        self.jackson
    }

    /// Clenshaw evaluation at a scalar `lambda`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let x = 2.0 * lambda / self.lambda_bar - 1.0;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coefficients.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        self.coefficients[0] + x * b1 - b2
    }

    /// `p(L) f` with `degree` sparse matrix-vector products.
    pub fn apply(&self, l: &Laplacian, f: &[f64]) -> Result<Vec<f64>> {
        Ok(apply_many(std::slice::from_ref(self), l, f)?.pop().expect("one output"))
    }

    /// Coefficient table as CSV (`k,coefficient`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,coefficient\n");
        for (k, c) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("{k},{c:e}\n"));
        }
        out
    }
}

/// Jackson damping factors `g_0 .. g_K`.
pub fn jackson_factors(degree: usize) -> Vec<f64> {
    if degree == 0 {
        return vec![1.0];
    }
    let kp1 = (degree + 1) as f64;
    let a = PI / kp1;
    (0..=degree)
        .map(|k| {
            let k = k as f64;
            ((kp1 - k) * (a * k).cos() + (a * k).sin() / a.tan()) / kp1
        })
        .collect()
}

/// Chebyshev coefficients of a function on `[0, lambda_bar]` by discrete
/// cosine collocation at `max(4 degree, 256)` Chebyshev points.
pub fn fit_fn(
    f: impl Fn(f64) -> f64,
    degree: usize,
    lambda_bar: f64,
    jackson: bool,
) -> Result<ChebyshevApprox> {
    if !(lambda_bar > 0.0) || !lambda_bar.is_finite() {
        return invalid(format!("lambda_bar must be positive, got {lambda_bar}"));
    }
    let m = (4 * degree).max(MIN_COLLOCATION);
    let samples: Vec<f64> = (0..m)
        .map(|i| {
            let theta = PI * (i as f64 + 0.5) / m as f64;
            f(0.5 * lambda_bar * (theta.cos() + 1.0))
        })
        .collect();
    let mut coefficients: Vec<f64> = (0..=degree)
        .map(|k| {
            let s: f64 = samples
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m as f64).cos())
                .sum();
            2.0 * s / m as f64
        })
        .collect();
    coefficients[0] *= 0.5;
    if jackson {
        for (c, g) in coefficients.iter_mut().zip(jackson_factors(degree)) {
            *c *= g;
        }
    }
    ChebyshevApprox::from_coefficients(coefficients, lambda_bar, jackson)
}

/// Fits a kernel on `[0, lambda_bar]`.
pub fn chebyshev_fit(
    kernel: &Kernel,
    degree: usize,
    lambda_bar: f64,
    jackson: bool,
) -> Result<ChebyshevApprox> {
    fit_fn(|x| kernel.eval(x), degree, lambda_bar, jackson)
}

fn check_interval(p: &ChebyshevApprox, l: &Laplacian) -> Result<()> {
    let bound = l.lambda_max_bound();
    if p.lambda_bar < bound * (1.0 - 1e-12) {
        return invalid(format!(
            "polynomial fitted on [0, {}] but the Laplacian spectrum is bounded by {bound}",
            p.lambda_bar
        ));
    }
    Ok(())
}

/// `p_j(L) f` for several expansions sharing one Chebyshev vector recurrence.
///
/// All expansions must share the same `lambda_bar`. Each output accumulates
/// its own terms in order, so the result for one expansion is identical to
/// applying it alone.
pub fn apply_many(ps: &[ChebyshevApprox], l: &Laplacian, f: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_len(l.n(), f.len())?;
    let Some(first) = ps.first() else {
        return Ok(Vec::new());
    };
    for p in ps {
        check_interval(p, l)?;
        if p.lambda_bar != first.lambda_bar {
            return invalid("fused application needs a common lambda_bar");
        }
    }
    let n = f.len();
    let degree = ps.iter().map(ChebyshevApprox::degree).max().unwrap_or(0);
    let a = 2.0 / first.lambda_bar;

    let mut outs: Vec<Vec<f64>> = ps
        .iter()
        .map(|p| f.iter().map(|v| p.coefficients[0] * v).collect())
        .collect();
    if degree == 0 {
        return Ok(outs);
    }
    let accumulate = |outs: &mut [Vec<f64>], k: usize, t: &[f64]| {
        for (out, p) in outs.iter_mut().zip(ps) {
            if let Some(&c) = p.coefficients.get(k) {
                out.iter_mut().zip(t).for_each(|(o, v)| *o += c * v);
            }
        }
    };

    let mut lt = vec![0.0; n];
    let mut prev = f.to_vec();
    l.apply_into(&prev, &mut lt);
    let mut cur: Vec<f64> = lt.iter().zip(&prev).map(|(x, v)| a * x - v).collect();
    accumulate(&mut outs, 1, &cur);
    for k in 2..=degree {
        l.apply_into(&cur, &mut lt);
        for i in 0..n {
            prev[i] = 2.0 * (a * lt[i] - cur[i]) - prev[i];
        }
        std::mem::swap(&mut prev, &mut cur);
        accumulate(&mut outs, k, &cur);
    }
    Ok(outs)
}

/// Largest `|kernel(lambda) - p(lambda)|` over `n_grid` uniform points of
/// `[0, p.lambda_bar]`.
pub fn sup_error(p: &ChebyshevApprox, kernel: &Kernel, n_grid: usize) -> f64 {
    sup_error_fn(p, |x| kernel.eval(x), n_grid)
}

pub fn sup_error_fn(p: &ChebyshevApprox, f: impl Fn(f64) -> f64, n_grid: usize) -> f64 {
    let n_grid = n_grid.max(2);
    (0..n_grid)
        .map(|i| {
            let x = p.lambda_bar * i as f64 / (n_grid - 1) as f64;
            (f(x) - p.eval(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// The polynomial atom `p(L) delta_i`.
pub fn atom(p: &ChebyshevApprox, l: &Laplacian, i: usize) -> Result<Vec<f64>> {
    if i >= l.n() {
        return invalid(format!("vertex {i} out of range for {} vertices", l.n()));
    }
    let mut delta = vec![0.0; l.n()];
    delta[i] = 1.0;
    p.apply(l, &delta)
}

/// Moments `v^T T_k(L~) v`, `k = 0..=degree`, with `L~ = (2/lambda_bar) L - I`.
pub fn chebyshev_moments(l: &Laplacian, lambda_bar: f64, v: &[f64], degree: usize) -> Vec<f64> {
    let n = v.len();
    let a = 2.0 / lambda_bar;
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let mut out = Vec::with_capacity(degree + 1);
    out.push(dot(v, v));
    if degree == 0 {
        return out;
    }
    let mut lt = vec![0.0; n];
    let mut prev = v.to_vec();
    l.apply_into(&prev, &mut lt);
    let mut cur: Vec<f64> = lt.iter().zip(&prev).map(|(x, p)| a * x - p).collect();
    out.push(dot(v, &cur));
    for _ in 2..=degree {
        l.apply_into(&cur, &mut lt);
        for i in 0..n {
            prev[i] = 2.0 * (a * lt[i] - cur[i]) - prev[i];
        }
        std::mem::swap(&mut prev, &mut cur);
        out.push(dot(v, &cur));
    }
    out
}

/// Chebyshev coefficients of the step `1{lambda <= z}` on `[0, lambda_bar]`.
pub fn indicator_coefficients(z: f64, lambda_bar: f64, degree: usize) -> Vec<f64> {
    let theta = (2.0 * z / lambda_bar - 1.0).clamp(-1.0, 1.0).acos();
    let mut c = Vec::with_capacity(degree + 1);
    c.push((PI - theta) / PI);
    for k in 1..=degree {
        let k = k as f64;
        c.push(-2.0 * (k * theta).sin() / (k * PI));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigendecompose;
    use crate::generators;
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use crate::kernel::KernelShape;

    #[test]
    fn constant_and_linear_kernels_are_exact() {
        for k in [0, 1, 5, 30] {
            let p = fit_fn(|_| 1.0, k, 4.0, false).unwrap();
            assert!(sup_error_fn(&p, |_| 1.0, 1000) <= 1e-12);
        }
        let p = fit_fn(|x| x, 3, 4.0, false).unwrap();
        assert!((p.coefficients()[0] - 2.0).abs() < 1e-13);
        assert!((p.coefficients()[1] - 2.0).abs() < 1e-13);
        assert!(sup_error_fn(&p, |x| x, 1000) <= 1e-12);
    }

    #[test]
    fn heat_kernel_converges() {
        let lb = 7.5;
        let heat = Kernel::heat(10.0 / lb, lb);
        let p = chebyshev_fit(&heat, 40, lb, false).unwrap();
        assert!(sup_error(&p, &heat, 1000) <= 1e-8);
        let errs: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&k| sup_error(&chebyshev_fit(&heat, k, lb, false).unwrap(), &heat, 1000))
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn jackson_factors_shrink() {
        assert_eq!(jackson_factors(0), vec![1.0]);
        for k in [1, 5, 40] {
            let g = jackson_factors(k);
            assert!((g[0] - 1.0).abs() < 1e-14);
            assert!(g.iter().all(|&x| (-1e-14..=1.0 + 1e-14).contains(&x)));
        }
    }

    #[test]
    fn jackson_reduces_overshoot() {
        let band = Kernel::new(KernelShape::IdealBand { lo: 1.0, hi: 2.0, closed_top: false }, 4.0);
        let peak = |jackson| {
            let p = chebyshev_fit(&band, 40, 4.0, jackson).unwrap();
            (0..2000).map(|i| p.eval(4.0 * i as f64 / 1999.0)).fold(f64::MIN, f64::max)
        };
        assert!(peak(true) - 1.0 < peak(false) - 1.0);
    }

    #[test]
    fn apply_matches_spectral_oracle() {
        let l = build_laplacian(&generators::path(3), LaplacianKind::Combinatorial).unwrap();
        let f = [0.3, -1.0, 2.0];
        let one = fit_fn(|_| 1.0, 0, 3.0, false).unwrap();
        assert_eq!(one.apply(&l, &f).unwrap(), f.to_vec());
        let lin = fit_fn(|x| x, 1, 3.0, false).unwrap();
        let lf = l.apply(&f);
        for (a, b) in lin.apply(&l, &f).unwrap().iter().zip(&lf) {
            assert!((a - b).abs() < 1e-12);
        }
        let heat = Kernel::heat(2.0, 3.0);
        let p = chebyshev_fit(&heat, 40, 3.0, false).unwrap();
        let eig = eigendecompose(&l, 10).unwrap();
        let oracle = eig.apply_fn(|x| heat.eval(x), &f).unwrap();
        for (a, b) in p.apply(&l, &f).unwrap().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn fused_application_is_bit_identical() {
        let l = build_laplacian(&generators::grid(5, 6).graph, LaplacianKind::Combinatorial).unwrap();
        let lb = l.lambda_max_bound();
        let ps: Vec<_> = [3, 17, 40]
            .iter()
            .map(|&k| fit_fn(|x| (-x).exp() * (1.0 + x), k, lb, k % 2 == 1).unwrap())
            .collect();
        let f: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let fused = apply_many(&ps, &l, &f).unwrap();
        for (p, out) in ps.iter().zip(&fused) {
            assert_eq!(&p.apply(&l, &f).unwrap(), out);
        }
    }

    #[test]
    fn interval_too_small_errors() {
        let l = build_laplacian(&generators::path(3), LaplacianKind::Combinatorial).unwrap();
        let p = fit_fn(|x| x, 1, 2.0, false).unwrap();
        assert!(p.apply(&l, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn localization_on_path() {
        let l = build_laplacian(&generators::path(5), LaplacianKind::Combinatorial).unwrap();
        let p = fit_fn(|x| (-x).exp(), 2, l.lambda_max_bound(), false).unwrap();
        let a = atom(&p, &l, 0).unwrap();
        assert!(a[3].abs() <= 1e-14 && a[4].abs() <= 1e-14);
        assert!(a[2].abs() > 0.0);
    }

    #[test]
    fn moments_and_indicator_count_eigenvalues() {
        let l = build_laplacian(&generators::path(3), LaplacianKind::Combinatorial).unwrap();
        // trace estimates with the full basis are exact traces
        let mut trace = vec![0.0; 201];
        for i in 0..3 {
            let mut e = vec![0.0; 3];
            e[i] = 1.0;
            for (t, m) in trace.iter_mut().zip(chebyshev_moments(&l, 3.0, &e, 200)) {
                *t += m;
            }
        }
        let c = indicator_coefficients(2.0, 3.0, 200);
        let g = jackson_factors(200);
        let count: f64 = c.iter().zip(&g).zip(&trace).map(|((c, g), t)| c * g * t).sum();
        assert!((count - 2.0).abs() < 0.05, "{count}");
    }
}
