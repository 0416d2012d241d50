//! Small dense-vector helpers and a preconditioned conjugate gradient.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn mean(a: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().sum::<f64>() / a.len() as f64
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` of the returned iterate.
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for a symmetric positive (semi)definite operator.
///
/// `inv_diag`, when given, is the inverse of a diagonal (Jacobi)
/// preconditioner. Starts from zero and returns the iterate with the smallest
/// residual seen, together with a convergence flag.
pub fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    inv_diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, CgReport)
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (
            x,
            CgReport { iterations: 0, rel_residual: 0.0, converged: true },
        );
    }
    let precondition = |r: &[f64]| -> Vec<f64> {
        match inv_diag {
            Some(d) => r.iter().zip(d).map(|(ri, di)| ri * di).collect(),
            None => r.to_vec(),
        }
    };

    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best = x.clone();
    let mut best_res = 1.0;

    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return (
                best,
                CgReport { iterations: it - 1, rel_residual: best_res, converged: false },
            );
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let res = norm(&r) / b_norm;
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
        if res <= tol {
            return (
                best,
                CgReport { iterations: it, rel_residual: res, converged: true },
            );
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    (
        best,
        CgReport { iterations: max_iter, rel_residual: best_res, converged: false },
    )
}
