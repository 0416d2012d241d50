//! Exact dense eigendecomposition of a Laplacian (small and medium graphs).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_len, Error, Result};
use crate::laplacian::Laplacian;

/// Default vertex cap for dense eigendecomposition.
pub const DEFAULT_MAX_N: usize = 10_000;

/// `L = U diag(lambda) U^T` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, l: usize) -> Vec<f64> {
        self.eigenvectors.column(l).iter().copied().collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Graph Fourier transform `U^T f`.
    pub fn forward(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), f.len())?;
        let v = DVector::from_column_slice(f);
        Ok(self.eigenvectors.tr_mul(&v).as_slice().to_vec())
    }

    /// Inverse transform `U c`.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), coeffs.len())?;
        let v = DVector::from_column_slice(coeffs);
        Ok((&self.eigenvectors * v).as_slice().to_vec())
    }

    /// `U g(Lambda) U^T f` for a spectral response given per eigenvalue.
    pub fn apply_response(&self, response: &[f64], f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), response.len())?;
        let mut hat = self.forward(f)?;
        hat.iter_mut().zip(response).for_each(|(h, r)| *h *= r);
        self.inverse(&hat)
    }

    /// `U g(Lambda) U^T f` for a spectral function.
    pub fn apply_fn(&self, g: impl Fn(f64) -> f64, f: &[f64]) -> Result<Vec<f64>> {
        let response: Vec<f64> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        self.apply_response(&response, f)
    }
}

/// Full eigendecomposition of `L` for graphs with at most `max_n` vertices.
///
/// Eigenvalues are sorted ascending (stable with respect to the solver's
/// order) and each eigenvector is sign-fixed so that its largest-magnitude
/// entry is positive.
pub fn eigendecompose(l: &Laplacian, max_n: usize) -> Result<EigenDecomposition> {
    let n = l.n();
    if n > max_n {
        return Err(Error::TooLarge { n, max: max_n });
    }
    let eig = SymmetricEigen::new(l.to_dense());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 0..n {
            // first index wins ties so the sign rule is deterministic
            if col[i].abs() > col[pivot].abs() + 1e-12 {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    Ok(EigenDecomposition { eigenvalues: values, eigenvectors: vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::laplacian::{build_laplacian, LaplacianKind};

    fn comb(g: &crate::SparseGraph) -> Laplacian {
        build_laplacian(g, LaplacianKind::Combinatorial).unwrap()
    }

    fn assert_spectrum(eig: &EigenDecomposition, expect: &[f64]) {
        for (a, b) in eig.eigenvalues().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn small_spectra() {
        let e = crate::SparseGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert_spectrum(&eigendecompose(&comb(&e), 10).unwrap(), &[0.0, 2.0]);
        assert_spectrum(
            &eigendecompose(&comb(&generators::path(3)), 10).unwrap(),
            &[0.0, 1.0, 3.0],
        );
        assert_spectrum(
            &eigendecompose(&comb(&generators::cycle(4)), 10).unwrap(),
            &[0.0, 2.0, 2.0, 4.0],
        );
    }

    #[test]
    fn too_large_errors() {
        let l = comb(&generators::path(20));
        assert!(matches!(eigendecompose(&l, 10), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn orthonormal_and_residual() {
        for (seed, kind) in [(1, LaplacianKind::Combinatorial), (2, LaplacianKind::Normalized)] {
            let g = generators::sensor(120, 5, seed).graph;
            let l = build_laplacian(&g, kind).unwrap();
            let eig = eigendecompose(&l, DEFAULT_MAX_N).unwrap();
            let u = eig.eigenvectors();
            let gram = u.tr_mul(u);
            let id = DMatrix::<f64>::identity(120, 120);
            assert!((gram - id).amax() < 1e-10);
            let lam = DMatrix::from_diagonal(&DVector::from_column_slice(eig.eigenvalues()));
            let dense = l.to_dense();
            let resid = (&dense * u - u * lam).norm() / dense.norm();
            assert!(resid < 1e-8);
            assert!(eig.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
            assert!(eig.eigenvalues()[0].abs() < 1e-10);
            if kind == LaplacianKind::Normalized {
                assert!(eig.lambda_max() <= 2.0 + 1e-10);
            }
            for k in 0..120 {
                let col = eig.eigenvector(k);
                let big = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
                assert!(big > 0.0);
            }
        }
    }

    #[test]
    fn apply_fn_identity_and_laplacian() {
        let l = comb(&generators::path(6));
        let eig = eigendecompose(&l, 10).unwrap();
        let f: Vec<f64> = (0..6).map(|i| i as f64 * 0.5 - 1.0).collect();
        let id = eig.apply_fn(|_| 1.0, &f).unwrap();
        let lf = eig.apply_fn(|x| x, &f).unwrap();
        let direct = l.apply(&f);
        for i in 0..6 {
            assert!((id[i] - f[i]).abs() < 1e-12);
            assert!((lf[i] - direct[i]).abs() < 1e-12);
        }
    }
}
