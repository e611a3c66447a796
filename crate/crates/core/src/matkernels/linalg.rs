//! Thin wrappers over `nalgebra` for the decompositions the simulator needs.

use nalgebra::DMatrix;

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// Tolerance on `|H - H†|` accepted by [`matrix_exp`].
const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub(crate) fn from_na(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn determinant(m: &ComplexMatrix) -> Result<C64> {
    let n = m.ensure_square()?;
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(to_na(m).lu().determinant())
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.ensure_square()?;
    to_na(m)
        .lu()
        .try_inverse()
        .map(|inv| from_na(&inv))
        .ok_or(Error::Singular)
}

/// `M = left · diag(singular_values) · rightᵀ` with singular values
/// non-negative and in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub right: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_real_diagonal(&self.singular_values);
        self.left.matmul(&d).matmul(&self.right.transpose())
    }
}

/// Singular value decomposition of a square matrix, arranged so that the
/// right factor enters transposed (not adjoint). For real input both factors
/// are real orthogonal.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let n = m.ensure_square()?;
    let dec = to_na(m).svd(true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let sv = dec.singular_values;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    // M = U Σ V† = U Σ (V*)ᵀ, so the transposed-convention right factor is V*.
    let left = ComplexMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    let right = ComplexMatrix::from_fn(n, n, |i, j| v_t[(order[j], i)]);
    Ok(Svd {
        left,
        singular_values: order.iter().map(|&k| sv[k]).collect(),
        right,
    })
}

/// `exp(i · scale · H)` for Hermitian `H`, through its eigendecomposition.
pub fn matrix_exp(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    let n = h.ensure_square()?;
    let herr = h.hermiticity_error();
    if herr > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herr));
    }
    if !scale.is_finite() {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    // Symmetrise before handing to the Hermitian solver.
    let hs = to_na(h);
    let hs = (&hs + hs.adjoint()) * C64::new(0.5, 0.0);
    let eig = hs.symmetric_eigen();
    let v = eig.eigenvectors;
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| C64::from_polar(1.0, scale * lam))
        .collect();
    let vd = DMatrix::from_fn(n, n, |i, j| v[(i, j)] * phases[j]);
    Ok(from_na(&(vd * v.adjoint())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_of_identity() {
        let d = determinant(&ComplexMatrix::identity(5)).unwrap();
        assert!((d - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn svd_of_diagonal() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let s = svd(&m).unwrap();
        assert!((s.singular_values[0] - 2.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 1.0).abs() < 1e-14);
        assert!(s.reconstruct().max_abs_diff(&m) < 1e-12);
        for k in 0..2 {
            for j in 0..2 {
                let expect = if (k == 0 && j == 1) || (k == 1 && j == 0) { 1.0 } else { 0.0 };
                assert!((s.left[(k, j)].norm() - expect).abs() < 1e-12);
                assert!((s.right[(k, j)].norm() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_reconstructs_complex_input() {
        let m = ComplexMatrix::from_fn(4, 4, |i, j| {
            C64::new((i * 3 + j) as f64 * 0.37 - 1.0, (i as f64 - j as f64) * 0.21)
        });
        let s = svd(&m).unwrap();
        assert!(s.reconstruct().max_abs_diff(&m) < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = matrix_exp(&ComplexMatrix::zeros(3, 3), 1.7).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-14);
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let mut h = ComplexMatrix::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(matrix_exp(&h, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn singular_inverse_fails() {
        assert!(matches!(inverse(&ComplexMatrix::zeros(2, 2)), Err(Error::Singular)));
    }
}
