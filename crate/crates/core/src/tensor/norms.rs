//! Matrix norms, the Hilbert–Schmidt inner product and PSD utilities.

use serde::{Deserialize, Serialize};

use super::eig::hermitian_eig;
use super::{ComplexMatrix, C64};
use crate::error::Result;

/// `<A, B> = Tr(A* B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum()
}

pub fn fro_norm(m: &ComplexMatrix) -> f64 {
    m.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.is_square() && m.is_hermitian(super::HERM_TOL) {
        return Ok(hermitian_eig(m)?.values.iter().map(|l| l.abs()).collect());
    }
    let g = if m.rows() <= m.cols() {
        m.matmul(&m.dagger())
    } else {
        m.dagger().matmul(m)
    };
    Ok(hermitian_eig(&g)?
        .values
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect())
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.into_iter().fold(0.0, f64::max))
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.into_iter().sum())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormSummary {
    pub op_a: f64,
    pub op_b: f64,
    pub fro_a: f64,
    pub fro_b: f64,
    pub trace_a: f64,
    pub trace_b: f64,
    pub inner_re: f64,
    pub inner_im: f64,
}

pub fn norms_and_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<NormSummary> {
    let inner = hs_inner(a, b);
    Ok(NormSummary {
        op_a: op_norm(a)?,
        op_b: op_norm(b)?,
        fro_a: fro_norm(a),
        fro_b: fro_norm(b),
        trace_a: trace_norm(a)?,
        trace_b: trace_norm(b)?,
        inner_re: inner.re,
        inner_im: inner.im,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD up to `tol`, scaled by `max(1, ||M||_op)`.
pub fn psd_check(m: &ComplexMatrix, tol: f64) -> Result<PsdReport> {
    let e = hermitian_eig(m)?;
    let scale = e.max().abs().max(e.min().abs()).max(1.0);
    Ok(PsdReport {
        is_psd: e.min() >= -tol * scale,
        min_eigenvalue: e.min(),
    })
}

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
pub fn psd_project(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = hermitian_eig(m)?;
    Ok(e.reconstruct_with(|l| l.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng_from_seed};

    #[test]
    fn norm_ordering() {
        let mut rng = rng_from_seed(21);
        let m = random_hermitian(5, &mut rng);
        let op = op_norm(&m).unwrap();
        let fro = fro_norm(&m);
        let tr = trace_norm(&m).unwrap();
        assert!(op <= fro + 1e-12 && fro <= tr + 1e-12);
        assert!(tr <= 5f64.sqrt() * fro + 1e-12);
    }

    #[test]
    fn non_square_singular_values() {
        let m = ComplexMatrix::from_real_rows(&[&[3.0, 0.0, 0.0], &[0.0, 4.0, 0.0]]);
        assert!((op_norm(&m).unwrap() - 4.0).abs() < 1e-12);
        assert!((trace_norm(&m).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn projection_clips() {
        let m = ComplexMatrix::from_real_diag(&[2.0, -1.0]);
        let p = psd_project(&m).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 0.0])) < 1e-14);
        let r = psd_check(&m, 1e-9).unwrap();
        assert!(!r.is_psd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
    }
}
