//! Nearest CPTP Choi matrix by Dykstra's alternating projections between the
//! PSD cone and the trace-preserving affine set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{fro_norm, hermitian_eig, kron, partial_trace, psd_project, ComplexMatrix, FactorShape};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DykstraOptions {
    /// Feasibility target for the PSD side (absolute, on the smallest eigenvalue).
    pub tol: f64,
    /// Stop once successive iterates move less than this (Frobenius).
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            step_tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CptpProjection {
    pub choi: ComplexMatrix,
    pub iterations: usize,
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
    /// Weight of the completely noisy channel mixed in to clear rounding-level
    /// negative eigenvalues (zero when none were left).
    pub polish: f64,
}

/// `J - (1/dout) I_A (x) (Tr_A J - I_X)`: orthogonal projection onto `Tr_A J = I_X`.
pub fn tp_project(j: &ComplexMatrix, din: usize, dout: usize) -> Result<ComplexMatrix> {
    let shape = FactorShape::new(vec![dout, din]);
    let (t, _) = partial_trace(j, &shape, &[0])?;
    let corr = kron(
        &ComplexMatrix::identity(dout),
        &(t - ComplexMatrix::identity(din)),
    );
    Ok(j - &corr.scale(1.0 / dout as f64))
}

fn tp_distance(j: &ComplexMatrix, din: usize, dout: usize) -> Result<f64> {
    let (t, _) = partial_trace(j, &FactorShape::new(vec![dout, din]), &[0])?;
    Ok(fro_norm(&(t - ComplexMatrix::identity(din))))
}

/// Projects a Hermitian matrix on `A (x) X` onto the Choi matrices of channels.
pub fn cptp_project(
    m: &ComplexMatrix,
    din: usize,
    dout: usize,
    opts: DykstraOptions,
) -> Result<CptpProjection> {
    m.check_dim(din * dout, "Choi matrix")?;
    m.ensure_hermitian(crate::tensor::HERM_TOL, "matrix to project")?;
    let n = din * dout;
    let mut x = m.hermitian_part();
    let mut p = ComplexMatrix::zeros(n, n);
    let mut q = ComplexMatrix::zeros(n, n);
    let mut min_eig = f64::NEG_INFINITY;
    for it in 1..=opts.max_iter {
        let y = psd_project(&(&x + &p))?;
        p = &(&x + &p) - &y;
        let xn = tp_project(&(&y + &q), din, dout)?;
        q = &(&y + &q) - &xn;
        let moved = fro_norm(&(&xn - &x));
        x = xn;
        if moved <= opts.step_tol * x.max_abs().max(1.0) {
            min_eig = hermitian_eig(&x)?.min();
            if min_eig >= -opts.tol {
                return finish(x, din, dout, it, min_eig);
            }
        }
    }
    if min_eig == f64::NEG_INFINITY {
        min_eig = hermitian_eig(&x)?.min();
    }
    if min_eig >= -opts.tol {
        return finish(x, din, dout, opts.max_iter, min_eig);
    }
    Err(Error::Numerical(format!(
        "Dykstra projection did not settle in {} iterations (min eigenvalue {min_eig:.3e}, TP residual {:.3e})",
        opts.max_iter,
        tp_distance(&x, din, dout)?
    )))
}

// Mixes in I/dout (the completely noisy channel) just enough to make the
// result PSD; the TP constraint is untouched.
fn finish(x: ComplexMatrix, din: usize, dout: usize, iterations: usize, min_eig: f64) -> Result<CptpProjection> {
    let (choi, polish) = if min_eig < 0.0 {
        let floor = 1.0 / dout as f64;
        let t = -min_eig / (floor - min_eig);
        let noisy = ComplexMatrix::identity(din * dout).scale(floor);
        (&x.scale(1.0 - t) + &noisy.scale(t), t)
    } else {
        (x, 0.0)
    };
    let min_eigenvalue = hermitian_eig(&choi)?.min();
    let tp_residual = tp_distance(&choi, din, dout)?;
    Ok(CptpProjection {
        choi,
        iterations,
        min_eigenvalue,
        tp_residual,
        polish,
    })
}
