//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Matrices in this crate are at most a few hundred rows, where Jacobi is
//! accurate to working precision and simple to audit.

use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct EigOptions {
    /// Relative tolerance for the Hermiticity precondition.
    pub herm_tol: f64,
    /// Off-diagonal Frobenius mass at convergence, relative to `||M||_F`.
    pub conv_tol: f64,
    pub max_sweeps: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            herm_tol: super::HERM_TOL,
            conv_tol: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// Eigenvalues sorted descending; column `k` of `vectors` is the unit
/// eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `sum_k f(lambda_k) v_k v_k*`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .filter(|&k| w[k] != 0.0)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * w[k])
                .sum()
        })
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with(m, EigOptions::default())
}

pub fn hermitian_eig_with(m: &ComplexMatrix, opts: EigOptions) -> Result<HermitianEigen> {
    let n = m.check_square("eigen input")?;
    if m.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigen input".into()));
    }
    m.ensure_hermitian(opts.herm_tol, "eigen input")?;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let total = a.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = opts.conv_tol * total.max(f64::MIN_POSITIVE);

    let mut converged = n <= 1;
    for _ in 0..opts.max_sweeps {
        if converged {
            break;
        }
        let off = off_diag_norm(&a);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diag_norm(&a) > target {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge in {} sweeps",
            opts.max_sweeps
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diag_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Annihilates `a[p][q]` with a complex Givens rotation, accumulating into `v`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < f64::MIN_POSITIVE * 4.0 {
        return;
    }
    let n = a.rows();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let pc = phase.conj();

    // A <- G* A G with G = [[c, s phase], [-s conj(phase), c]] on the (p, q) plane.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * pc * s;
        a[(k, q)] = akp * phase * s + akq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * pc * s + aqk * c;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * pc * s;
        v[(k, q)] = vkp * phase * s + vkq * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng_from_seed};

    #[test]
    fn reconstructs_random_hermitian() {
        let mut rng = rng_from_seed(11);
        for n in [1, 2, 3, 7, 16] {
            let m = random_hermitian(n, &mut rng);
            let e = hermitian_eig(&m).unwrap();
            let back = e.reconstruct_with(|l| l);
            assert!(back.max_abs_diff(&m) < 1e-10, "n={n}");
            let vv = e.vectors.dagger().matmul(&e.vectors);
            assert!(vv.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-10);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn known_spectrum() {
        // Pauli Y has eigenvalues +1 and -1.
        let y = ComplexMatrix::from_vec(
            2,
            2,
            vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
        )
        .unwrap();
        let e = hermitian_eig(&y).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::Contract { .. })));
    }
}
