//! No-signaling checks for multi-party channels.
//!
//! Two independent tests: linear partial-trace constraints on the Choi matrix,
//! and the operational definition (inputs that agree on the parties outside
//! `K` give outputs that agree there after discarding `A_K`).

use serde::{Deserialize, Serialize};

use crate::choi::{apply_choi_matrix, ChoiOperator, SystemLayout};
use crate::error::Result;
use crate::qspace::{constraint_residuals, gram_schmidt, hermitian_basis};
use crate::random::{derive_seed, random_density, rng_from_seed};
use crate::tensor::{
    embed_identity, fro_norm, kron, partial_trace, permute_subsystems, ComplexMatrix, FactorShape,
};

pub const NOSIG_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoSignalMethod {
    Constraint,
    Semantic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoSignalEntry {
    /// Parties in `K`, 1-based.
    pub parties: Vec<usize>,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoSignalReport {
    pub method: NoSignalMethod,
    pub entries: Vec<NoSignalEntry>,
    pub pass: bool,
    pub tol: f64,
}

impl NoSignalReport {
    fn from_residuals(method: NoSignalMethod, res: Vec<(Vec<usize>, f64)>, tol: f64) -> Self {
        let entries: Vec<NoSignalEntry> = res
            .into_iter()
            .map(|(parties, residual)| NoSignalEntry {
                parties,
                residual,
                pass: residual <= tol,
            })
            .collect();
        let pass = entries.iter().all(|e| e.pass);
        Self {
            method,
            entries,
            pass,
            tol,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn entry(&self, parties: &[usize]) -> Option<&NoSignalEntry> {
        self.entries.iter().find(|e| e.parties == parties)
    }
}

/// `Tr_{A_K} J = Q (x) I_{X_K}` for every subset `K`.
pub fn check_constraints(j: &ChoiOperator, tol: f64) -> Result<NoSignalReport> {
    let g = j.global_matrix()?;
    g.ensure_hermitian(crate::tensor::HERM_TOL, "Choi matrix")?;
    let res = constraint_residuals(&g, j.layout())?
        .into_iter()
        .map(|r| (r.parties, r.residual))
        .collect();
    Ok(NoSignalReport::from_residuals(NoSignalMethod::Constraint, res, tol))
}

/// Orthonormal basis of `{B Hermitian on X : Tr_{X_K} B = 0}`.
pub fn kernel_basis(layout: &SystemLayout, k: &[usize]) -> Result<Vec<ComplexMatrix>> {
    let shape = layout.input_shape();
    let rest: Vec<usize> = (0..layout.m()).filter(|i| !k.contains(i)).collect();
    let d_k: usize = k.iter().map(|&i| layout.party(i).din).product();
    let projected = hermitian_basis(layout.d_x())
        .into_iter()
        .map(|b| kernel_projection(&b, &shape, k, &rest, d_k))
        .collect::<Result<Vec<_>>>()?;
    Ok(gram_schmidt(projected))
}

// B - embed(Tr_{X_K} B) (x) I_{X_K} / d_K: the orthogonal projection onto the kernel.
fn kernel_projection(
    b: &ComplexMatrix,
    shape: &FactorShape,
    k: &[usize],
    rest: &[usize],
    d_k: usize,
) -> Result<ComplexMatrix> {
    let (t, _) = partial_trace(b, shape, k)?;
    let fill = if rest.is_empty() {
        ComplexMatrix::identity(b.rows()).scale_c(t[(0, 0)])
    } else {
        embed_identity(&t, shape, rest)?
    };
    Ok(b - &fill.scale(1.0 / d_k as f64))
}

/// `rho_{K^c} (x) tau_K` rearranged into the input ordering.
fn matched_input(
    rho: &ComplexMatrix,
    tau: &ComplexMatrix,
    shape: &FactorShape,
    k: &[usize],
    rest: &[usize],
) -> Result<ComplexMatrix> {
    let (marg, _) = partial_trace(rho, shape, k)?;
    if rest.is_empty() {
        return Ok(tau.scale_c(marg[(0, 0)]));
    }
    let joint = kron(&marg, tau);
    // joint is ordered (rest, K); invert that ordering.
    let order: Vec<usize> = rest.iter().chain(k).copied().collect();
    let joint_shape = shape.sub_shape(&order);
    let mut inv = vec![0; order.len()];
    for (pos, &f) in order.iter().enumerate() {
        inv[f] = pos;
    }
    Ok(permute_subsystems(&joint, &joint_shape, &inv)?.0)
}

/// Operational test: for each `K`, the linearized form on a kernel basis plus
/// `trials` random input pairs with equal `X_{K^c}` marginals.
pub fn check_semantic(j: &ChoiOperator, trials: usize, seed: u64, tol: f64) -> Result<NoSignalReport> {
    let layout = j.layout();
    let g = j.global_matrix()?;
    g.ensure_hermitian(crate::tensor::HERM_TOL, "Choi matrix")?;
    let (d_x, d_a, m) = (layout.d_x(), layout.d_a(), layout.m());
    let in_shape = layout.input_shape();
    let out_shape = layout.output_shape();
    let apply = |x: &ComplexMatrix| apply_choi_matrix(&g, d_x, d_a, x);
    let discard = |y: &ComplexMatrix, k: &[usize]| -> Result<f64> {
        Ok(fro_norm(&partial_trace(y, &out_shape, k)?.0))
    };

    let mut res = Vec::with_capacity(1 << m);
    for mask in 0..(1usize << m) {
        let k: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let parties: Vec<usize> = k.iter().map(|i| i + 1).collect();
        if k.is_empty() {
            res.push((parties, 0.0));
            continue;
        }
        let rest: Vec<usize> = (0..m).filter(|i| !k.contains(i)).collect();
        let d_k: usize = k.iter().map(|&i| layout.party(i).din).product();
        let mut worst: f64 = 0.0;
        for b in kernel_basis(layout, &k)? {
            worst = worst.max(discard(&apply(&b)?, &k)?);
        }
        let mut rng = rng_from_seed(derive_seed(seed, mask as u64));
        for _ in 0..trials {
            let rho = random_density(d_x, &mut rng);
            let tau = random_density(d_k, &mut rng);
            let sigma = matched_input(&rho, &tau, &in_shape, &k, &rest)?;
            worst = worst.max(discard(&(apply(&rho)? - apply(&sigma)?), &k)?);
        }
        res.push((parties, worst));
    }
    Ok(NoSignalReport::from_residuals(NoSignalMethod::Semantic, res, tol))
}
