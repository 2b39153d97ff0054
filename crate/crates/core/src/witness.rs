//! Linear functionals `phi(X) = <H, X>` as evidence against LOSR membership.
//!
//! A functional that is nonnegative on every product of channel Choi matrices
//! is nonnegative on every LOSR Choi matrix, so a negative value on `J(Lambda)`
//! shows `Lambda` is not LOSR. Positivity on the product cone is only audited
//! here by a seeded see-saw search, so an accepted witness is evidence, not a
//! proof. Positivity for a fixed auxiliary dimension does not imply complete
//! positivity on the whole family of cones, and nothing here checks the latter.

use serde::{Deserialize, Serialize};

use crate::choi::SystemLayout;
use crate::error::{Error, Result};
use crate::games::seesaw::{seesaw_on_payoff, Strategy, StrategySearchConfig};
use crate::tensor::{hs_inner, ComplexMatrix};

pub const AUDIT_TOL: f64 = 1e-6;
pub const MARGIN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iterations: 40,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditResult {
    /// Smallest `<H, P_1 (x) .. (x) P_m>` found over channel Choi matrices `P_i`;
    /// an upper bound on the true minimum.
    pub min_value: f64,
    /// Product strategy attaining `min_value`.
    pub argmin: Strategy,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "H")]
    pub h: ComplexMatrix,
    pub audit: AuditResult,
    /// `<H, J>` on the operator under test.
    pub value: f64,
    /// `-value`; positive when the functional separates.
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// The audit found a product strategy with `<H, P> < -audit_tol`.
    AuditFailed,
    /// `<H, J>` is not below `-margin_tol`.
    NotSeparated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum Certification {
    Accepted { witness: Witness },
    Rejected { reason: Rejection, witness: Witness },
}

impl Certification {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Certification::Accepted { .. })
    }

    pub fn witness(&self) -> &Witness {
        match self {
            Certification::Accepted { witness } | Certification::Rejected { witness, .. } => witness,
        }
    }
}

/// Real part of `<H, J>`; errors if the imaginary part is not negligible.
pub fn functional_value(h: &ComplexMatrix, j: &ComplexMatrix) -> Result<f64> {
    if h.shape() != j.shape() || !h.is_square() {
        return Err(Error::usage("functional and operator dimensions differ"));
    }
    let v = hs_inner(h, j);
    let scale = crate::tensor::fro_norm(h) * crate::tensor::fro_norm(j);
    if v.im.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::usage(format!(
            "<H, J> has imaginary part {:.3e}; both must be Hermitian",
            v.im
        )));
    }
    Ok(v.re)
}

/// Heuristic minimum of `<H, P_1 (x) .. (x) P_m>` over channel Choi matrices
/// (trace `din_i`, the slice that determines positivity on the cone).
pub fn audit_positivity_on_cone(h: &ComplexMatrix, layout: &SystemLayout, cfg: &AuditConfig) -> Result<AuditResult> {
    let neg = h.scale(-1.0);
    let mut search = StrategySearchConfig::new(vec![1; layout.m()], cfg.restarts, cfg.seed);
    search.max_iterations = cfg.max_iterations;
    let out = seesaw_on_payoff(&neg, layout, &search)?;
    Ok(AuditResult {
        min_value: -out.value,
        argmin: out.strategy,
        restarts: cfg.restarts,
        seed: cfg.seed,
    })
}

/// Packages `H` as evidence that `J` (global ordering) is not LOSR.
pub fn certify_non_losr(
    h: &ComplexMatrix,
    j: &ComplexMatrix,
    layout: &SystemLayout,
    cfg: &AuditConfig,
) -> Result<Certification> {
    j.check_dim(layout.dim(), "Choi matrix")?;
    let value = functional_value(h, j)?;
    let audit = audit_positivity_on_cone(h, layout, cfg)?;
    let audit_ok = audit.min_value >= -AUDIT_TOL;
    let witness = Witness {
        h: h.clone(),
        audit,
        value,
        margin: -value,
    };
    Ok(if !audit_ok {
        Certification::Rejected {
            reason: Rejection::AuditFailed,
            witness,
        }
    } else if value < -MARGIN_TOL {
        Certification::Accepted { witness }
    } else {
        Certification::Rejected {
            reason: Rejection::NotSeparated,
            witness,
        }
    })
}
