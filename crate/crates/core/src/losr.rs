//! LOSR channels: the certified ball around the completely noisy channel,
//! conversion of Q-separable certificates into channel mixtures, and
//! realization of a mixture as shared randomness plus local channels.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choi::{choi_of_map, kraus_of_choi, product_choi, KrausChannel, SystemLayout};
use crate::error::{Error, Result};
use crate::qspace::{ball_parameters, SpaceKind};
use crate::random::random_kraus_operators;
use crate::sep::{identity_minus_any, span_residual, ProductTerm, SeparableCertificate};
use crate::tensor::{
    fro_norm, kron, partial_trace, permute_subsystems, ComplexMatrix, FactorShape, ZERO,
};

/// Eigenvalue cutoff when extracting Kraus operators from a Choi matrix.
pub const KRAUS_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LosrTerm {
    pub prob: f64,
    /// One channel per party, `X_i -> A_i`.
    pub channels: Vec<KrausChannel>,
}

/// Convex combination of product channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LosrForm {
    pub layout: SystemLayout,
    pub mixture: Vec<LosrTerm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LosrFormReport {
    pub prob_sum: f64,
    pub min_prob: f64,
    pub max_tp_residual: f64,
    pub pass: bool,
}

impl LosrForm {
    /// Random mixture of `terms` product channels with Kraus rank `rank`.
    pub fn random<R: Rng + ?Sized>(
        layout: &SystemLayout,
        terms: usize,
        rank: usize,
        rng: &mut R,
    ) -> Self {
        let probs = crate::random::random_probabilities(terms, rng);
        let mixture = probs
            .into_iter()
            .map(|prob| LosrTerm {
                prob,
                channels: layout
                    .parties()
                    .iter()
                    .map(|p| {
                        KrausChannel::new(random_kraus_operators(p.din, p.dout, rank, rng))
                            .expect("consistent shapes")
                    })
                    .collect(),
            })
            .collect();
        Self {
            layout: layout.clone(),
            mixture,
        }
    }

    fn check_shapes(&self) -> Result<()> {
        for t in &self.mixture {
            if t.channels.len() != self.layout.m() {
                return Err(Error::usage("each mixture term needs one channel per party"));
            }
            for (c, p) in t.channels.iter().zip(self.layout.parties()) {
                if c.din() != p.din || c.dout() != p.dout {
                    return Err(Error::usage("channel shape does not match layout"));
                }
            }
        }
        Ok(())
    }

    /// Probabilities sum to one and every channel is trace preserving.
    pub fn validate(&self, tol: f64) -> Result<LosrFormReport> {
        self.check_shapes()?;
        let prob_sum: f64 = self.mixture.iter().map(|t| t.prob).sum();
        let min_prob = self.mixture.iter().map(|t| t.prob).fold(f64::INFINITY, f64::min);
        let max_tp_residual = self
            .mixture
            .iter()
            .flat_map(|t| t.channels.iter().map(|c| c.tp_residual()))
            .fold(0.0, f64::max);
        Ok(LosrFormReport {
            prob_sum,
            min_prob,
            max_tp_residual,
            pass: (prob_sum - 1.0).abs() <= tol && min_prob >= 0.0 && max_tp_residual <= tol,
        })
    }

    /// Choi matrix of the mixture, global ordering.
    pub fn choi(&self) -> Result<ComplexMatrix> {
        self.check_shapes()?;
        let d = self.layout.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for t in &self.mixture {
            let js: Vec<ComplexMatrix> = t.channels.iter().map(|c| c.choi_matrix()).collect();
            let refs: Vec<&ComplexMatrix> = js.iter().collect();
            acc += &product_choi(&self.layout, &refs)?.scale(t.prob);
        }
        Ok(acc)
    }

    /// Applies the mixture to an operator on `X_1 .. X_m`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_shapes()?;
        x.check_dim(self.layout.d_x(), "channel input")?;
        let d_a = self.layout.d_a();
        let mut acc = ComplexMatrix::zeros(d_a, d_a);
        for t in &self.mixture {
            let mut y = x.clone();
            let mut shape = self.layout.input_shape();
            for (i, c) in t.channels.iter().enumerate() {
                let (ny, ns) = apply_local(&y, &shape, i, c)?;
                y = ny;
                shape = ns;
            }
            acc += &y.scale(t.prob);
        }
        Ok(acc)
    }
}

/// Applies `ch` to factor `f` of a square operator with the given shape.
pub fn apply_local(
    rho: &ComplexMatrix,
    shape: &FactorShape,
    f: usize,
    ch: &KrausChannel,
) -> Result<(ComplexMatrix, FactorShape)> {
    rho.check_dim(shape.total(), "operator")?;
    if f >= shape.len() || shape.dims()[f] != ch.din() {
        return Err(Error::usage("local channel does not match factor"));
    }
    let dims = shape.dims();
    let left: usize = dims[..f].iter().product();
    let right: usize = dims[f + 1..].iter().product();
    let (din, dout) = (ch.din(), ch.dout());
    let mut new_dims = dims.to_vec();
    new_dims[f] = dout;
    let n = left * dout * right;
    let mut out = ComplexMatrix::zeros(n, n);
    let idx_in = |l: usize, x: usize, r: usize| (l * din + x) * right + r;
    let idx_out = |l: usize, a: usize, r: usize| (l * dout + a) * right + r;
    for k in ch.ops() {
        // tmp = (I (x) K (x) I) rho, shape n x (left din right)
        let m_in = left * din * right;
        let mut tmp = ComplexMatrix::zeros(n, m_in);
        for l in 0..left {
            for r in 0..right {
                for a in 0..dout {
                    let row = idx_out(l, a, r);
                    for x in 0..din {
                        let kv = k[(a, x)];
                        if kv == ZERO {
                            continue;
                        }
                        let src = idx_in(l, x, r);
                        for c in 0..m_in {
                            tmp[(row, c)] += kv * rho[(src, c)];
                        }
                    }
                }
            }
        }
        // out += tmp (I (x) K* (x) I)
        for row in 0..n {
            for l in 0..left {
                for r in 0..right {
                    for a in 0..dout {
                        let col = idx_out(l, a, r);
                        let mut s = ZERO;
                        for x in 0..din {
                            s += tmp[(row, idx_in(l, x, r))] * k[(a, x)].conj();
                        }
                        out[(row, col)] += s;
                    }
                }
            }
        }
    }
    Ok((out, FactorShape::new(new_dims)))
}

/// Certificate that `I - A` is an unnormalized LOSR operation, for `A` in
/// `span(Q_1 (x) .. (x) Q_m)` (global ordering) with `||A||_F <= 1/k`:
/// `I - A = (1 - k||A||_F) I + (k||A||_F I - A)`.
pub fn ball_certificate(a: &ComplexMatrix, layout: &SystemLayout) -> Result<SeparableCertificate> {
    a.check_dim(layout.dim(), "perturbation")?;
    let params = ball_parameters(layout);
    let a_fro = fro_norm(a);
    let ka = params.k * a_fro;
    if ka > 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "||A||_F = {a_fro:.6e} exceeds the ball radius 1/k = {:.6e}",
            1.0 / params.k
        )));
    }
    let grouped = layout.to_grouped(a)?;
    let r = span_residual(&grouped, layout, SpaceKind::Q)?;
    if r > 1e-8 * a_fro.max(1.0) {
        return Err(Error::contract("perturbation is outside the product of Q subspaces", r));
    }
    let inner = identity_minus_any(&grouped, layout, SpaceKind::Q)?;
    let mut terms = Vec::with_capacity(inner.terms.len() + 1);
    let id_weight = (1.0 - ka).max(0.0);
    if id_weight > crate::sep::ZERO_TERM {
        terms.push(ProductTerm {
            weight: id_weight,
            factors: layout
                .parties()
                .iter()
                .map(|p| ComplexMatrix::identity(p.block()))
                .collect(),
        });
    }
    terms.extend(inner.terms);
    Ok(SeparableCertificate {
        space: SpaceKind::Q,
        layout: layout.clone(),
        terms,
        target: ComplexMatrix::identity(layout.dim()) - grouped.hermitian_part(),
    })
}

/// A certificate turned into a channel mixture, with the scalar `s` such that
/// `target = s * J(mixture)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LosrConversion {
    pub form: LosrForm,
    pub normalization: f64,
}

/// Converts a Q-separable certificate into a mixture of product channels.
///
/// Every factor `P_i` in `Q_i` is PSD with `Tr_A P_i = lambda_i I`,
/// `lambda_i = tr(P_i)/din_i`, so `P_i / lambda_i` is a channel's Choi matrix.
/// Term probabilities are `w Prod lambda_i / s` with `s = sum_j w_j Prod lambda_i`.
pub fn certificate_to_losr(cert: &SeparableCertificate) -> Result<LosrConversion> {
    if cert.space != SpaceKind::Q {
        return Err(Error::usage("LOSR conversion needs a certificate over Q subspaces"));
    }
    let layout = &cert.layout;
    let mut raw: Vec<(f64, Vec<KrausChannel>)> = Vec::with_capacity(cert.terms.len());
    for t in &cert.terms {
        if t.factors.len() != layout.m() {
            return Err(Error::usage("term factor count does not match layout"));
        }
        let mut scale = t.weight;
        let mut chans = Vec::with_capacity(layout.m());
        for (f, p) in t.factors.iter().zip(layout.parties()) {
            let lambda = f.trace().re / p.din as f64;
            if lambda <= 1e-14 {
                // PSD with vanishing partial trace is zero.
                scale = 0.0;
                break;
            }
            scale *= lambda;
            chans.push(kraus_of_choi(&f.scale(1.0 / lambda), p.din, p.dout, KRAUS_CUTOFF)?);
        }
        if scale > 0.0 {
            raw.push((scale, chans));
        }
    }
    let s: f64 = raw.iter().map(|(w, _)| w).sum();
    if s <= 0.0 {
        return Err(Error::Precondition("certificate has no nonzero terms".into()));
    }

    // The target scaled by 1/s must be trace preserving.
    let global = layout.to_global(&cert.target)?;
    let outputs: Vec<usize> = (0..layout.m()).collect();
    let (ta, _) = partial_trace(&global, &layout.global_shape(), &outputs)?;
    let resid = fro_norm(&(ta.scale(1.0 / s) - ComplexMatrix::identity(layout.d_x())));
    if resid > 1e-8 {
        return Err(Error::contract("normalized target is not trace preserving", resid));
    }

    let mixture = raw
        .into_iter()
        .map(|(w, channels)| LosrTerm { prob: w / s, channels })
        .collect();
    Ok(LosrConversion {
        form: LosrForm {
            layout: layout.clone(),
            mixture,
        },
        normalization: s,
    })
}

/// Shared randomness `sigma = sum_j p_j |j..j><j..j|` on `E_1 (x) .. (x) E_m`
/// (`dim E_i = t`) and local channels `Psi_i: X_i (x) E_i -> A_i` with Kraus
/// operators `K (x) e_j*` for each Kraus operator `K` of the `j`-th term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LosrRealization {
    pub layout: SystemLayout,
    /// Diagonal of `sigma` on the matched indices `(j, .., j)`.
    pub weights: Vec<f64>,
    pub local_ops: Vec<KrausChannel>,
}

pub fn realize_shared_randomness(form: &LosrForm) -> Result<LosrRealization> {
    form.check_shapes()?;
    let t = form.mixture.len();
    if t == 0 {
        return Err(Error::usage("empty mixture"));
    }
    let mut local_ops = Vec::with_capacity(form.layout.m());
    for (i, p) in form.layout.parties().iter().enumerate() {
        let mut ops = Vec::new();
        for (j, term) in form.mixture.iter().enumerate() {
            for k in term.channels[i].ops() {
                let mut e = ComplexMatrix::zeros(1, t);
                e[(0, j)] = crate::tensor::C64::new(1.0, 0.0);
                // (K (x) e_j*)[a, x t + j] = K[a, x]
                ops.push(kron(k, &e));
            }
        }
        let ch = KrausChannel::new(ops)?;
        debug_assert_eq!(ch.din(), p.din * t);
        local_ops.push(ch);
    }
    Ok(LosrRealization {
        layout: form.layout.clone(),
        weights: form.mixture.iter().map(|x| x.prob).collect(),
        local_ops,
    })
}

impl LosrRealization {
    pub fn aux_dim(&self) -> usize {
        self.weights.len()
    }

    /// Dense `sigma` on `E_1 (x) .. (x) E_m`.
    pub fn sigma(&self) -> ComplexMatrix {
        let t = self.aux_dim();
        let m = self.layout.m();
        let n = t.pow(m as u32);
        let mut s = ComplexMatrix::zeros(n, n);
        for (j, &p) in self.weights.iter().enumerate() {
            let idx = (0..m).fold(0, |acc, _| acc * t + j);
            s[(idx, idx)] = crate::tensor::C64::new(p, 0.0);
        }
        s
    }

    /// `(Psi_1 (x) .. (x) Psi_m)(X (x) sigma)`, built densely; use small `t`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let l = &self.layout;
        x.check_dim(l.d_x(), "channel input")?;
        let m = l.m();
        let t = self.aux_dim();
        let joint = kron(x, &self.sigma());
        let mut dims: Vec<usize> = l.parties().iter().map(|p| p.din).collect();
        dims.extend(std::iter::repeat_n(t, m));
        let shape = FactorShape::new(dims);
        // X_1..X_m E_1..E_m -> (X_1 E_1)..(X_m E_m)
        let perm: Vec<usize> = (0..m).flat_map(|i| [i, m + i]).collect();
        let (grouped, gshape) = permute_subsystems(&joint, &shape, &perm)?;
        let merged = FactorShape::new(
            gshape.dims().chunks(2).map(|c| c[0] * c[1]).collect(),
        );
        let mut y = grouped;
        let mut cur = merged;
        for (i, ch) in self.local_ops.iter().enumerate() {
            let (ny, ns) = apply_local(&y, &cur, i, ch)?;
            y = ny;
            cur = ns;
        }
        Ok(y)
    }

    /// Choi matrix of the assembled channel, global ordering.
    pub fn choi(&self) -> Result<ComplexMatrix> {
        let l = &self.layout;
        let err = std::cell::RefCell::new(None);
        let j = choi_of_map(l.d_x(), l.d_a(), |x| match self.apply(x) {
            Ok(y) => y,
            Err(e) => {
                *err.borrow_mut() = Some(e);
                ComplexMatrix::zeros(l.d_a(), l.d_a())
            }
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(j),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;

    #[test]
    fn identity_certificate_gives_noisy_channels() {
        let l = SystemLayout::uniform(2, 2).unwrap();
        let cert = ball_certificate(&ComplexMatrix::zeros(16, 16), &l).unwrap();
        assert_eq!(cert.terms.len(), 1);
        let conv = certificate_to_losr(&cert).unwrap();
        assert_eq!(conv.form.mixture.len(), 1);
        assert!((conv.normalization - 4.0).abs() < 1e-12);
        let j = conv.form.choi().unwrap();
        assert!(j.max_abs_diff(&ComplexMatrix::identity(16).scale(0.25)) < 1e-12);
    }

    #[test]
    fn radius_boundary_is_enforced() {
        let l = SystemLayout::uniform(2, 2).unwrap();
        let k = ball_parameters(&l).k;
        let a = ComplexMatrix::identity(16).scale(1.01 / (k * 4.0));
        assert!(matches!(ball_certificate(&a, &l), Err(Error::Precondition(_))));
    }

    #[test]
    fn single_term_realization() {
        let mut rng = rng_from_seed(61);
        let l = SystemLayout::uniform(2, 2).unwrap();
        let form = LosrForm::random(&l, 1, 2, &mut rng);
        let r = realize_shared_randomness(&form).unwrap();
        assert_eq!(r.aux_dim(), 1);
        assert_eq!(r.sigma(), ComplexMatrix::identity(1));
        assert!(r.choi().unwrap().max_abs_diff(&form.choi().unwrap()) < 1e-12);
    }

    #[test]
    fn local_application_matches_tensor_channel() {
        let mut rng = rng_from_seed(62);
        let l = SystemLayout::new(vec![
            crate::choi::PartyDims::new(2, 3),
            crate::choi::PartyDims::new(3, 2),
        ])
        .unwrap();
        let form = LosrForm::random(&l, 1, 2, &mut rng);
        let x = crate::random::random_hermitian(6, &mut rng);
        let joint = form.mixture[0].channels[0].tensor(&form.mixture[0].channels[1]);
        assert!(form.apply(&x).unwrap().max_abs_diff(&joint.apply(&x).unwrap()) < 1e-12);
    }
}
