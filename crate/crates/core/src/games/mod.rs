//! One-round games between a referee and cooperating players.
//!
//! The referee samples a question `i` with probability `pi[i]`, prepares
//! `rho_i` on `V (x) X_1 (x) .. (x) X_m`, keeps `V`, and after the players'
//! channel acts applies `V_i` on `V (x) A` and measures `{Pi_accept, I - Pi_accept}`.
//! The winning probability of a channel is `<R_accept, J(Lambda)>` for a PSD
//! payoff operator computed by [`payoff_operator`].

pub mod cptp;
pub mod seesaw;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::choi::{ChoiOperator, KrausChannel, SystemLayout};
use crate::error::{Error, Result};
use crate::losr::ball_certificate;
use crate::qspace::{ball_parameters, in_tensor_q, MEMBERSHIP_TOL};
use crate::sep::{verify_certificate, VerifyTolerances};
use crate::tensor::{fro_norm, hermitian_eig, hs_inner, kron, psd_check, ComplexMatrix, C64};

pub use cptp::{cptp_project, CptpProjection, DykstraOptions};
pub use seesaw::{seesaw_on_payoff, SeesawOutcome, Strategy, StrategySearchConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameDims {
    /// Dimension of the referee's private register.
    pub v: usize,
    pub players: SystemLayout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub q: usize,
    pub pi: Vec<f64>,
    pub rho: Vec<ComplexMatrix>,
    #[serde(rename = "V")]
    pub v_ops: Vec<ComplexMatrix>,
    pub accept: ComplexMatrix,
    pub dims: GameDims,
}

impl Game {
    pub fn layout(&self) -> &SystemLayout {
        &self.dims.players
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.layout();
        if l.m() != 2 {
            return Err(Error::usage("games are defined for two players"));
        }
        let dv = self.dims.v;
        if self.q == 0 || self.pi.len() != self.q || self.rho.len() != self.q || self.v_ops.len() != self.q {
            return Err(Error::usage("q, pi, rho and V must agree in length"));
        }
        if self.pi.iter().any(|&p| p < 0.0) || (self.pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::usage("pi must be a probability vector"));
        }
        for r in &self.rho {
            r.check_dim(dv * l.d_x(), "referee state")?;
            r.ensure_hermitian(1e-10, "referee state")?;
            if !psd_check(r, 1e-10)?.is_psd || (r.trace().re - 1.0).abs() > 1e-10 {
                return Err(Error::usage("referee states must be density matrices"));
            }
        }
        let n = dv * l.d_a();
        for u in &self.v_ops {
            u.check_dim(n, "referee unitary")?;
            if u.dagger().matmul(u).max_abs_diff(&ComplexMatrix::identity(n)) > 1e-10 {
                return Err(Error::usage("referee operations must be unitary"));
            }
        }
        self.accept.check_dim(n, "accept projector")?;
        self.accept.ensure_hermitian(1e-10, "accept projector")?;
        if self.accept.matmul(&self.accept).max_abs_diff(&self.accept) > 1e-10 {
            return Err(Error::usage("accept operator must be a projector"));
        }
        Ok(())
    }

    fn measurement(&self, i: usize) -> ComplexMatrix {
        // V_i* Pi V_i
        self.accept.conjugate_by(&self.v_ops[i].dagger())
    }
}

/// Winning probability `sum_i pi_i tr[Pi V_i (id_V (x) Lambda)(rho_i) V_i*]`,
/// computed from Kraus operators.
pub fn simulate(game: &Game, channel: &KrausChannel) -> Result<f64> {
    game.validate()?;
    let l = game.layout();
    if channel.din() != l.d_x() || channel.dout() != l.d_a() {
        return Err(Error::usage("channel does not match the game's player spaces"));
    }
    let id_v = ComplexMatrix::identity(game.dims.v);
    let lifted: Vec<ComplexMatrix> = channel.ops().iter().map(|k| kron(&id_v, k)).collect();
    let mut total = 0.0;
    for i in 0..game.q {
        let mut out = ComplexMatrix::zeros(game.dims.v * l.d_a(), game.dims.v * l.d_a());
        for k in &lifted {
            out += &game.rho[i].conjugate_by(k);
        }
        let after = out.conjugate_by(&game.v_ops[i]);
        total += game.pi[i] * game.accept.matmul(&after).trace().re;
    }
    Ok(total)
}

/// Same probability from a Choi matrix (global ordering).
pub fn simulate_choi(game: &Game, j: &ChoiOperator) -> Result<f64> {
    game.validate()?;
    let l = game.layout();
    if j.layout() != l {
        return Err(Error::usage("channel layout does not match the game"));
    }
    let g = j.global_matrix()?;
    let mut total = 0.0;
    for i in 0..game.q {
        let out = crate::choi::apply_choi_extended(&g, l.d_x(), l.d_a(), game.dims.v, &game.rho[i])?;
        total += game.pi[i] * hs_inner(&game.measurement(i), &out).re;
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PayoffOperator {
    pub layout: SystemLayout,
    /// `R_accept` on `A_1 A_2 X_1 X_2`.
    pub r: ComplexMatrix,
}

impl PayoffOperator {
    pub fn value(&self, j: &ComplexMatrix) -> Result<f64> {
        j.check_dim(self.layout.dim(), "Choi matrix")?;
        Ok(hs_inner(&self.r, j).re)
    }
}

/// `R[(a, x), (a', x')] = sum_i pi_i sum_{v, v'} M_i[(v, a), (v', a')] conj(rho_i[(v, x), (v', x')])`
/// with `M_i = V_i* Pi_accept V_i`, so that `<R, J(Lambda)>` is the winning probability.
pub fn payoff_operator(game: &Game) -> Result<PayoffOperator> {
    game.validate()?;
    let l = game.layout().clone();
    let (dv, da, dx) = (game.dims.v, l.d_a(), l.d_x());
    let n = da * dx;
    let mut r = ComplexMatrix::zeros(n, n);
    for i in 0..game.q {
        let m = game.measurement(i);
        let rho = &game.rho[i];
        let w = game.pi[i];
        for a in 0..da {
            for ap in 0..da {
                for x in 0..dx {
                    for xp in 0..dx {
                        let mut s = C64::new(0.0, 0.0);
                        for v in 0..dv {
                            for vp in 0..dv {
                                s += m[(v * da + a, vp * da + ap)] * rho[(v * dx + x, vp * dx + xp)].conj();
                            }
                        }
                        r[(a * dx + x, ap * dx + xp)] += s * w;
                    }
                }
            }
        }
    }
    Ok(PayoffOperator {
        layout: l,
        r: r.hermitian_part(),
    })
}

/// Diagonal of `r` when the off-diagonal part is negligible.
pub fn diagonal_of(r: &ComplexMatrix) -> Option<Vec<f64>> {
    let n = r.rows();
    let scale = r.max_abs().max(1e-300);
    for i in 0..n {
        for j in 0..n {
            if i != j && r[(i, j)].norm() > 1e-12 * scale.max(1.0) {
                return None;
            }
        }
    }
    Some((0..n).map(|i| r[(i, i)].re).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalOutcome {
    pub value: f64,
    /// `strategy[p][x]` is party `p`'s answer to question `x`.
    pub strategy: Vec<Vec<usize>>,
}

/// Choi matrix `sum_x |f(x) x><f(x) x|` of the measure-and-answer channel
/// `|x><x'| -> delta_{x x'} |f(x)><f(x)|`.
pub fn deterministic_party_choi(din: usize, dout: usize, f: &[usize]) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(din * dout, din * dout);
    for (x, &a) in f.iter().enumerate() {
        j[(a * din + x, a * din + x)] = C64::new(1.0, 0.0);
    }
    j
}

/// Global Choi matrix of a deterministic product strategy.
pub fn deterministic_choi(layout: &SystemLayout, strategy: &[Vec<usize>]) -> Result<ComplexMatrix> {
    let parts: Vec<ComplexMatrix> = layout
        .parties()
        .iter()
        .zip(strategy)
        .map(|(p, f)| deterministic_party_choi(p.din, p.dout, f))
        .collect();
    let refs: Vec<&ComplexMatrix> = parts.iter().collect();
    crate::choi::product_choi(layout, &refs)
}

/// Exhaustive maximum of `sum_x r[(f(x), x)]` over deterministic product
/// response functions `f = (f_1, .., f_m)`. First maximizer in enumeration
/// order wins.
pub fn brute_force_diagonal(r_diag: &[f64], layout: &SystemLayout) -> Result<ClassicalOutcome> {
    if r_diag.len() != layout.dim() {
        return Err(Error::usage("diagonal length does not match layout"));
    }
    let m = layout.m();
    let counts: Vec<u128> = layout
        .parties()
        .iter()
        .map(|p| (p.dout as u128).pow(p.din as u32))
        .collect();
    let total: u128 = counts.iter().product();
    if total > 1 << 26 {
        return Err(Error::usage("too many deterministic strategies to enumerate"));
    }
    let d_x = layout.d_x();
    let din: Vec<usize> = layout.parties().iter().map(|p| p.din).collect();
    let dout: Vec<usize> = layout.parties().iter().map(|p| p.dout).collect();
    let mut best = ClassicalOutcome {
        value: f64::NEG_INFINITY,
        strategy: Vec::new(),
    };
    let mut funcs: Vec<Vec<usize>> = din.iter().map(|&d| vec![0; d]).collect();
    for code in 0..total {
        let mut c = code;
        for p in (0..m).rev() {
            let mut cp = c % counts[p];
            c /= counts[p];
            for x in (0..din[p]).rev() {
                funcs[p][x] = (cp % dout[p] as u128) as usize;
                cp /= dout[p] as u128;
            }
        }
        let mut v = 0.0;
        let mut xs = vec![0usize; m];
        for xi in 0..d_x {
            let mut rem = xi;
            for p in (0..m).rev() {
                xs[p] = rem % din[p];
                rem /= din[p];
            }
            let a = (0..m).fold(0, |acc, p| acc * dout[p] + funcs[p][xs[p]]);
            v += r_diag[a * d_x + xi];
        }
        if v > best.value {
            best = ClassicalOutcome {
                value: v,
                strategy: funcs.clone(),
            };
        }
    }
    Ok(best)
}

/// Exact classical value of a game whose questions and accept test are classical.
pub fn brute_force_classical(game: &Game) -> Result<ClassicalOutcome> {
    game.validate()?;
    let classical = game.rho.iter().all(|r| diagonal_of(r).is_some())
        && (0..game.q).all(|i| diagonal_of(&game.measurement(i)).is_some());
    if !classical {
        return Err(Error::usage("game is not classical"));
    }
    let r = payoff_operator(game)?;
    let diag = diagonal_of(&r.r).ok_or_else(|| Error::usage("payoff operator is not diagonal"))?;
    brute_force_diagonal(&diag, game.layout())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeesawLoseOutcome {
    pub search: SeesawOutcome,
    /// Winning probability of the returned strategy, re-simulated through the game.
    pub simulated_value: f64,
}

/// See-saw over strategies with the configured entanglement; the reported
/// value is re-simulated from the strategy's Kraus form.
pub fn seesaw_lose(game: &Game, cfg: &StrategySearchConfig) -> Result<SeesawLoseOutcome> {
    let r = payoff_operator(game)?;
    let search = seesaw_on_payoff(&r.r, game.layout(), cfg)?;
    let l = game.layout();
    let j = search.strategy.choi(l)?;
    let ch = crate::choi::kraus_of_choi(&j, l.d_x(), l.d_a(), 1e-12)?;
    let simulated_value = simulate(game, &ch)?;
    Ok(SeesawLoseOutcome {
        search,
        simulated_value,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO-evidence")]
    NoEvidence,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OperationClass {
    Losr,
    Lose,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Budget {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Entanglement dimension per party in LOSE mode.
    pub ent_dim: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iterations: 40,
            ent_dim: 2,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    /// Exhaustive deterministic enumeration (exact LOSR value of a diagonal payoff).
    Enumeration,
    /// `lambda_max(R) d_X`, valid for every channel.
    Spectral,
    /// See-saw search; a lower bound only.
    Seesaw,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakValidityReport {
    pub verdict: Verdict,
    pub mode: OperationClass,
    pub gamma: f64,
    pub s: u64,
    pub epsilon: f64,
    pub lower: f64,
    pub lower_method: BoundMethod,
    pub upper: f64,
    pub upper_method: BoundMethod,
    /// Choi matrix (global ordering) of a strategy attaining `lower`.
    pub certificate: ComplexMatrix,
}

/// Weak validity with `epsilon = 1/s`: YES if a feasible strategy reaches
/// `gamma + epsilon`, NO-evidence if a sound upper bound is at most
/// `gamma - epsilon`, UNKNOWN otherwise.
pub fn weak_validity(
    r: &ComplexMatrix,
    layout: &SystemLayout,
    gamma: f64,
    s: u64,
    mode: OperationClass,
    budget: &Budget,
) -> Result<WeakValidityReport> {
    if s == 0 {
        return Err(Error::usage("s must be a positive integer"));
    }
    r.check_dim(layout.dim(), "payoff operator")?;
    r.ensure_hermitian(crate::tensor::HERM_TOL, "payoff operator")?;
    let epsilon = 1.0 / s as f64;
    let diag = diagonal_of(r);
    let spectral = hermitian_eig(&r.hermitian_part())?.max() * layout.d_x() as f64;

    let (lower, lower_method, certificate, upper, upper_method) = match (&diag, mode) {
        (Some(d), OperationClass::Losr) => {
            let best = brute_force_diagonal(d, layout)?;
            let cert = deterministic_choi(layout, &best.strategy)?;
            let exact = best.value;
            (exact, BoundMethod::Enumeration, cert, exact.min(spectral), BoundMethod::Enumeration)
        }
        _ => {
            let ent = match mode {
                OperationClass::Losr => 1,
                OperationClass::Lose => budget.ent_dim.max(1),
            };
            let mut cfg = StrategySearchConfig::new(vec![ent; layout.m()], budget.restarts.max(1), budget.seed);
            cfg.max_iterations = budget.max_iterations.max(1);
            let out = seesaw_on_payoff(r, layout, &cfg)?;
            let cert = out.strategy.choi(layout)?;
            (out.value, BoundMethod::Seesaw, cert, spectral, BoundMethod::Spectral)
        }
    };
    let verdict = if lower >= gamma + epsilon {
        Verdict::Yes
    } else if upper <= gamma - epsilon {
        Verdict::NoEvidence
    } else {
        Verdict::Unknown
    };
    Ok(WeakValidityReport {
        verdict,
        mode,
        gamma,
        s,
        epsilon,
        lower,
        lower_method,
        upper,
        upper_method,
        certificate,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessEvidence {
    pub label: String,
    /// `<H, X>`.
    pub value: f64,
    /// `epsilon ||H||_F`; NO-evidence needs `value < -threshold`.
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeakMembershipReport {
    pub verdict: Verdict,
    pub mode: OperationClass,
    pub s: u64,
    pub epsilon: f64,
    /// `||A||_F` for `X = c (I - A)`, `c = tr(X) / dim`.
    pub ball_distance: Option<f64>,
    pub ball_radius: Option<f64>,
    pub witness: Option<WitnessEvidence>,
}

/// Weak membership of `X` in the LOSR (or LOSE) cone of Choi matrices.
///
/// YES: `X = c (I - A)` with `A` inside the certified ball (`c >= 0`); the
/// ball certificate is built and verified. NO-evidence (two qubit players
/// only): one of the eight relabeled CHSH functionals `H = c I - R` is below
/// `-epsilon ||H||_F` on `X`, which rules out every channel within Frobenius
/// (or trace-norm) distance `epsilon`. `c` is `3/16` for LOSR (classical value
/// 3/4 by enumeration) and `cos^2(pi/8)/4` for LOSE (Tsirelson's bound).
pub fn weak_membership(
    x: &ComplexMatrix,
    layout: &SystemLayout,
    s: u64,
    mode: OperationClass,
) -> Result<WeakMembershipReport> {
    if s == 0 {
        return Err(Error::usage("s must be a positive integer"));
    }
    x.check_dim(layout.dim(), "candidate Choi matrix")?;
    let tq = in_tensor_q(x, layout, MEMBERSHIP_TOL)?;
    if !tq.member {
        return Err(Error::Precondition(format!(
            "input is outside the product of Q subspaces (residual {:.3e})",
            tq.projection_residual
        )));
    }
    let epsilon = 1.0 / s as f64;
    let mut report = WeakMembershipReport {
        verdict: Verdict::Unknown,
        mode,
        s,
        epsilon,
        ball_distance: None,
        ball_radius: None,
        witness: None,
    };

    // Ball test on the normalized direction: X = c (I - A), c = tr(X) / dim.
    let c = x.trace().re / layout.dim() as f64;
    let params = ball_parameters(layout);
    if c > 0.0 {
        let a = ComplexMatrix::identity(layout.dim()) - x.scale(1.0 / c);
        let dist = fro_norm(&a);
        report.ball_distance = Some(dist);
        report.ball_radius = Some(1.0 / params.k);
        if dist <= 1.0 / params.k {
            let cert = ball_certificate(&a.hermitian_part(), layout)?;
            if verify_certificate(&cert, VerifyTolerances::default()).pass {
                report.verdict = Verdict::Yes;
                return Ok(report);
            }
        }
    } else if fro_norm(x) <= 1e-12 {
        report.verdict = Verdict::Yes;
        return Ok(report);
    }

    let qubit_pair = layout.m() == 2 && layout.parties().iter().all(|p| p.din == 2 && p.dout == 2);
    if qubit_pair {
        let shift = match mode {
            OperationClass::Losr => catalog::CHSH_CLASSICAL / 4.0,
            OperationClass::Lose => catalog::chsh_quantum_value() / 4.0 + 1e-12,
        };
        let mut best: Option<WitnessEvidence> = None;
        for (label, game) in catalog::chsh_relabelings() {
            let r = payoff_operator(&game)?.r;
            let h = ComplexMatrix::identity(layout.dim()).scale(shift) - r;
            let value = hs_inner(&h, x).re;
            let threshold = epsilon * fro_norm(&h);
            if best.as_ref().is_none_or(|b| value + threshold < b.value + b.threshold) {
                best = Some(WitnessEvidence {
                    label,
                    value,
                    threshold,
                });
            }
        }
        if let Some(w) = best {
            if w.value < -w.threshold {
                report.verdict = Verdict::NoEvidence;
            }
            report.witness = Some(w);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_enumeration_order() {
        // One question per party, win iff answers differ.
        let l = SystemLayout::new(vec![
            crate::choi::PartyDims::new(1, 2),
            crate::choi::PartyDims::new(1, 2),
        ])
        .unwrap();
        let r = [0.0, 1.0, 1.0, 0.0];
        let b = brute_force_diagonal(&r, &l).unwrap();
        assert_eq!(b.value, 1.0);
        assert_eq!(b.strategy, vec![vec![0], vec![1]]);
    }

    #[test]
    fn deterministic_choi_is_channel() {
        let l = SystemLayout::uniform(2, 2).unwrap();
        let j = deterministic_choi(&l, &[vec![1, 0], vec![0, 0]]).unwrap();
        let op = ChoiOperator::global(j, l).unwrap();
        assert!(crate::choi::is_cptp(&op).unwrap().pass);
    }
}
