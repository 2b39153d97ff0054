//! See-saw search over finite-entanglement strategies.
//!
//! A strategy is a state `sigma` on `E_1 (x) .. (x) E_m` and local channels
//! `Psi_p: X_p (x) E_p -> A_p`. The objective `<R, J(Lambda)>` is linear in
//! each block, so every block update is a concave (linear) maximization: the
//! channels by projected gradient ascent with [`cptp_project`], the state by
//! its top eigenvector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cptp::{cptp_project, DykstraOptions};
use crate::choi::{kraus_of_choi, restrict_by_state, KrausChannel, SystemLayout};
use crate::error::{Error, Result};
use crate::random::{derive_seed, random_kraus_operators, random_pure_state, rng_from_seed};
use crate::tensor::{
    functional_partial, hermitian_eig, hs_inner, kron, kron_all, op_norm, permute_subsystems,
    ComplexMatrix, FactorShape, C64,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrategySearchConfig {
    /// Entanglement dimension per party; all ones is the product (LOSR) regime.
    pub ent_dims: Vec<usize>,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Projected-gradient steps per channel update.
    pub inner_steps: usize,
    /// Step is `step_scale / L` with `L` the operator norm of the partial payoff.
    pub step_scale: f64,
    pub seed: u64,
    pub conv_tol: f64,
    /// Extra deterministic starting points for diagonal payoffs.
    pub include_deterministic: bool,
}

impl StrategySearchConfig {
    pub fn new(ent_dims: Vec<usize>, restarts: usize, seed: u64) -> Self {
        Self {
            ent_dims,
            restarts,
            max_iterations: 60,
            inner_steps: 200,
            step_scale: 1.0,
            seed,
            conv_tol: 1e-9,
            include_deterministic: true,
        }
    }

    fn validate(&self, layout: &SystemLayout) -> Result<()> {
        if self.ent_dims.len() != layout.m() {
            return Err(Error::usage("one entanglement dimension per party"));
        }
        if self.ent_dims.contains(&0) || self.restarts == 0 || self.max_iterations == 0 || self.inner_steps == 0 {
            return Err(Error::usage("search parameters must be positive"));
        }
        if self.step_scale.is_nan() || self.step_scale <= 0.0 {
            return Err(Error::usage("step scale must be positive"));
        }
        Ok(())
    }
}

/// `local_chois[p]` is ordered `A_p (x) X_p (x) E_p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Strategy {
    pub ent_dims: Vec<usize>,
    pub sigma: ComplexMatrix,
    pub local_chois: Vec<ComplexMatrix>,
}

impl Strategy {
    /// Choi matrix of the overall channel `X -> (Psi_1 (x) .. (x) Psi_m)(X (x) sigma)`, global ordering.
    pub fn choi(&self, layout: &SystemLayout) -> Result<ComplexMatrix> {
        let jpsi = joint_choi(&self.local_chois, layout, &self.ent_dims)?;
        restrict_by_state(&jpsi, layout.dim(), &self.sigma)
    }

    pub fn local_channels(&self, layout: &SystemLayout) -> Result<Vec<KrausChannel>> {
        self.local_chois
            .iter()
            .zip(layout.parties())
            .zip(&self.ent_dims)
            .map(|((j, p), &de)| kraus_of_choi(j, p.din * de, p.dout, 1e-12))
            .collect()
    }

    /// Product strategy from per-party channel Choi matrices on `A_p (x) X_p`.
    pub fn product(chois: Vec<ComplexMatrix>) -> Self {
        let m = chois.len();
        Self {
            ent_dims: vec![1; m],
            sigma: ComplexMatrix::identity(1),
            local_chois: chois,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeesawOutcome {
    /// `<R, J(Lambda)>` recomputed from the returned strategy.
    pub value: f64,
    pub restart_values: Vec<f64>,
    pub best_restart: usize,
    pub strategy: Strategy,
    pub converged: bool,
    /// Value after each sweep of the best restart; non-decreasing within tolerance.
    pub history: Vec<f64>,
    pub monotone: bool,
}

// Shape of the joint Choi in the (A_1..A_m X_1..X_m E_1..E_m) ordering.
fn global_ae_shape(layout: &SystemLayout, ent: &[usize]) -> FactorShape {
    let mut dims: Vec<usize> = layout.parties().iter().map(|p| p.dout).collect();
    dims.extend(layout.parties().iter().map(|p| p.din));
    dims.extend_from_slice(ent);
    FactorShape::new(dims)
}

// (A_p X_p E_p) blocks -> A.. X.. E..
fn grouped_to_global_perm(m: usize) -> Vec<usize> {
    (0..3).flat_map(|k| (0..m).map(move |p| 3 * p + k)).collect()
}

fn global_to_grouped_perm(m: usize) -> Vec<usize> {
    (0..m).flat_map(|p| [p, m + p, 2 * m + p]).collect()
}

fn grouped_shape(layout: &SystemLayout, ent: &[usize]) -> FactorShape {
    FactorShape::new(
        layout
            .parties()
            .iter()
            .zip(ent)
            .flat_map(|(p, &e)| [p.dout, p.din, e])
            .collect(),
    )
}

/// `J(Psi_1 (x) .. (x) Psi_m)` in the `A X E` ordering.
pub fn joint_choi(local: &[ComplexMatrix], layout: &SystemLayout, ent: &[usize]) -> Result<ComplexMatrix> {
    let refs: Vec<&ComplexMatrix> = local.iter().collect();
    let g = kron_all(&refs)?;
    Ok(permute_subsystems(&g, &grouped_shape(layout, ent), &grouped_to_global_perm(layout.m()))?.0)
}

struct Problem<'a> {
    r: &'a ComplexMatrix,
    layout: &'a SystemLayout,
    ent: Vec<usize>,
    d_e: usize,
}

impl Problem<'_> {
    fn value(&self, s: &Strategy) -> Result<f64> {
        Ok(hs_inner(self.r, &s.choi(self.layout)?).re)
    }

    // Partial payoff for party p: <R, J(Lambda)> = <G_p, J_p>.
    fn party_payoff(&self, s: &Strategy, p: usize) -> Result<ComplexMatrix> {
        // <R, Tr_E[(I (x) sigma^T) JPsi]> = <R (x) conj(sigma), JPsi>
        let w = kron(self.r, &s.sigma.conj());
        let m = self.layout.m();
        let gshape = grouped_shape(self.layout, &self.ent);
        let (wg, _) = permute_subsystems(&w, &global_ae_shape(self.layout, &self.ent), &global_to_grouped_perm(m))?;
        let blocks = FactorShape::new(gshape.dims().chunks(3).map(|c| c.iter().product()).collect());
        let others: Vec<usize> = (0..m).filter(|&q| q != p).collect();
        if others.is_empty() {
            return Ok(wg);
        }
        let refs: Vec<&ComplexMatrix> = others.iter().map(|&q| &s.local_chois[q]).collect();
        functional_partial(&wg, &blocks, &others, &kron_all(&refs)?)
    }

    // Effective payoff on E: <R, J(Lambda)> = <M, sigma>.
    fn state_payoff(&self, s: &Strategy) -> Result<ComplexMatrix> {
        let jpsi = joint_choi(&s.local_chois, self.layout, &self.ent)?;
        let shape = FactorShape::new(vec![self.layout.dim(), self.d_e]);
        Ok(functional_partial(&jpsi, &shape, &[0], self.r)?.conj())
    }

    fn update_party(&self, s: &mut Strategy, p: usize, cfg: &StrategySearchConfig) -> Result<()> {
        let g = self.party_payoff(s, p)?;
        let l = op_norm(&g)?;
        if l <= 1e-14 {
            return Ok(());
        }
        let party = self.layout.party(p);
        let din = party.din * self.ent[p];
        let step = cfg.step_scale / l;
        let opts = DykstraOptions::default();
        let mut j = s.local_chois[p].clone();
        let mut val = hs_inner(&g, &j).re;
        for _ in 0..cfg.inner_steps {
            let next = cptp_project(&(&j + &g.scale(step)), din, party.dout, opts)?.choi;
            let nv = hs_inner(&g, &next).re;
            let moved = crate::tensor::fro_norm(&(&next - &j));
            if nv < val - 1e-12 {
                break;
            }
            j = next;
            val = nv;
            if moved <= 1e-10 {
                break;
            }
        }
        s.local_chois[p] = j;
        Ok(())
    }

    fn update_state(&self, s: &mut Strategy) -> Result<()> {
        if self.d_e == 1 {
            return Ok(());
        }
        let m = self.state_payoff(s)?;
        let e = hermitian_eig(&m.hermitian_part())?;
        let v = e.vector(0);
        let cand = ComplexMatrix::outer(&v, &v);
        if hs_inner(&m, &cand).re >= hs_inner(&m, &s.sigma).re - 1e-12 {
            s.sigma = cand;
        }
        Ok(())
    }

    fn random_start(&self, seed: u64) -> Strategy {
        let mut rng = rng_from_seed(seed);
        let local_chois = self
            .layout
            .parties()
            .iter()
            .zip(&self.ent)
            .map(|(p, &e)| {
                let din = p.din * e;
                KrausChannel::new(random_kraus_operators(din, p.dout, din * p.dout, &mut rng))
                    .expect("consistent shapes")
                    .choi_matrix()
            })
            .collect();
        let v = random_pure_state(self.d_e, &mut rng);
        Strategy {
            ent_dims: self.ent.clone(),
            sigma: ComplexMatrix::outer(&v, &v),
            local_chois,
        }
    }

    fn deterministic_start(&self, det: &[Vec<usize>]) -> Strategy {
        let local_chois = self
            .layout
            .parties()
            .iter()
            .zip(&self.ent)
            .zip(det)
            .map(|((p, &e), f)| kron(&super::deterministic_party_choi(p.din, p.dout, f), &ComplexMatrix::identity(e)))
            .collect();
        let mut sigma = ComplexMatrix::zeros(self.d_e, self.d_e);
        sigma[(0, 0)] = C64::new(1.0, 0.0);
        Strategy {
            ent_dims: self.ent.clone(),
            sigma,
            local_chois,
        }
    }

    fn run(&self, mut s: Strategy, cfg: &StrategySearchConfig) -> Result<(f64, Strategy, Vec<f64>, bool)> {
        let mut v = self.value(&s)?;
        let mut history = vec![v];
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            self.update_state(&mut s)?;
            for p in 0..self.layout.m() {
                self.update_party(&mut s, p, cfg)?;
            }
            let nv = self.value(&s)?;
            history.push(nv);
            let gain = nv - v;
            v = nv;
            if gain.abs() <= cfg.conv_tol {
                converged = true;
                break;
            }
        }
        Ok((v, s, history, converged))
    }
}

/// Maximizes `<R, J(Lambda)>` over strategies with the configured entanglement
/// dimensions. Restarts run in parallel; the best value wins, ties go to the
/// lowest restart index.
pub fn seesaw_on_payoff(r: &ComplexMatrix, layout: &SystemLayout, cfg: &StrategySearchConfig) -> Result<SeesawOutcome> {
    cfg.validate(layout)?;
    r.check_dim(layout.dim(), "payoff operator")?;
    r.ensure_hermitian(crate::tensor::HERM_TOL, "payoff operator")?;
    let problem = Problem {
        r,
        layout,
        ent: cfg.ent_dims.clone(),
        d_e: cfg.ent_dims.iter().product(),
    };

    let mut starts: Vec<Strategy> = Vec::new();
    if cfg.include_deterministic {
        if let Some(diag) = super::diagonal_of(r) {
            let best = super::brute_force_diagonal(&diag, layout)?;
            starts.push(problem.deterministic_start(&best.strategy));
        }
    }
    starts.extend((0..cfg.restarts as u64).map(|i| problem.random_start(derive_seed(cfg.seed, i))));

    let runs = starts
        .into_par_iter()
        .map(|s| problem.run(s, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = i;
        }
    }
    let restart_values = runs.iter().map(|r| r.0).collect();
    let (_, strategy, history, converged) = runs.into_iter().nth(best).expect("at least one restart");
    let monotone = history.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let value = problem.value(&strategy)?;
    Ok(SeesawOutcome {
        value,
        restart_values,
        best_restart: best,
        strategy,
        converged,
        history,
        monotone,
    })
}
