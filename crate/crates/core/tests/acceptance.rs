//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

// `!(x <= tol)` is deliberate: NaN must fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::Instant;

use losr_core::catalog::{
    chsh_game, chsh_quantum_value, chsh_witness, completely_noisy, pr_box, pr_box_separable_certificate,
    swap_channel, CHSH_CLASSICAL,
};
use losr_core::choi::{
    choi_of_kraus, choi_of_map, functional_pairing_check, is_cptp, restrict_by_state, ChoiOperator, KrausChannel,
    PartyDims, SystemLayout,
};
use losr_core::games::{
    brute_force_classical, payoff_operator, seesaw_lose, simulate, weak_membership, weak_validity, Budget, Game,
    GameDims, OperationClass, StrategySearchConfig, Verdict,
};
use losr_core::losr::{ball_certificate, certificate_to_losr, realize_shared_randomness, LosrForm};
use losr_core::nosignal::{check_constraints, check_semantic, NOSIG_TOL};
use losr_core::qspace::{ball_parameters, in_tensor_q, project_onto_tensor_q, SpaceKind, MEMBERSHIP_TOL};
use losr_core::random::{
    ginibre, random_density, random_hermitian, random_kraus_operators, random_unitary, rng_from_seed,
};
use losr_core::sep::{
    caratheodory_reduce, identity_minus_any, identity_minus_product, identity_minus_separable, sep_generate,
    verify_certificate, ProductTerm, SeparableCertificate, VerifyTolerances,
};
use losr_core::tensor::{fro_norm, hs_inner, kron, op_norm, trace_norm, ComplexMatrix};
use losr_core::witness::{audit_positivity_on_cone, functional_value, AuditConfig, AUDIT_TOL};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn qubits() -> SystemLayout {
    SystemLayout::uniform(2, 2).unwrap()
}

fn random_channel(din: usize, dout: usize, rank: usize, seed: u64) -> KrausChannel {
    let mut rng = rng_from_seed(seed);
    KrausChannel::new(random_kraus_operators(din, dout, rank, &mut rng)).unwrap()
}

// Unit-norm grouped operator in Q (x) Q.
fn grouped_in_tensor_q(seed: u64, layout: &SystemLayout) -> ComplexMatrix {
    let mut rng = rng_from_seed(seed);
    let p = project_onto_tensor_q(&random_hermitian(layout.dim(), &mut rng), layout).unwrap();
    p.scale(1.0 / fro_norm(&p))
}

fn choi_calculus() -> Outcome {
    let layouts = [
        SystemLayout::single(2, 2).unwrap(),
        qubits(),
        SystemLayout::uniform(3, 2).unwrap(),
    ];
    for l in &layouts {
        let (din, dout) = (l.d_x(), l.d_a());
        let j = choi_of_map(din, dout, |x| ComplexMatrix::identity(dout).scale_c(x.trace()));
        ensure!(j == ComplexMatrix::identity(l.dim()), "J(noise) != I on {} parties", l.m());
        let noisy = ok(choi_of_kraus(&completely_noisy(l), l))?.into_matrix().scale(dout as f64);
        ensure!(noisy == ComplexMatrix::identity(l.dim()), "Kraus noise Choi != I/d_A on {} parties", l.m());
    }
    let mut worst: f64 = 0.0;
    for s in 0..100u64 {
        let (din, dout, rank) = (1 + (s % 4) as usize, 1 + ((s / 4) % 4) as usize, 1 + (s % 3) as usize);
        let j = random_channel(din, dout, rank, 10_000 + s).choi_matrix();
        worst = worst.max((ok(trace_norm(&j))? - din as f64).abs());
    }
    ensure!(worst <= 1e-8, "trace-norm deviation {worst:.2e}");
    Ok(format!("J(noise) = I exactly; max |tnorm - d_X| = {worst:.1e}"))
}

fn split_suite() -> Outcome {
    let l = qubits();
    let tol = VerifyTolerances::default();
    let (mut worst_res, mut worst_ratio): (f64, f64) = (0.0, 0.0);
    for seed in 0..100 {
        let x = grouped_in_tensor_q(seed, &l);
        let (p, m) = ok(sep_generate(&x, &l, SpaceKind::Q))?;
        for c in [&p, &m] {
            let r = verify_certificate(c, tol);
            ensure!(r.pass, "seed {seed}: certificate rejected");
            worst_res = worst_res.max(r.reassembly_residual);
            worst_ratio = worst_ratio.max(ok(op_norm(&c.target))? / fro_norm(&x));
        }
        let diff = fro_norm(&(&(&p.target - &m.target) - &x));
        ensure!(diff <= 1e-8, "seed {seed}: X+ - X- misses X by {diff:.2e}");
    }
    ensure!(worst_res <= 1e-8, "reassembly {worst_res:.2e}");
    ensure!(worst_ratio <= 26.0 + 1e-9, "op norm ratio {worst_ratio}");
    Ok(format!("max reassembly {worst_res:.1e}; max ||X+-||/||X||_F = {worst_ratio:.3}"))
}

fn random_certificate(l: &SystemLayout, terms: usize, seed: u64) -> SeparableCertificate {
    let mut cert = SeparableCertificate::empty(SpaceKind::Q, l.clone());
    for j in 0..terms as u64 {
        cert.terms.push(ProductTerm {
            weight: 0.1 + (j % 7) as f64 * 0.05,
            factors: vec![
                random_channel(2, 2, 2, seed * 1000 + 2 * j).choi_matrix(),
                random_channel(2, 2, 2, seed * 1000 + 2 * j + 1).choi_matrix(),
            ],
        });
    }
    cert.target = cert.reassemble().unwrap();
    cert
}

fn identity_minus_suite() -> Outcome {
    let l = qubits();
    let n = 169;
    let tol = VerifyTolerances::default();
    let mut worst: f64 = 0.0;
    let mut max_terms = 0;
    let mut check = |c: &SeparableCertificate, what: &str, seed: u64| -> Result<(), String> {
        let r = verify_certificate(c, tol);
        ensure!(r.pass, "{what} seed {seed} rejected (reassembly {:.2e})", r.reassembly_residual);
        let red = ok(caratheodory_reduce(c))?;
        ensure!(red.len() <= n + 1, "{what} seed {seed}: {} terms after reduction", red.len());
        let moved = fro_norm(&(ok(red.reassemble())? - c.target.clone()));
        ensure!(moved <= 1e-9, "{what} seed {seed}: reduction moved target by {moved:.2e}");
        worst = worst.max(r.reassembly_residual).max(moved);
        max_terms = max_terms.max(red.len());
        Ok(())
    };
    for seed in 0..50u64 {
        let factors = [
            random_channel(2, 2, 2, 20_000 + 2 * seed).choi_matrix(),
            random_channel(2, 2, 2, 20_001 + 2 * seed).choi_matrix(),
        ];
        check(&ok(identity_minus_product(&factors, &l, SpaceKind::Q))?, "product", seed)?;
        let cert = random_certificate(&l, 4 + (seed % 5) as usize, 30 + seed);
        check(&ok(identity_minus_separable(&cert))?, "separable", seed)?;
        check(&ok(identity_minus_any(&grouped_in_tensor_q(40_000 + seed, &l), &l, SpaceKind::Q))?, "any", seed)?;
    }
    for seed in 0..3u64 {
        check(&random_certificate(&l, 2 * n, 90 + seed), "oversized", seed)?;
    }
    Ok(format!("150 certificates verify; max residual {worst:.1e}; at most {max_terms} terms after reduction"))
}

fn traceless_global(seed: u64, l: &SystemLayout, norm: f64) -> ComplexMatrix {
    let x = l.to_global(&grouped_in_tensor_q(seed, l)).unwrap();
    let d = l.dim();
    let x = &x - &ComplexMatrix::identity(d).scale(x.trace().re / d as f64);
    x.scale(norm / fro_norm(&x))
}

fn ball_suite() -> Outcome {
    let l = qubits();
    let bp = ball_parameters(&l);
    ensure!(bp.n == 169, "n = {}", bp.n);
    ensure!(bp.k == 4420.0, "k = {}", bp.k);
    ensure!(bp.radius_normalized == 1.0 / 17680.0, "radius {}", bp.radius_normalized);
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let a = traceless_global(50_000 + seed, &l, 1.0 / bp.k);
        let cert = ok(ball_certificate(&a, &l))?;
        ensure!(verify_certificate(&cert, VerifyTolerances::default()).pass, "seed {seed}: certificate rejected");
        let conv = ok(certificate_to_losr(&cert))?;
        let v = ok(conv.form.validate(1e-8))?;
        ensure!(v.pass && (v.prob_sum - 1.0).abs() <= 1e-8, "seed {seed}: {v:?}");
        let j = ok(conv.form.choi())?;
        let expect = (ComplexMatrix::identity(16) - a).scale(0.25);
        let diff = fro_norm(&(&j - &expect));
        ensure!(diff <= 1e-8, "seed {seed}: Choi off by {diff:.2e}");
        worst = worst.max(diff);
        let op = ok(ChoiOperator::global(j.clone(), l.clone()))?;
        ensure!(ok(is_cptp(&op))?.pass, "seed {seed}: not CPTP");
        ensure!(ok(check_constraints(&op, NOSIG_TOL))?.pass, "seed {seed}: signals");
        ensure!(ok(in_tensor_q(&j, &l, MEMBERSHIP_TOL))?.member, "seed {seed}: outside tensor Q");
    }
    Ok(format!("n = 169, k = 4420, radius 1/17680; 50 boundary points, max Choi error {worst:.1e}"))
}

fn realization_suite() -> Outcome {
    let three = SystemLayout::new(vec![PartyDims::new(2, 1), PartyDims::new(1, 2), PartyDims::new(2, 2)]).unwrap();
    let mixed = SystemLayout::new(vec![PartyDims::new(2, 3), PartyDims::new(2, 2)]).unwrap();
    let mut rng = rng_from_seed(60_000);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let l = match i % 3 {
            0 => qubits(),
            1 => mixed.clone(),
            _ => three.clone(),
        };
        let form = LosrForm::random(&l, 1 + i % 4, 1 + i % 3, &mut rng);
        let real = ok(realize_shared_randomness(&form))?;
        let diff = fro_norm(&(ok(real.choi())? - ok(form.choi())?));
        let rho = random_density(l.d_x(), &mut rng);
        let out = fro_norm(&(ok(real.apply(&rho))? - ok(form.apply(&rho))?));
        worst = worst.max(diff).max(out);
    }
    ensure!(worst <= 1e-8, "max deviation {worst:.2e}");
    Ok(format!("20 mixtures, max deviation {worst:.1e}"))
}

fn auxiliary_identities() -> Outcome {
    let (mut r1, mut r2): (f64, f64) = (0.0, 0.0);
    for s in 0..100u64 {
        let (dx, de, da) = (2, 1 + (s % 3) as usize, 2 + (s % 2) as usize);
        let psi = random_channel(dx * de, da, 2, 70_000 + s);
        let mut rng = rng_from_seed(71_000 + s);
        let z = ginibre(de, de, &mut rng);
        let direct = choi_of_map(dx, da, |x| psi.apply(&kron(x, &z)).unwrap());
        r1 = r1.max(fro_norm(&(direct - ok(restrict_by_state(&psi.choi_matrix(), da * dx, &z))?)));
        let h = random_hermitian(da * dx, &mut rng);
        let zd = random_density(de, &mut rng);
        r2 = r2.max(ok(functional_pairing_check(&h, &psi.choi_matrix(), &zd))?);
    }
    ensure!(r1 <= 1e-9 && r2 <= 1e-9, "residuals {r1:.2e} / {r2:.2e}");
    Ok(format!("restriction {r1:.1e}, pairing {r2:.1e}"))
}

fn nosignal_suite() -> Outcome {
    let l = SystemLayout::new(vec![PartyDims::new(2, 2), PartyDims::new(2, 3)]).unwrap();
    let mut rng = rng_from_seed(80_000);
    for i in 0..100u64 {
        let losr = i % 2 == 0;
        let j = if losr {
            ok(LosrForm::random(&l, 1 + (i % 4) as usize, 2, &mut rng).choi())?
        } else {
            KrausChannel::new(random_kraus_operators(l.d_x(), l.d_a(), 3, &mut rng)).unwrap().choi_matrix()
        };
        let op = ok(ChoiOperator::global(j, l.clone()))?;
        let c = ok(check_constraints(&op, NOSIG_TOL))?;
        let s = ok(check_semantic(&op, 3, i, NOSIG_TOL))?;
        ensure!(c.pass == s.pass, "channel {i}: methods disagree");
        ensure!(!losr || c.pass, "LOSR channel {i} fails");
    }
    let q = qubits();
    let swap = ok(ChoiOperator::global(swap_channel().choi_matrix(), q.clone()))?;
    ensure!(!ok(check_constraints(&swap, NOSIG_TOL))?.pass, "SWAP passes constraints");
    ensure!(!ok(check_semantic(&swap, 3, 0, NOSIG_TOL))?.pass, "SWAP passes semantic check");
    let pr = ok(choi_of_kraus(&pr_box(), &q))?;
    let c = ok(check_constraints(&pr, 1e-10))?;
    let s = ok(check_semantic(&pr, 5, 0, 1e-10))?;
    ensure!(c.pass && s.pass, "PR box residuals {:.2e} / {:.2e}", c.max_residual(), s.max_residual());
    Ok(format!(
        "100 channels agree; SWAP fails; PR box residuals {:.1e} / {:.1e}",
        c.max_residual(),
        s.max_residual()
    ))
}

fn chsh_suite() -> Outcome {
    let cert = pr_box_separable_certificate();
    let r = verify_certificate(&cert, VerifyTolerances::default());
    ensure!(r.pass && r.reassembly_residual <= 1e-12, "PR certificate residual {:.2e}", r.reassembly_residual);
    ensure!(cert.len() == 8, "PR certificate has {} terms", cert.len());

    let g = chsh_game();
    let pr_value = ok(simulate(&g, &pr_box()))?;
    ensure!((pr_value - 1.0).abs() <= 1e-10, "PR box wins with {pr_value}");
    let classical = ok(brute_force_classical(&g))?.value;
    ensure!(classical == CHSH_CLASSICAL, "classical value {classical}");

    let cfg = StrategySearchConfig::new(vec![2, 2], 20, 0);
    let quantum = ok(seesaw_lose(&g, &cfg))?.simulated_value;
    ensure!(
        quantum >= 0.8485 && (quantum - chsh_quantum_value()).abs() <= 5e-3,
        "see-saw reached {quantum}"
    );

    let h = ok(chsh_witness())?;
    let audit = ok(audit_positivity_on_cone(&h, &qubits(), &AuditConfig::default()))?;
    ensure!(audit.min_value >= -AUDIT_TOL, "audit minimum {}", audit.min_value);
    let w = ok(functional_value(&h, &pr_box().choi_matrix()))?;
    ensure!((w + 0.25).abs() <= 1e-10, "witness value {w}");
    Ok(format!(
        "PR wins 1, classical 0.75, see-saw {quantum:.6}, audit min {:.1e}, witness {w:.3}",
        audit.min_value
    ))
}

fn random_game(seed: u64) -> Game {
    let mut rng = rng_from_seed(seed);
    let dv = 1 + (seed % 3) as usize;
    let q = 1 + (seed % 4) as usize;
    let pi = losr_core::random::random_probabilities(q, &mut rng);
    let u = random_unitary(dv * 4, &mut rng);
    let rank = (dv * 4 / 2).max(1);
    let diag: Vec<f64> = (0..dv * 4).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
    Game {
        q,
        pi,
        rho: (0..q).map(|_| random_density(dv * 4, &mut rng)).collect(),
        v_ops: (0..q).map(|_| random_unitary(dv * 4, &mut rng)).collect(),
        accept: ComplexMatrix::from_real_diag(&diag).conjugate_by(&u).hermitian_part(),
        dims: GameDims { v: dv, players: qubits() },
    }
}

fn payoff_suite() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let g = random_game(90_000 + seed);
        let r = ok(payoff_operator(&g))?;
        let ch = random_channel(4, 4, 1 + (seed % 4) as usize, 91_000 + seed);
        let diff = (ok(r.value(&ch.choi_matrix()))? - ok(simulate(&g, &ch))?).abs();
        worst = worst.max(diff);
    }
    ensure!(worst <= 1e-10, "max deviation {worst:.2e}");
    Ok(format!("100 pairs, max deviation {worst:.1e}"))
}

fn decision_suite() -> Outcome {
    let l = qubits();
    let r = ok(payoff_operator(&chsh_game()))?.r;
    let budget = Budget::default();
    let v = |r: &ComplexMatrix, gamma: f64, s: u64| ok(weak_validity(r, &l, gamma, s, OperationClass::Losr, &budget));
    ensure!(v(&r, 0.6, 10)?.verdict == Verdict::Yes, "gamma 0.6 is not YES");
    ensure!(v(&r, 0.9, 10)?.verdict == Verdict::NoEvidence, "gamma 0.9 is not NO-evidence");
    ensure!(v(&ComplexMatrix::zeros(16, 16), -1.0, 1)?.verdict == Verdict::Yes, "R = 0 is not YES");
    ensure!(v(&r, 0.8, 10)?.verdict == Verdict::Unknown, "gamma 0.8 is not UNKNOWN");

    let m = |x: &ComplexMatrix, mode| ok(weak_membership(x, &l, 10, mode));
    ensure!(m(&ComplexMatrix::identity(16), OperationClass::Losr)?.verdict == Verdict::Yes, "I is not YES");
    let inner = &ComplexMatrix::identity(16) - &traceless_global(1, &l, 0.5 / 4420.0);
    ensure!(m(&inner, OperationClass::Losr)?.verdict == Verdict::Yes, "ball point is not YES");
    let pr = pr_box().choi_matrix();
    ensure!(m(&pr, OperationClass::Losr)?.verdict == Verdict::NoEvidence, "PR box is not NO-evidence");

    let quick = Budget {
        restarts: 2,
        ..Budget::default()
    };
    let mut rng = rng_from_seed(95_000);
    let (mut yes_v, mut yes_m) = (0, 0);
    for i in 0..50u64 {
        let j = ok(LosrForm::random(&l, 1 + (i % 3) as usize, 2, &mut rng).choi())?;
        let rr = random_hermitian(16, &mut rng);
        let s = 10;
        let gamma = hs_inner(&rr, &j).re - 1.0 / s as f64;
        let rep = ok(weak_validity(&rr, &l, gamma, s, OperationClass::Losr, &quick))?;
        ensure!(rep.verdict != Verdict::NoEvidence, "validity instance {i}: unsound NO");
        yes_v += usize::from(rep.verdict == Verdict::Yes);
        let mode = if i % 2 == 0 { OperationClass::Losr } else { OperationClass::Lose };
        let mem = m(&j, mode)?;
        ensure!(mem.verdict != Verdict::NoEvidence, "membership instance {i}: unsound NO");
        yes_m += usize::from(mem.verdict == Verdict::Yes);
    }
    Ok(format!(
        "worked instances YES / NO-evidence / YES; 50 positive instances with no NO (validity YES {yes_v}, membership YES {yes_m})"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("choi calculus", choi_calculus),
        ("separable split", split_suite),
        ("identity-minus certificates", identity_minus_suite),
        ("LOSR ball", ball_suite),
        ("shared-randomness realization", realization_suite),
        ("auxiliary-input identities", auxiliary_identities),
        ("no-signaling equivalence", nosignal_suite),
        ("CHSH trichotomy", chsh_suite),
        ("payoff operator", payoff_suite),
        ("weak validity and membership", decision_suite),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
