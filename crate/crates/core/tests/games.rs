use losr_core::catalog::{chsh_game, chsh_quantum_value, completely_noisy, pr_box};
use losr_core::choi::{choi_of_kraus, is_cptp, ChoiOperator, KrausChannel, PartyDims, SystemLayout};
use losr_core::games::{
    brute_force_classical, cptp_project, payoff_operator, seesaw_lose, seesaw_on_payoff, simulate, simulate_choi,
    weak_membership, weak_validity, Budget, DykstraOptions, Game, GameDims, OperationClass, StrategySearchConfig,
    Verdict,
};
use losr_core::losr::{realize_shared_randomness, LosrForm, LosrTerm};
use losr_core::random::{random_density, random_hermitian, random_kraus_operators, random_unitary, rng_from_seed};
use losr_core::tensor::{fro_norm, hs_inner, kron, ComplexMatrix};

fn random_game(seed: u64) -> Game {
    let mut rng = rng_from_seed(seed);
    let players = SystemLayout::uniform(2, 2).unwrap();
    let dv = 2;
    let q = 3;
    let u = random_unitary(dv * 4, &mut rng);
    let accept = kron(&ComplexMatrix::from_real_diag(&[1.0, 0.0]), &ComplexMatrix::identity(4)).conjugate_by(&u);
    Game {
        q,
        pi: vec![0.2, 0.3, 0.5],
        rho: (0..q).map(|_| random_density(dv * 4, &mut rng)).collect(),
        v_ops: (0..q).map(|_| random_unitary(dv * 4, &mut rng)).collect(),
        accept: accept.hermitian_part(),
        dims: GameDims { v: dv, players },
    }
}

fn random_channel(seed: u64) -> KrausChannel {
    let mut rng = rng_from_seed(seed);
    KrausChannel::new(random_kraus_operators(4, 4, 3, &mut rng)).unwrap()
}

#[test]
fn payoff_operator_reproduces_simulation() {
    for seed in 0..20 {
        let g = random_game(seed);
        let r = payoff_operator(&g).unwrap();
        let ch = random_channel(1000 + seed);
        let sim = simulate(&g, &ch).unwrap();
        let via_r = r.value(&ch.choi_matrix()).unwrap();
        assert!((sim - via_r).abs() <= 1e-10, "seed {seed}: {sim} vs {via_r}");
        let op = ChoiOperator::global(ch.choi_matrix(), g.layout().clone()).unwrap();
        assert!((simulate_choi(&g, &op).unwrap() - sim).abs() <= 1e-10);
        assert!((0.0..=1.0 + 1e-12).contains(&sim));
        assert!(losr_core::tensor::psd_check(&r.r, 1e-9).unwrap().is_psd);
    }
}

#[test]
fn trivial_accept_projectors() {
    let mut g = random_game(7);
    let ch = random_channel(8);
    g.accept = ComplexMatrix::identity(8);
    assert!((simulate(&g, &ch).unwrap() - 1.0).abs() < 1e-12);
    assert!((payoff_operator(&g).unwrap().value(&ch.choi_matrix()).unwrap() - 1.0).abs() < 1e-12);
    g.accept = ComplexMatrix::zeros(8, 8);
    assert_eq!(simulate(&g, &ch).unwrap(), 0.0);
}

#[test]
fn chsh_constants() {
    let g = chsh_game();
    assert!((simulate(&g, &pr_box()).unwrap() - 1.0).abs() <= 1e-10);
    let best = brute_force_classical(&g).unwrap();
    assert_eq!(best.value, 0.75);
    assert_eq!(best.strategy, vec![vec![0, 0], vec![0, 0]]);
    let l = g.layout().clone();
    let noisy = simulate(&g, &completely_noisy(&l)).unwrap();
    assert!((noisy - 0.5).abs() < 1e-12);
}

#[test]
fn non_classical_game_is_refused() {
    assert!(brute_force_classical(&random_game(3)).is_err());
}

#[test]
fn anti_correlation_game() {
    // one question, win iff the answers differ
    let players = SystemLayout::new(vec![PartyDims::new(1, 2), PartyDims::new(1, 2)]).unwrap();
    let mut u = ComplexMatrix::zeros(8, 8);
    for f in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let to = (f ^ usize::from(a != b)) * 4 + a * 2 + b;
                u[(to, f * 4 + a * 2 + b)] = losr_core::C64::new(1.0, 0.0);
            }
        }
    }
    let g = Game {
        q: 1,
        pi: vec![1.0],
        rho: vec![ComplexMatrix::unit(2, 0, 0)],
        v_ops: vec![u],
        accept: kron(&ComplexMatrix::from_real_diag(&[0.0, 1.0]), &ComplexMatrix::identity(4)),
        dims: GameDims { v: 2, players },
    };
    assert_eq!(brute_force_classical(&g).unwrap().value, 1.0);
}

#[test]
fn cptp_projection_fixed_points_and_optimality() {
    let p = cptp_project(&ComplexMatrix::identity(4), 2, 2, DykstraOptions::default()).unwrap();
    assert!(p.choi.max_abs_diff(&ComplexMatrix::identity(4).scale(0.5)) < 1e-12);

    let mut rng = rng_from_seed(31);
    let m = random_hermitian(4, &mut rng);
    let proj = cptp_project(&m, 2, 2, DykstraOptions::default()).unwrap();
    let l = SystemLayout::single(2, 2).unwrap();
    assert!(is_cptp(&ChoiOperator::global(proj.choi.clone(), l).unwrap()).unwrap().pass);
    let d = fro_norm(&(&proj.choi - &m));
    for s in 0..1000 {
        let ch = KrausChannel::new(random_kraus_operators(2, 2, 1 + s % 4, &mut rng)).unwrap();
        assert!(d <= fro_norm(&(ch.choi_matrix() - m.clone())) + 1e-9);
    }
}

#[test]
fn product_regime_seesaw_matches_enumeration() {
    let g = chsh_game();
    let mut cfg = StrategySearchConfig::new(vec![1, 1], 4, 5);
    cfg.include_deterministic = false;
    let out = seesaw_lose(&g, &cfg).unwrap();
    assert!((out.simulated_value - 0.75).abs() <= 1e-3);
    assert!(out.search.monotone);
    assert!((out.search.value - out.simulated_value).abs() < 1e-9);
}

#[test]
fn qubit_entanglement_beats_classical() {
    let g = chsh_game();
    let cfg = StrategySearchConfig::new(vec![2, 2], 4, 1);
    let out = seesaw_lose(&g, &cfg).unwrap();
    assert!(out.simulated_value >= 0.85, "{}", out.simulated_value);
    assert!((out.simulated_value - chsh_quantum_value()).abs() <= 5e-3);
    assert!(out.simulated_value <= 1.0 + 1e-9);
    assert!(out.search.monotone);
}

#[test]
fn always_accept_is_won_at_once() {
    let mut g = chsh_game();
    g.accept = ComplexMatrix::identity(8);
    let cfg = StrategySearchConfig::new(vec![1, 1], 2, 0);
    let out = seesaw_lose(&g, &cfg).unwrap();
    assert!((out.simulated_value - 1.0).abs() < 1e-12);
}

#[test]
fn seesaw_is_deterministic() {
    let layout = SystemLayout::uniform(2, 2).unwrap();
    let mut rng = rng_from_seed(40);
    let r = random_hermitian(16, &mut rng);
    let cfg = StrategySearchConfig::new(vec![1, 1], 3, 9);
    let a = seesaw_on_payoff(&r, &layout, &cfg).unwrap();
    let b = seesaw_on_payoff(&r, &layout, &cfg).unwrap();
    assert_eq!(a.value, b.value);
    assert_eq!(a.restart_values, b.restart_values);
}

#[test]
fn product_strategy_realizes_and_resimulates() {
    let g = chsh_game();
    let layout = g.layout().clone();
    let mut cfg = StrategySearchConfig::new(vec![1, 1], 2, 3);
    cfg.include_deterministic = true;
    let out = seesaw_lose(&g, &cfg).unwrap();
    let channels = out.search.strategy.local_channels(&layout).unwrap();
    let form = LosrForm {
        layout: layout.clone(),
        mixture: vec![LosrTerm { prob: 1.0, channels }],
    };
    let real = realize_shared_randomness(&form).unwrap();
    let j = real.choi().unwrap();
    let ch = losr_core::choi::kraus_of_choi(&j, 4, 4, 1e-12).unwrap();
    assert!((simulate(&g, &ch).unwrap() - out.simulated_value).abs() <= 1e-8);
}

#[test]
fn weak_validity_instances() {
    let r = payoff_operator(&chsh_game()).unwrap().r;
    let l = SystemLayout::uniform(2, 2).unwrap();
    let budget = Budget::default();
    let yes = weak_validity(&r, &l, 0.6, 10, OperationClass::Losr, &budget).unwrap();
    assert_eq!(yes.verdict, Verdict::Yes);
    assert!(hs_inner(&r, &yes.certificate).re >= 0.7);
    let no = weak_validity(&r, &l, 0.9, 10, OperationClass::Losr, &budget).unwrap();
    assert_eq!(no.verdict, Verdict::NoEvidence);
    let unk = weak_validity(&r, &l, 0.8, 10, OperationClass::Losr, &budget).unwrap();
    assert_eq!(unk.verdict, Verdict::Unknown);
    let zero = ComplexMatrix::zeros(16, 16);
    let triv = weak_validity(&zero, &l, -1.0, 1, OperationClass::Losr, &budget).unwrap();
    assert_eq!(triv.verdict, Verdict::Yes);
}

#[test]
fn weak_membership_instances() {
    let l = SystemLayout::uniform(2, 2).unwrap();
    let id = weak_membership(&ComplexMatrix::identity(16), &l, 10, OperationClass::Losr).unwrap();
    assert_eq!(id.verdict, Verdict::Yes);

    let j_pr = choi_of_kraus(&pr_box(), &l).unwrap().into_matrix();
    let pr = weak_membership(&j_pr, &l, 10, OperationClass::Losr).unwrap();
    assert_eq!(pr.verdict, Verdict::NoEvidence);
    let w = pr.witness.unwrap();
    assert!((w.value + 0.25).abs() < 1e-10);
    let pr_lose = weak_membership(&j_pr, &l, 10, OperationClass::Lose).unwrap();
    assert_eq!(pr_lose.verdict, Verdict::NoEvidence);

    let swap = losr_core::catalog::swap_channel().choi_matrix();
    assert!(weak_membership(&swap, &l, 10, OperationClass::Losr).is_err());
}
