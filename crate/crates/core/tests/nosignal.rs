use losr_core::catalog::{completely_noisy, completely_noisy_map, pr_box, swap_channel};
use losr_core::choi::{choi_of_kraus, ChoiOperator, KrausChannel, PartyDims, SystemLayout};
use losr_core::losr::LosrForm;
use losr_core::nosignal::{check_constraints, check_semantic, NOSIG_TOL};
use losr_core::qspace::{in_tensor_q, MEMBERSHIP_TOL};
use losr_core::random::{random_kraus_operators, rng_from_seed};

fn qubits() -> SystemLayout {
    SystemLayout::uniform(2, 2).unwrap()
}

#[test]
fn noisy_channel_passes_with_zero_residuals() {
    let l = qubits();
    let j = choi_of_kraus(&completely_noisy(&l), &l).unwrap();
    let r = check_constraints(&j, NOSIG_TOL).unwrap();
    assert!(r.pass);
    assert!(r.max_residual() < 1e-15);
}

#[test]
fn swap_signals_both_ways() {
    let l = qubits();
    let j = choi_of_kraus(&swap_channel(), &l).unwrap();
    let c = check_constraints(&j, NOSIG_TOL).unwrap();
    assert!(!c.pass);
    assert!(!c.entry(&[1]).unwrap().pass);
    assert!(!c.entry(&[2]).unwrap().pass);
    assert!(c.entry(&[1, 2]).unwrap().pass);
    let s = check_semantic(&j, 5, 3, NOSIG_TOL).unwrap();
    assert!(!s.pass);
    assert!(s.entry(&[1]).unwrap().residual > 0.1);
}

#[test]
fn pr_box_passes_both_methods() {
    let l = qubits();
    let j = choi_of_kraus(&pr_box(), &l).unwrap();
    let c = check_constraints(&j, NOSIG_TOL).unwrap();
    assert!(c.pass && c.max_residual() <= 1e-10);
    let s = check_semantic(&j, 5, 4, NOSIG_TOL).unwrap();
    assert!(s.pass && s.max_residual() <= 1e-10);
}

#[test]
fn identity_party_with_noisy_party() {
    let l = qubits();
    let ch = KrausChannel::identity(2).tensor(&completely_noisy_map(2, 2));
    let j = choi_of_kraus(&ch, &l).unwrap();
    assert!(check_constraints(&j, NOSIG_TOL).unwrap().pass);
    assert!(check_semantic(&j, 5, 5, NOSIG_TOL).unwrap().pass);
}

#[test]
fn methods_agree_and_match_tensor_q() {
    let l = SystemLayout::new(vec![PartyDims::new(2, 2), PartyDims::new(2, 3)]).unwrap();
    let mut rng = rng_from_seed(21);
    for i in 0..20 {
        let j = if i % 2 == 0 {
            LosrForm::random(&l, 3, 2, &mut rng).choi().unwrap()
        } else {
            KrausChannel::new(random_kraus_operators(l.d_x(), l.d_a(), 3, &mut rng))
                .unwrap()
                .choi_matrix()
        };
        let op = ChoiOperator::global(j.clone(), l.clone()).unwrap();
        let c = check_constraints(&op, NOSIG_TOL).unwrap();
        let s = check_semantic(&op, 3, i, NOSIG_TOL).unwrap();
        assert_eq!(c.pass, s.pass, "channel {i}");
        assert_eq!(c.pass, i % 2 == 0, "channel {i}");
        assert_eq!(c.pass, in_tensor_q(&j, &l, MEMBERSHIP_TOL).unwrap().member);
    }
}

#[test]
fn mixtures_of_passing_channels_pass() {
    let l = qubits();
    let a = choi_of_kraus(&pr_box(), &l).unwrap().into_matrix();
    let b = choi_of_kraus(&completely_noisy(&l), &l).unwrap().into_matrix();
    let mix = &a.scale(0.3) + &b.scale(0.7);
    let op = ChoiOperator::global(mix, l).unwrap();
    assert!(check_constraints(&op, NOSIG_TOL).unwrap().pass);
}
