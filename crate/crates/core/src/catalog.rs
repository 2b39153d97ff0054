//! Named example objects: the completely noisy channel, SWAP, the CHSH game
//! and its relabelings, and the Popescu–Rohrlich box with a separable
//! certificate for its Choi matrix.

use serde::{Deserialize, Serialize};

use crate::choi::{ChannelSpec, KrausChannel, PartyDims, SystemLayout};
use crate::error::{Error, Result};
use crate::games::{Game, GameDims};
use crate::qspace::SpaceKind;
use crate::sep::{ProductTerm, SeparableCertificate};
use crate::tensor::{kron, ComplexMatrix, C64};

/// Classical CHSH value, as reproduced by exhaustive enumeration.
pub const CHSH_CLASSICAL: f64 = 0.75;

/// `cos^2(pi/8)`, the entangled CHSH value (Tsirelson).
pub fn chsh_quantum_value() -> f64 {
    (std::f64::consts::PI / 8.0).cos().powi(2)
}

/// `X -> tr(X) I / d_A` on the whole layout.
pub fn completely_noisy(layout: &SystemLayout) -> KrausChannel {
    completely_noisy_map(layout.d_x(), layout.d_a())
}

/// Kraus form of `X -> tr(X) I / dout`. When `din = dout = 2^q` the Kraus
/// operators are the Pauli products scaled by `1/dout`, whose entries (and
/// hence the Choi matrix) are exact in binary floating point.
pub fn completely_noisy_map(din: usize, dout: usize) -> KrausChannel {
    if din == dout && din.is_power_of_two() {
        return pauli_twirl(din.trailing_zeros() as usize);
    }
    let s = 1.0 / (dout as f64).sqrt();
    let ops = (0..dout)
        .flat_map(|a| (0..din).map(move |x| (a, x)))
        .map(|(a, x)| {
            let mut k = ComplexMatrix::zeros(dout, din);
            k[(a, x)] = C64::new(s, 0.0);
            k
        })
        .collect();
    KrausChannel::new(ops).expect("nonempty")
}

fn pauli_twirl(qubits: usize) -> KrausChannel {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let paulis = [
        ComplexMatrix::identity(2),
        ComplexMatrix::from_vec(2, 2, vec![z, one, one, z]).expect("2x2"),
        ComplexMatrix::from_vec(2, 2, vec![z, -i, i, z]).expect("2x2"),
        ComplexMatrix::from_vec(2, 2, vec![one, z, z, -one]).expect("2x2"),
    ];
    let mut ops = vec![ComplexMatrix::identity(1)];
    for _ in 0..qubits {
        ops = ops
            .iter()
            .flat_map(|k| paulis.iter().map(move |p| kron(k, p)))
            .collect();
    }
    let d = 1usize << qubits;
    KrausChannel::new(ops.into_iter().map(|k| k.scale(1.0 / d as f64)).collect()).expect("nonempty")
}

/// `|b><a|` on a qubit.
fn transition(a: usize, b: usize) -> ComplexMatrix {
    ComplexMatrix::unit(2, b, a)
}

/// The eight `(x -> a, y -> b)` pairs with `a xor b = x and y`, each
/// answer pair chosen uniformly.
pub fn pr_box_transitions() -> [((usize, usize), (usize, usize)); 8] {
    [
        ((0, 0), (0, 0)),
        ((0, 1), (0, 1)),
        ((0, 0), (1, 0)),
        ((0, 1), (1, 1)),
        ((1, 0), (0, 0)),
        ((1, 1), (0, 1)),
        ((1, 0), (1, 1)),
        ((1, 1), (1, 0)),
    ]
}

pub fn pr_box_layout() -> SystemLayout {
    SystemLayout::uniform(2, 2).expect("valid layout")
}

/// Popescu–Rohrlich box as a channel on two qubit parties: Kraus operators
/// `(1/sqrt 2) E_{x->a} (x) F_{y->b}`.
pub fn pr_box() -> KrausChannel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let ops = pr_box_transitions()
        .iter()
        .map(|&((x, a), (y, b))| kron(&transition(x, a), &transition(y, b)).scale(s))
        .collect();
    KrausChannel::new(ops).expect("nonempty")
}

/// Eight weight-1/2 terms, one per Kraus operator, each the product of the
/// rank-one Choi matrices `vec(E) vec(E)*` and `vec(F) vec(F)*`.
pub fn pr_box_separable_certificate() -> SeparableCertificate {
    let layout = pr_box_layout();
    let rank_one = |x: usize, a: usize| {
        // vec(|a><x|) = e_a (x) e_x
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(a * 2 + x, a * 2 + x)] = C64::new(1.0, 0.0);
        m
    };
    let terms = pr_box_transitions()
        .iter()
        .map(|&((x, a), (y, b))| ProductTerm {
            weight: 0.5,
            factors: vec![rank_one(x, a), rank_one(y, b)],
        })
        .collect();
    let target = layout
        .to_grouped(&pr_box().choi_matrix())
        .expect("layout matches");
    SeparableCertificate {
        space: SpaceKind::Hermitian,
        layout,
        terms,
        target,
    }
}

/// SWAP on two qubit parties: each party's output is the other's input.
pub fn swap_channel() -> KrausChannel {
    let mut u = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            u[(j * 2 + i, i * 2 + j)] = C64::new(1.0, 0.0);
        }
    }
    KrausChannel::unitary(u)
}

/// Two-player binary game won iff `a xor b = ((x xor alpha) and (y xor beta)) xor gamma`.
/// The referee keeps a flag qubit: it starts in `|0>`, `V_i` flips it on a
/// winning answer pair, and the accept projector tests the flag.
pub fn chsh_variant(alpha: usize, beta: usize, gamma: usize) -> Game {
    let layout = pr_box_layout();
    let mut rho = Vec::with_capacity(4);
    let mut v_ops = Vec::with_capacity(4);
    for x in 0..2 {
        for y in 0..2 {
            let mut r = ComplexMatrix::zeros(8, 8);
            let idx = x * 2 + y; // flag 0
            r[(idx, idx)] = C64::new(1.0, 0.0);
            rho.push(r);
            let target = ((x ^ alpha) & (y ^ beta)) ^ gamma;
            let mut u = ComplexMatrix::zeros(8, 8);
            for f in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let win = usize::from(a ^ b == target);
                        let from = f * 4 + a * 2 + b;
                        let to = (f ^ win) * 4 + a * 2 + b;
                        u[(to, from)] = C64::new(1.0, 0.0);
                    }
                }
            }
            v_ops.push(u);
        }
    }
    let accept = kron(
        &ComplexMatrix::from_real_diag(&[0.0, 1.0]),
        &ComplexMatrix::identity(4),
    );
    Game {
        q: 4,
        pi: vec![0.25; 4],
        rho,
        v_ops,
        accept,
        dims: GameDims { v: 2, players: layout },
    }
}

pub fn chsh_game() -> Game {
    chsh_variant(0, 0, 0)
}

/// The eight input/output relabelings of CHSH, labelled `chsh[alpha beta gamma]`.
pub fn chsh_relabelings() -> Vec<(String, Game)> {
    (0..8)
        .map(|c| {
            let (al, be, ga) = (c >> 2 & 1, c >> 1 & 1, c & 1);
            (format!("chsh[{al}{be}{ga}]"), chsh_variant(al, be, ga))
        })
        .collect()
}

/// `H = (3/16) I - R_accept(CHSH)`: nonnegative on product channels, `-1/4` on the PR box.
pub fn chsh_witness() -> Result<ComplexMatrix> {
    let r = crate::games::payoff_operator(&chsh_game())?.r;
    Ok(ComplexMatrix::identity(16).scale(CHSH_CLASSICAL / 4.0) - r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum ExamplePayload {
    Channel(ChannelSpec),
    Game(Game),
    Certificate(SeparableCertificate),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedExample {
    pub name: String,
    pub payload: ExamplePayload,
    pub expected: Vec<String>,
}

pub const EXAMPLE_NAMES: [&str; 6] = ["noisy", "noisy-qubits2x2", "prbox", "prbox-certificate", "swap", "chsh"];

pub fn named_example(name: &str) -> Result<NamedExample> {
    let qubits = pr_box_layout();
    let (payload, expected): (ExamplePayload, &[&str]) = match name {
        "noisy" => {
            let l = SystemLayout::new(vec![PartyDims::new(2, 2)])?;
            (
                ExamplePayload::Channel(ChannelSpec::from_kraus(l.clone(), completely_noisy(&l))),
                &["cptp", "nosig", "tensorq", "choi = I/2"],
            )
        }
        "noisy-qubits2x2" => (
            ExamplePayload::Channel(ChannelSpec::from_kraus(qubits.clone(), completely_noisy(&qubits))),
            &["cptp", "nosig", "tensorq", "choi = I/4"],
        ),
        "prbox" => (
            ExamplePayload::Channel(ChannelSpec::from_kraus(qubits, pr_box())),
            &["cptp", "nosig", "tensorq", "chsh value 1"],
        ),
        "prbox-certificate" => (
            ExamplePayload::Certificate(pr_box_separable_certificate()),
            &["cert verifies", "8 terms"],
        ),
        "swap" => (
            ExamplePayload::Channel(ChannelSpec::from_kraus(qubits, swap_channel())),
            &["cptp", "signals at K = {1} and K = {2}"],
        ),
        "chsh" => (
            ExamplePayload::Game(chsh_game()),
            &["classical value 0.75", "prbox value 1", "entangled value cos^2(pi/8)"],
        ),
        other => {
            return Err(Error::usage(format!(
                "unknown example '{other}' (known: {})",
                EXAMPLE_NAMES.join(", ")
            )))
        }
    };
    Ok(NamedExample {
        name: name.to_string(),
        payload,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    })
}
