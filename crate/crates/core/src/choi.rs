//! Choi representations of multi-party channels.
//!
//! For a map `Phi: L(X) -> L(A)` the Choi matrix is
//! `J(Phi) = sum_{x,y} Phi(e_x e_y*) (x) e_x e_y*` on `A (x) X`, so
//! `J[(a, x), (b, y)] = Phi(e_x e_y*)[a, b]`. With `m` parties the global
//! ordering is `A_1 .. A_m X_1 .. X_m`; the party-grouped ordering is
//! `(A_1 X_1) .. (A_m X_m)`. [`SystemLayout`] owns the permutation between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    hermitian_eig, kron, partial_trace, permute_subsystems, psd_check, ComplexMatrix,
    FactorShape, ZERO,
};

/// Default tolerance for the trace-preservation test.
pub const TP_TOL: f64 = 1e-8;
/// Default tolerance for positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartyDims {
    pub din: usize,
    pub dout: usize,
}

impl PartyDims {
    pub fn new(din: usize, dout: usize) -> Self {
        Self { din, dout }
    }

    /// Dimension of this party's `A_i (x) X_i` block.
    pub fn block(&self) -> usize {
        self.din * self.dout
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LayoutWire")]
pub struct SystemLayout {
    parties: Vec<PartyDims>,
}

#[derive(Deserialize)]
struct LayoutWire {
    parties: Vec<PartyDims>,
}

impl TryFrom<LayoutWire> for SystemLayout {
    type Error = Error;
    fn try_from(w: LayoutWire) -> Result<Self> {
        SystemLayout::new(w.parties)
    }
}

impl SystemLayout {
    pub fn new(parties: Vec<PartyDims>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::usage("layout needs at least one party"));
        }
        if parties.iter().any(|p| p.din == 0 || p.dout == 0) {
            return Err(Error::usage("layout dimensions must be positive"));
        }
        Ok(Self { parties })
    }

    /// `m` parties, each with input and output dimension `d`.
    pub fn uniform(m: usize, d: usize) -> Result<Self> {
        Self::new(vec![PartyDims::new(d, d); m])
    }

    pub fn single(din: usize, dout: usize) -> Result<Self> {
        Self::new(vec![PartyDims::new(din, dout)])
    }

    pub fn parties(&self) -> &[PartyDims] {
        &self.parties
    }

    pub fn party(&self, i: usize) -> PartyDims {
        self.parties[i]
    }

    pub fn m(&self) -> usize {
        self.parties.len()
    }

    pub fn d_x(&self) -> usize {
        self.parties.iter().map(|p| p.din).product()
    }

    pub fn d_a(&self) -> usize {
        self.parties.iter().map(|p| p.dout).product()
    }

    /// Dimension of the Choi matrix, `d_A d_X`.
    pub fn dim(&self) -> usize {
        self.d_a() * self.d_x()
    }

    pub fn input_shape(&self) -> FactorShape {
        FactorShape::new(self.parties.iter().map(|p| p.din).collect())
    }

    pub fn output_shape(&self) -> FactorShape {
        FactorShape::new(self.parties.iter().map(|p| p.dout).collect())
    }

    /// Factors `A_1 .. A_m X_1 .. X_m`.
    pub fn global_shape(&self) -> FactorShape {
        let mut dims: Vec<usize> = self.parties.iter().map(|p| p.dout).collect();
        dims.extend(self.parties.iter().map(|p| p.din));
        FactorShape::new(dims)
    }

    /// Factors `A_1 X_1 .. A_m X_m`.
    pub fn grouped_shape(&self) -> FactorShape {
        FactorShape::new(self.parties.iter().flat_map(|p| [p.dout, p.din]).collect())
    }

    /// One factor per party block `A_i X_i`.
    pub fn block_shape(&self) -> FactorShape {
        FactorShape::new(self.parties.iter().map(|p| p.block()).collect())
    }

    /// Permutation taking global to grouped: grouped position `2i` holds global
    /// factor `i` and position `2i + 1` holds global factor `m + i`.
    pub fn global_to_grouped_perm(&self) -> Vec<usize> {
        let m = self.m();
        (0..m).flat_map(|i| [i, m + i]).collect()
    }

    pub fn grouped_to_global_perm(&self) -> Vec<usize> {
        let m = self.m();
        (0..m).map(|i| 2 * i).chain((0..m).map(|i| 2 * i + 1)).collect()
    }

    pub fn to_grouped(&self, global: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(permute_subsystems(global, &self.global_shape(), &self.global_to_grouped_perm())?.0)
    }

    pub fn to_global(&self, grouped: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(permute_subsystems(grouped, &self.grouped_shape(), &self.grouped_to_global_perm())?.0)
    }

    /// Factor positions of `A_i` for `i` in `parties` within the global shape.
    pub fn output_factors(&self, parties: &[usize]) -> Vec<usize> {
        parties.to_vec()
    }

    /// Factor positions of `X_i` for `i` in `parties` within the global shape.
    pub fn input_factors(&self, parties: &[usize]) -> Vec<usize> {
        parties.iter().map(|i| self.m() + i).collect()
    }

    /// Sub-layout of the listed parties, in listed order.
    pub fn restrict(&self, parties: &[usize]) -> Result<SystemLayout> {
        SystemLayout::new(parties.iter().map(|&i| self.parties[i]).collect())
    }

    /// Parses `qubits{m}x{d}` (m parties, dimension d) or `din:dout,din:dout,...`.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("qubits") {
            let (m, d) = rest
                .split_once('x')
                .ok_or_else(|| Error::usage(format!("bad layout {s:?}")))?;
            let m: usize = m.parse().map_err(|_| Error::usage(format!("bad layout {s:?}")))?;
            let d: usize = d.parse().map_err(|_| Error::usage(format!("bad layout {s:?}")))?;
            return Self::uniform(m, d);
        }
        let parties = s
            .split(',')
            .map(|p| {
                let (i, o) = p
                    .split_once(':')
                    .ok_or_else(|| Error::usage(format!("bad party {p:?}")))?;
                let din = i.trim().parse().map_err(|_| Error::usage(format!("bad party {p:?}")))?;
                let dout = o.trim().parse().map_err(|_| Error::usage(format!("bad party {p:?}")))?;
                Ok(PartyDims::new(din, dout))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parties)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChoiOrdering {
    #[default]
    Global,
    Grouped,
}

/// A Choi matrix tagged with its layout and factor ordering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiOperator {
    matrix: ComplexMatrix,
    layout: SystemLayout,
    ordering: ChoiOrdering,
}

impl ChoiOperator {
    pub fn new(matrix: ComplexMatrix, layout: SystemLayout, ordering: ChoiOrdering) -> Result<Self> {
        matrix.check_dim(layout.dim(), "Choi matrix")?;
        Ok(Self {
            matrix,
            layout,
            ordering,
        })
    }

    pub fn global(matrix: ComplexMatrix, layout: SystemLayout) -> Result<Self> {
        Self::new(matrix, layout, ChoiOrdering::Global)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn ordering(&self) -> ChoiOrdering {
        self.ordering
    }

    /// The matrix in global ordering.
    pub fn global_matrix(&self) -> Result<ComplexMatrix> {
        match self.ordering {
            ChoiOrdering::Global => Ok(self.matrix.clone()),
            ChoiOrdering::Grouped => self.layout.to_global(&self.matrix),
        }
    }

    /// The matrix in party-grouped ordering.
    pub fn grouped_matrix(&self) -> Result<ComplexMatrix> {
        match self.ordering {
            ChoiOrdering::Global => self.layout.to_grouped(&self.matrix),
            ChoiOrdering::Grouped => Ok(self.matrix.clone()),
        }
    }

    pub fn to_ordering(&self, ordering: ChoiOrdering) -> Result<Self> {
        let matrix = match ordering {
            ChoiOrdering::Global => self.global_matrix()?,
            ChoiOrdering::Grouped => self.grouped_matrix()?,
        };
        Self::new(matrix, self.layout.clone(), ordering)
    }
}

/// Kraus operators, each `dout x din`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct KrausChannel {
    ops: Vec<ComplexMatrix>,
}

impl TryFrom<Vec<ComplexMatrix>> for KrausChannel {
    type Error = Error;
    fn try_from(ops: Vec<ComplexMatrix>) -> Result<Self> {
        KrausChannel::new(ops)
    }
}

impl From<KrausChannel> for Vec<ComplexMatrix> {
    fn from(k: KrausChannel) -> Self {
        k.ops
    }
}

impl KrausChannel {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::usage("Kraus list is empty"))?;
        let shape = first.shape();
        if ops.iter().any(|k| k.shape() != shape) {
            return Err(Error::usage("Kraus operators have inconsistent shapes"));
        }
        Ok(Self { ops })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            ops: vec![ComplexMatrix::identity(d)],
        }
    }

    /// Unitary channel `X -> U X U*`.
    pub fn unitary(u: ComplexMatrix) -> Self {
        Self { ops: vec![u] }
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn din(&self) -> usize {
        self.ops[0].cols()
    }

    pub fn dout(&self) -> usize {
        self.ops[0].rows()
    }

    pub fn rank(&self) -> usize {
        self.ops.len()
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        x.check_dim(self.din(), "channel input")?;
        let mut out = ComplexMatrix::zeros(self.dout(), self.dout());
        for k in &self.ops {
            out += &x.conjugate_by(k);
        }
        Ok(out)
    }

    /// `sum K* K`.
    pub fn gram(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.din(), self.din());
        for k in &self.ops {
            s += &k.dagger().matmul(k);
        }
        s
    }

    /// `||sum K* K - I||_F`.
    pub fn tp_residual(&self) -> f64 {
        crate::tensor::fro_norm(&(self.gram() - ComplexMatrix::identity(self.din())))
    }

    /// Kraus operators of `self (x) other`.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let ops = self
            .ops
            .iter()
            .flat_map(|a| other.ops.iter().map(move |b| kron(a, b)))
            .collect();
        KrausChannel { ops }
    }

    pub fn tensor_all(channels: &[KrausChannel]) -> Result<KrausChannel> {
        let (first, rest) = channels
            .split_first()
            .ok_or_else(|| Error::usage("empty channel list"))?;
        Ok(rest.iter().fold(first.clone(), |acc, c| acc.tensor(c)))
    }

    /// Choi matrix on `A (x) X`.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let (din, dout) = (self.din(), self.dout());
        let n = din * dout;
        let mut j = ComplexMatrix::zeros(n, n);
        for k in &self.ops {
            // vec(K)[a * din + x] = K[a, x]
            let v = k.data();
            for r in 0..n {
                if v[r] == ZERO {
                    continue;
                }
                for c in 0..n {
                    j[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        j
    }
}

/// Choi operator (global ordering) of a Kraus channel acting on the joint
/// input `X_1 .. X_m`.
pub fn choi_of_kraus(ch: &KrausChannel, layout: &SystemLayout) -> Result<ChoiOperator> {
    if ch.din() != layout.d_x() || ch.dout() != layout.d_a() {
        return Err(Error::usage(format!(
            "Kraus shape {}x{} does not match layout d_A={} d_X={}",
            ch.dout(),
            ch.din(),
            layout.d_a(),
            layout.d_x()
        )));
    }
    ChoiOperator::global(ch.choi_matrix(), layout.clone())
}

/// Choi matrix of an arbitrary linear map, straight from the definition.
pub fn choi_of_map(
    din: usize,
    dout: usize,
    map: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(din * dout, din * dout);
    for x in 0..din {
        for y in 0..din {
            let img = map(&ComplexMatrix::unit(din, x, y));
            j += &kron(&img, &ComplexMatrix::unit(din, x, y));
        }
    }
    j
}

/// `Lambda(X)[a, b] = sum_{x,y} J[(a, x), (b, y)] X[x, y]` for a single-system
/// Choi matrix on `A (x) X`.
pub fn apply_choi_matrix(j: &ComplexMatrix, din: usize, dout: usize, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    j.check_dim(din * dout, "Choi matrix")?;
    x.check_dim(din, "channel input")?;
    Ok(ComplexMatrix::from_fn(dout, dout, |a, b| {
        let mut s = ZERO;
        for xi in 0..din {
            for yi in 0..din {
                s += j[(a * din + xi, b * din + yi)] * x[(xi, yi)];
            }
        }
        s
    }))
}

pub fn apply_choi(j: &ChoiOperator, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let l = j.layout();
    apply_choi_matrix(&j.global_matrix()?, l.d_x(), l.d_a(), x)
}

/// `(id_V (x) Lambda)(rho)` for `rho` on `V (x) X`.
pub fn apply_choi_extended(
    j: &ComplexMatrix,
    din: usize,
    dout: usize,
    dv: usize,
    rho: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    j.check_dim(din * dout, "Choi matrix")?;
    rho.check_dim(dv * din, "extended input")?;
    let n = dv * dout;
    let mut out = ComplexMatrix::zeros(n, n);
    for v in 0..dv {
        for vp in 0..dv {
            for a in 0..dout {
                for ap in 0..dout {
                    let mut s = ZERO;
                    for x in 0..din {
                        for xp in 0..din {
                            s += j[(a * din + x, ap * din + xp)] * rho[(v * din + x, vp * din + xp)];
                        }
                    }
                    out[(v * dout + a, vp * dout + ap)] = s;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CpReport {
    pub is_cp: bool,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TpReport {
    pub is_tp: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CptpReport {
    pub cp: CpReport,
    pub tp: TpReport,
    pub pass: bool,
}

pub fn is_cp(j: &ChoiOperator, tol: f64) -> Result<CpReport> {
    let r = psd_check(j.matrix(), tol)?;
    Ok(CpReport {
        is_cp: r.is_psd,
        min_eigenvalue: r.min_eigenvalue,
    })
}

/// `||Tr_A J - I_X||_F`.
pub fn tp_residual(j: &ChoiOperator) -> Result<f64> {
    let l = j.layout();
    let g = j.global_matrix()?;
    let outputs: Vec<usize> = (0..l.m()).collect();
    let (t, _) = partial_trace(&g, &l.global_shape(), &outputs)?;
    Ok(crate::tensor::fro_norm(&(t - ComplexMatrix::identity(l.d_x()))))
}

pub fn is_tp(j: &ChoiOperator, tol: f64) -> Result<TpReport> {
    let residual = tp_residual(j)?;
    Ok(TpReport {
        is_tp: residual <= tol,
        residual,
    })
}

pub fn is_cptp(j: &ChoiOperator) -> Result<CptpReport> {
    is_cptp_with(j, PSD_TOL, TP_TOL)
}

pub fn is_cptp_with(j: &ChoiOperator, psd_tol: f64, tp_tol: f64) -> Result<CptpReport> {
    let cp = is_cp(j, psd_tol)?;
    let tp = is_tp(j, tp_tol)?;
    let pass = cp.is_cp && tp.is_tp;
    Ok(CptpReport { cp, tp, pass })
}

/// Choi matrix of `X -> Psi(X (x) Z)` from `J(Psi)` ordered `A (x) X (x) E`:
/// `J(Lambda)[(a, x), (b, y)] = sum_{e,f} Z[e, f] J(Psi)[(a, x, e), (b, y, f)]`,
/// which is `Tr_E[(I_{AX} (x) Z^T) J(Psi)]`.
pub fn restrict_by_state(
    jpsi: &ComplexMatrix,
    d_ax: usize,
    z: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let de = z.check_square("auxiliary operator")?;
    jpsi.check_dim(d_ax * de, "Choi matrix of the extended map")?;
    Ok(ComplexMatrix::from_fn(d_ax, d_ax, |i, j| {
        let mut s = ZERO;
        for e in 0..de {
            for f in 0..de {
                s += z[(e, f)] * jpsi[(i * de + e, j * de + f)];
            }
        }
        s
    }))
}

/// `(phi_H (x) id_E)(J(Psi))` where `phi_H(Y) = <H, Y>`; a matrix on `E`.
pub fn functional_on_first(h: &ComplexMatrix, jpsi: &ComplexMatrix, de: usize) -> Result<ComplexMatrix> {
    let d = h.check_square("functional")?;
    jpsi.check_dim(d * de, "Choi matrix of the extended map")?;
    Ok(ComplexMatrix::from_fn(de, de, |e, f| {
        let mut s = ZERO;
        for i in 0..d {
            for j in 0..d {
                s += h[(i, j)].conj() * jpsi[(i * de + e, j * de + f)];
            }
        }
        s
    }))
}

/// `|<H, J(Lambda)> - <conj(Z), (phi_H (x) id_E)(J(Psi))>|` with `J(Lambda)` from
/// [`restrict_by_state`]; the two sides are computed independently.
pub fn functional_pairing_check(
    h: &ComplexMatrix,
    jpsi: &ComplexMatrix,
    z: &ComplexMatrix,
) -> Result<f64> {
    let d = h.check_square("functional")?;
    let de = z.check_square("auxiliary operator")?;
    let lhs = crate::tensor::hs_inner(h, &restrict_by_state(jpsi, d, z)?);
    let m = functional_on_first(h, jpsi, de)?;
    let rhs = crate::tensor::hs_inner(&z.conj(), &m);
    Ok((lhs - rhs).norm())
}

/// Kraus operators from a PSD Choi matrix on `A (x) X`; eigenpairs with
/// eigenvalue at most `cutoff` are dropped.
pub fn kraus_of_choi(j: &ComplexMatrix, din: usize, dout: usize, cutoff: f64) -> Result<KrausChannel> {
    j.check_dim(din * dout, "Choi matrix")?;
    let e = hermitian_eig(j)?;
    let mut ops = Vec::new();
    for (k, &l) in e.values.iter().enumerate() {
        if l <= cutoff {
            continue;
        }
        let s = l.sqrt();
        ops.push(ComplexMatrix::from_fn(dout, din, |a, x| {
            e.vectors[(a * din + x, k)] * s
        }));
    }
    if ops.is_empty() {
        ops.push(ComplexMatrix::zeros(dout, din));
    }
    KrausChannel::new(ops)
}

/// Channel interchange format: Kraus or Choi payload plus the layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub layout: SystemLayout,
    pub form: ChannelForm,
    #[serde(default)]
    pub ordering: ChoiOrdering,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<KrausChannel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<ComplexMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelForm {
    Kraus,
    Choi,
}

impl ChannelSpec {
    pub fn from_kraus(layout: SystemLayout, ch: KrausChannel) -> Self {
        Self {
            layout,
            form: ChannelForm::Kraus,
            ordering: ChoiOrdering::Global,
            kraus: Some(ch),
            choi: None,
        }
    }

    pub fn from_choi(j: &ChoiOperator) -> Self {
        Self {
            layout: j.layout().clone(),
            form: ChannelForm::Choi,
            ordering: j.ordering(),
            kraus: None,
            choi: Some(j.matrix().clone()),
        }
    }

    pub fn to_choi(&self) -> Result<ChoiOperator> {
        match self.form {
            ChannelForm::Kraus => {
                let k = self
                    .kraus
                    .as_ref()
                    .ok_or_else(|| Error::usage("channel form is kraus but no kraus payload"))?;
                choi_of_kraus(k, &self.layout)
            }
            ChannelForm::Choi => {
                let m = self
                    .choi
                    .clone()
                    .ok_or_else(|| Error::usage("channel form is choi but no choi payload"))?;
                ChoiOperator::new(m, self.layout.clone(), self.ordering)
            }
        }
    }
}

/// `J(Phi_1 (x) .. (x) Phi_m)` in global ordering from per-party Choi matrices.
pub fn product_choi(layout: &SystemLayout, party_chois: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    if party_chois.len() != layout.m() {
        return Err(Error::usage("one Choi matrix per party required"));
    }
    for (p, j) in layout.parties().iter().zip(party_chois) {
        j.check_dim(p.block(), "party Choi matrix")?;
    }
    let grouped = crate::tensor::kron_all(party_chois)?;
    layout.to_global(&grouped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_kraus_operators, rng_from_seed};
    use crate::tensor::{trace_norm, C64};

    fn x_gate() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn unnormalized_noisy_channel_has_identity_choi() {
        let mut ops = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                ops.push(ComplexMatrix::from_fn(2, 2, |r, c| {
                    if r == a && c == b { C64::new(1.0, 0.0) } else { ZERO }
                }));
            }
        }
        let j = KrausChannel::new(ops).unwrap().choi_matrix();
        assert_eq!(j, ComplexMatrix::identity(4));
    }

    #[test]
    fn x_gate_choi_by_hand() {
        let j = KrausChannel::unitary(x_gate()).choi_matrix();
        // vec(X) has ones at (a, x) = (0, 1) and (1, 0), i.e. indices 1 and 2.
        let mut w = vec![ZERO; 4];
        w[1] = C64::new(1.0, 0.0);
        w[2] = C64::new(1.0, 0.0);
        assert_eq!(j, ComplexMatrix::outer(&w, &w));
    }

    #[test]
    fn choi_matches_definition_and_application() {
        let mut rng = rng_from_seed(31);
        let ch = KrausChannel::new(random_kraus_operators(3, 2, 2, &mut rng)).unwrap();
        let j = ch.choi_matrix();
        let by_def = choi_of_map(3, 2, |x| ch.apply(x).unwrap());
        assert!(j.max_abs_diff(&by_def) < 1e-12);
        let x = random_hermitian(3, &mut rng);
        let direct = ch.apply(&x).unwrap();
        let via = apply_choi_matrix(&j, 3, 2, &x).unwrap();
        assert!(direct.max_abs_diff(&via) < 1e-12);
        assert!((trace_norm(&j).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn extended_application_matches_kraus() {
        let mut rng = rng_from_seed(32);
        let ch = KrausChannel::new(random_kraus_operators(2, 3, 2, &mut rng)).unwrap();
        let ext = KrausChannel::identity(2).tensor(&ch);
        let rho = random_density(4, &mut rng);
        let a = ext.apply(&rho).unwrap();
        let b = apply_choi_extended(&ch.choi_matrix(), 2, 3, 2, &rho).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn cptp_reports() {
        let l = SystemLayout::single(2, 2).unwrap();
        let j = ChoiOperator::global(ComplexMatrix::identity(4), l.clone()).unwrap();
        let r = is_cptp(&j).unwrap();
        assert!(r.cp.is_cp && !r.tp.is_tp);
        let j = ChoiOperator::global(ComplexMatrix::identity(4).scale(0.5), l).unwrap();
        assert!(is_cptp(&j).unwrap().pass);
    }

    #[test]
    fn ordering_round_trip() {
        let mut rng = rng_from_seed(33);
        let l = SystemLayout::new(vec![PartyDims::new(2, 3), PartyDims::new(3, 2)]).unwrap();
        let m = random_hermitian(l.dim(), &mut rng);
        let back = l.to_global(&l.to_grouped(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn product_choi_matches_tensor_channel() {
        let mut rng = rng_from_seed(34);
        let l = SystemLayout::new(vec![PartyDims::new(2, 3), PartyDims::new(3, 2)]).unwrap();
        let c1 = KrausChannel::new(random_kraus_operators(2, 3, 2, &mut rng)).unwrap();
        let c2 = KrausChannel::new(random_kraus_operators(3, 2, 2, &mut rng)).unwrap();
        let joint = choi_of_kraus(&c1.tensor(&c2), &l).unwrap();
        let prod = product_choi(&l, &[&c1.choi_matrix(), &c2.choi_matrix()]).unwrap();
        assert!(joint.matrix().max_abs_diff(&prod) < 1e-12);
    }

    #[test]
    fn kraus_round_trip_through_choi() {
        let mut rng = rng_from_seed(35);
        let ch = KrausChannel::new(random_kraus_operators(2, 2, 3, &mut rng)).unwrap();
        let j = ch.choi_matrix();
        let back = kraus_of_choi(&j, 2, 2, 1e-10).unwrap();
        assert!(back.choi_matrix().max_abs_diff(&j) < 1e-10);
        assert!(back.tp_residual() < 1e-9);
    }

    #[test]
    fn layout_parsing() {
        let l = SystemLayout::parse("qubits2x2").unwrap();
        assert_eq!(l.m(), 2);
        assert_eq!(l.dim(), 16);
        let l = SystemLayout::parse("2:3,1:2").unwrap();
        assert_eq!(l.party(0), PartyDims::new(2, 3));
        assert!(SystemLayout::parse("qubits").is_err());
        assert!(serde_json::from_str::<SystemLayout>(r#"{"parties":[]}"#).is_err());
    }
}
