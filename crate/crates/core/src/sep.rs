//! Separable certificates over per-party subspaces.
//!
//! A [`SeparableCertificate`] is a nonnegative combination of products
//! `P_1 (x) .. (x) P_m` with each `P_i` PSD inside its party's subspace (`Q_i` or
//! the full Hermitian space). Factors and targets use the party-grouped
//! ordering. The constructions here are:
//!
//! * [`sep_generate`]: `X = X+ - X-` with both halves separable and
//!   `||X+-|| <= 2^(m-1) sqrt(n) ||X||_F`, via the product basis and the splits
//!   `E+- = (||E|| I +- E)/2` of each basis element.
//! * [`identity_minus_product`]: `||P|| I - P` for a product `P`.
//! * [`identity_minus_separable`]: `(n+1) ||Q|| I - Q` for separable `Q`, after
//!   reducing `Q` to at most `n + 1` terms with [`caratheodory_reduce`].
//! * [`identity_minus_any`]: `k ||X||_F I - X` for any `X` in the product span.

use serde::{Deserialize, Serialize};

use crate::choi::SystemLayout;
use crate::error::{Error, Result};
use crate::qspace::{
    for_each_multi_index, product_coefficients, project_onto_space, project_onto_tensor_q,
    space_basis, space_dimension, SpaceKind,
};
use crate::tensor::{
    fro_norm, hermitian_eig, kron_all, op_norm, ComplexMatrix, HERM_TOL,
};

/// Terms whose weight or factor norm is at most this are dropped.
pub const ZERO_TERM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub weight: f64,
    /// One PSD factor per party, on `A_i (x) X_i`.
    pub factors: Vec<ComplexMatrix>,
}

impl ProductTerm {
    pub fn product(&self) -> Result<ComplexMatrix> {
        let refs: Vec<&ComplexMatrix> = self.factors.iter().collect();
        kron_all(&refs)
    }

    fn is_negligible(&self) -> bool {
        self.weight.abs() <= ZERO_TERM || self.factors.iter().any(|f| fro_norm(f) <= ZERO_TERM)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableCertificate {
    pub space: SpaceKind,
    pub layout: SystemLayout,
    pub terms: Vec<ProductTerm>,
    /// Claimed sum, party-grouped ordering.
    pub target: ComplexMatrix,
}

impl SeparableCertificate {
    pub fn empty(space: SpaceKind, layout: SystemLayout) -> Self {
        let d = layout.dim();
        Self {
            space,
            layout,
            terms: Vec::new(),
            target: ComplexMatrix::zeros(d, d),
        }
    }

    /// `sum_j w_j P_{j,1} (x) .. (x) P_{j,m}`, summed in term order.
    pub fn reassemble(&self) -> Result<ComplexMatrix> {
        let d = self.layout.dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for t in &self.terms {
            acc += &t.product()?.scale(t.weight);
        }
        Ok(acc)
    }

    /// Dimension `n` of the product space `S_1 (x) .. (x) S_m`.
    pub fn space_dim(&self) -> usize {
        self.layout
            .parties()
            .iter()
            .map(|p| space_dimension(self.space, p.din, p.dout))
            .product()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn push(&mut self, weight: f64, factors: Vec<ComplexMatrix>) {
        let t = ProductTerm { weight, factors };
        if !t.is_negligible() {
            self.terms.push(t);
        }
    }

    fn identity_factors(&self) -> Vec<ComplexMatrix> {
        self.layout
            .parties()
            .iter()
            .map(|p| ComplexMatrix::identity(p.block()))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyTolerances {
    /// PSD tolerance per factor, relative to `max(1, ||P||)`.
    pub psd: f64,
    /// Subspace residual per factor, relative to `max(1, ||P||_F)`.
    pub subspace: f64,
    /// Reassembly residual, relative to `max(1, ||target||_F)`.
    pub reassembly: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            psd: 1e-9,
            subspace: 1e-9,
            reassembly: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermCheck {
    pub index: usize,
    pub weight: f64,
    /// Smallest eigenvalue over the term's factors.
    pub min_eigenvalue: f64,
    /// Largest subspace residual over the term's factors.
    pub subspace_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub pass: bool,
    pub term_count: usize,
    pub negative_weights: Vec<usize>,
    pub psd_failures: Vec<usize>,
    pub subspace_failures: Vec<usize>,
    pub min_eigenvalue: f64,
    pub max_subspace_residual: f64,
    /// `||sum - target||_F`.
    pub reassembly_residual: f64,
    pub terms: Vec<TermCheck>,
}

/// Checks weights, factor positivity, factor subspace membership and
/// reassembly. Never fails: problems become report entries.
pub fn verify_certificate(cert: &SeparableCertificate, tol: VerifyTolerances) -> CertificateReport {
    let m = cert.layout.m();
    let mut terms = Vec::with_capacity(cert.terms.len());
    let mut negative_weights = Vec::new();
    let mut psd_failures = Vec::new();
    let mut subspace_failures = Vec::new();
    let mut shape_ok = cert.target.shape() == (cert.layout.dim(), cert.layout.dim());
    for (idx, t) in cert.terms.iter().enumerate() {
        let mut min_eig = f64::INFINITY;
        let mut sub_res = 0.0f64;
        let mut ok = t.weight >= 0.0 && t.weight.is_finite();
        if !ok {
            negative_weights.push(idx);
        }
        if t.factors.len() != m {
            shape_ok = false;
        }
        let mut psd_ok = true;
        let mut sub_ok = true;
        for (f, p) in t.factors.iter().zip(cert.layout.parties()) {
            if f.shape() != (p.block(), p.block()) {
                shape_ok = false;
                continue;
            }
            match hermitian_eig(f) {
                Ok(e) => {
                    let scale = e.max().abs().max(e.min().abs()).max(1.0);
                    min_eig = min_eig.min(e.min());
                    if e.min() < -tol.psd * scale {
                        psd_ok = false;
                    }
                }
                Err(_) => {
                    psd_ok = false;
                    min_eig = f64::NEG_INFINITY;
                }
            }
            match project_onto_space(cert.space, f, p.din, p.dout) {
                Ok(proj) => {
                    let r = fro_norm(&(f - &proj));
                    sub_res = sub_res.max(r);
                    if r > tol.subspace * fro_norm(f).max(1.0) {
                        sub_ok = false;
                    }
                }
                Err(_) => {
                    sub_ok = false;
                    sub_res = f64::INFINITY;
                }
            }
        }
        if !psd_ok {
            psd_failures.push(idx);
        }
        if !sub_ok {
            subspace_failures.push(idx);
        }
        ok &= psd_ok && sub_ok;
        terms.push(TermCheck {
            index: idx,
            weight: t.weight,
            min_eigenvalue: min_eig,
            subspace_residual: sub_res,
            pass: ok,
        });
    }
    let reassembly_residual = if shape_ok {
        cert.reassemble()
            .map(|r| fro_norm(&(r - &cert.target)))
            .unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    };
    let reassembly_ok = reassembly_residual <= tol.reassembly * fro_norm(&cert.target).max(1.0);
    let min_eigenvalue = terms.iter().map(|t| t.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let max_subspace_residual = terms.iter().map(|t| t.subspace_residual).fold(0.0, f64::max);
    CertificateReport {
        pass: shape_ok
            && reassembly_ok
            && negative_weights.is_empty()
            && psd_failures.is_empty()
            && subspace_failures.is_empty(),
        term_count: cert.terms.len(),
        negative_weights,
        psd_failures,
        subspace_failures,
        min_eigenvalue: if terms.is_empty() { 0.0 } else { min_eigenvalue },
        max_subspace_residual,
        reassembly_residual,
        terms,
    }
}

/// `X+- = (||X|| I +- X)/2`: both PSD, `X = X+ - X-`, `||X+-|| <= ||X||`.
pub fn split_psd(x: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = x.check_square("operator to split")?;
    x.ensure_hermitian(HERM_TOL, "operator to split")?;
    let x = x.hermitian_part();
    let norm = op_norm(&x)?;
    let i = ComplexMatrix::identity(n).scale(norm);
    Ok(((&i + &x).scale(0.5), (&i - &x).scale(0.5)))
}

/// Residual of `x` (grouped) outside `S_1 (x) .. (x) S_m`.
pub fn span_residual(x: &ComplexMatrix, layout: &SystemLayout, kind: SpaceKind) -> Result<f64> {
    x.check_dim(layout.dim(), "grouped operator")?;
    match kind {
        SpaceKind::Q => Ok(fro_norm(&(x - &project_onto_tensor_q(x, layout)?))),
        SpaceKind::Hermitian => Ok(fro_norm(&(x - &x.hermitian_part()))),
    }
}

const SPAN_TOL: f64 = 1e-8;

fn require_in_span(x: &ComplexMatrix, layout: &SystemLayout, kind: SpaceKind) -> Result<()> {
    x.ensure_hermitian(HERM_TOL, "operator")?;
    let r = span_residual(x, layout, kind)?;
    if r > SPAN_TOL * fro_norm(x).max(1.0) {
        return Err(Error::contract("operator is outside the product subspace", r));
    }
    Ok(())
}

/// Splits a grouped-order `X` in `S_1 (x) .. (x) S_m` into separable halves
/// `X = X+ - X-`. Returns the certificates for `X+` and `X-`.
pub fn sep_generate(
    x: &ComplexMatrix,
    layout: &SystemLayout,
    kind: SpaceKind,
) -> Result<(SeparableCertificate, SeparableCertificate)> {
    x.check_dim(layout.dim(), "grouped operator")?;
    require_in_span(x, layout, kind)?;
    let x = x.hermitian_part();
    let mut plus = SeparableCertificate::empty(kind, layout.clone());
    let mut minus = SeparableCertificate::empty(kind, layout.clone());

    if layout.m() == 1 {
        let (p, q) = split_psd(&x)?;
        plus.push(1.0, vec![p.clone()]);
        minus.push(1.0, vec![q.clone()]);
        plus.target = p;
        minus.target = q;
        return Ok((plus, minus));
    }

    // Per-party basis elements and their PSD splits.
    let bases: Vec<_> = layout
        .parties()
        .iter()
        .map(|p| space_basis(kind, p.din, p.dout))
        .collect();
    let splits: Vec<Vec<(ComplexMatrix, ComplexMatrix)>> = bases
        .iter()
        .map(|b| b.elements.iter().map(split_psd).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let coeffs = product_coefficients(&x, layout, kind)?;
    let sizes: Vec<usize> = bases.iter().map(|b| b.dim()).collect();
    let m = layout.m();

    let mut k = 0usize;
    for_each_multi_index(&sizes, |idx| {
        let c = coeffs[k].re;
        k += 1;
        if c.abs() <= ZERO_TERM {
            return;
        }
        // Sign patterns with an even number of minus factors form K+, odd K-.
        for pattern in 0..(1usize << m) {
            let odd = pattern.count_ones() % 2 == 1;
            let factors: Vec<ComplexMatrix> = (0..m)
                .map(|i| {
                    let (ep, em) = &splits[i][idx[i]];
                    if pattern >> i & 1 == 1 { em.clone() } else { ep.clone() }
                })
                .collect();
            // c > 0: K+ to X+, K- to X-; c < 0: K- to X+, K+ to X-.
            if (c > 0.0) != odd {
                plus.push(c.abs(), factors);
            } else {
                minus.push(c.abs(), factors);
            }
        }
    });
    plus.target = plus.reassemble()?;
    minus.target = minus.reassemble()?;
    Ok((plus, minus))
}

fn check_psd_factor(p: &ComplexMatrix, what: &str) -> Result<f64> {
    let e = hermitian_eig(p)?;
    let scale = e.max().abs().max(1.0);
    if e.min() < -1e-9 * scale {
        return Err(Error::contract(format!("{what} is not PSD"), -e.min()));
    }
    Ok(e.max().max(0.0))
}

/// Certificate for `||P|| I - P` with `P = P_1 (x) .. (x) P_m`, following the
/// recursion `[P_<m (x) S'] + [S (x) P_m] + [S (x) S']` where
/// `S' = ||P_m|| I - P_m` and `S` certifies `||P_<m|| I - P_<m`.
pub fn identity_minus_product(
    factors: &[ComplexMatrix],
    layout: &SystemLayout,
    kind: SpaceKind,
) -> Result<SeparableCertificate> {
    if factors.len() != layout.m() {
        return Err(Error::usage("one factor per party required"));
    }
    let mut norms = Vec::with_capacity(factors.len());
    for (i, (f, p)) in factors.iter().zip(layout.parties()).enumerate() {
        f.check_dim(p.block(), "product factor")?;
        norms.push(check_psd_factor(f, &format!("factor {}", i + 1))?);
        let proj = project_onto_space(kind, f, p.din, p.dout)?;
        let r = fro_norm(&(f - &proj));
        if r > SPAN_TOL * fro_norm(f).max(1.0) {
            return Err(Error::contract(format!("factor {} is outside its subspace", i + 1), r));
        }
    }
    let terms = identity_minus_product_terms(factors, &norms);
    let mut cert = SeparableCertificate::empty(kind, layout.clone());
    for (w, f) in terms {
        cert.push(w, f);
    }
    let total_norm: f64 = norms.iter().product();
    let p = kron_all(&factors.iter().collect::<Vec<_>>())?;
    cert.target = ComplexMatrix::identity(layout.dim()).scale(total_norm) - p;
    Ok(cert)
}

fn complement(p: &ComplexMatrix, norm: f64) -> ComplexMatrix {
    ComplexMatrix::identity(p.rows()).scale(norm) - p
}

fn identity_minus_product_terms(
    factors: &[ComplexMatrix],
    norms: &[f64],
) -> Vec<(f64, Vec<ComplexMatrix>)> {
    let m = factors.len();
    let last = &factors[m - 1];
    let s_last = complement(last, norms[m - 1]);
    if m == 1 {
        return vec![(1.0, vec![s_last])];
    }
    let head = identity_minus_product_terms(&factors[..m - 1], &norms[..m - 1]);
    let mut out = Vec::with_capacity(1 + 2 * head.len());
    let mut first: Vec<ComplexMatrix> = factors[..m - 1].to_vec();
    first.push(s_last.clone());
    out.push((1.0, first));
    for (w, f) in &head {
        let mut g = f.clone();
        g.push(last.clone());
        out.push((*w, g));
    }
    for (w, f) in head {
        let mut g = f;
        g.push(s_last.clone());
        out.push((w, g));
    }
    out
}

/// Real coordinates of a Hermitian matrix: the diagonal, then `sqrt2 Re` and
/// `sqrt2 Im` of the strict upper triangle. Isometric for the HS inner product.
fn real_coords(m: &ComplexMatrix, out: &mut Vec<f64>) {
    let n = m.rows();
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(s * m[(i, j)].re);
            out.push(s * m[(i, j)].im);
        }
    }
}

/// Reduces a certificate to at most `n + 1` terms (`n` the product-space
/// dimension) without changing its sum.
///
/// Each term is vectorized and augmented with a constant 1. A reduced row
/// echelon tableau of these columns gives, for every non-basic column `j`,
/// the null vector `c_j = 1`, `c_{B_i} = -T[i][j]`. Weights move along `-c`
/// until one reaches zero; a basic column that hits zero is pivoted out. At
/// the end only basic columns carry weight, and there are at most
/// `rank <= n + 1` of them.
pub fn caratheodory_reduce(cert: &SeparableCertificate) -> Result<SeparableCertificate> {
    let n = cert.space_dim();
    if cert.terms.len() <= n + 1 {
        return Ok(cert.clone());
    }
    let t = cert.terms.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(t);
    for term in &cert.terms {
        let mut v = Vec::new();
        real_coords(&term.product()?, &mut v);
        v.push(1.0);
        cols.push(v);
    }
    let r = cols[0].len();

    // Row-major tableau r x t, reduced in place.
    let mut a = vec![0.0f64; r * t];
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            a[i * t + j] = v;
        }
    }
    let max_col = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let pivot_tol = 1e-10 * max_col.max(1.0);

    // basis[i] = column basic in tableau row i.
    let mut basis: Vec<usize> = Vec::new();
    let mut is_basic = vec![false; t];
    let mut row = 0usize;
    for j in 0..t {
        if row == r {
            break;
        }
        let (p, pv) = (row..r)
            .map(|i| (i, a[i * t + j].abs()))
            .fold((row, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pv <= pivot_tol {
            continue;
        }
        if p != row {
            for k in 0..t {
                a.swap(p * t + k, row * t + k);
            }
        }
        pivot(&mut a, r, t, row, j);
        basis.push(j);
        is_basic[j] = true;
        row += 1;
    }
    let rank = basis.len();
    let mut w: Vec<f64> = cert.terms.iter().map(|x| x.weight).collect();

    for j in 0..t {
        if is_basic[j] || w[j] <= 0.0 {
            continue;
        }
        // Ratio test over c_j = 1 and c_{B_i} = -T[i][j].
        let mut alpha = w[j];
        let mut leave: Option<usize> = None;
        for i in 0..rank {
            let c = -a[i * t + j];
            if c > 1e-12 {
                let ratio = w[basis[i]] / c;
                if ratio < alpha {
                    alpha = ratio;
                    leave = Some(i);
                }
            }
        }
        w[j] -= alpha;
        for i in 0..rank {
            let c = -a[i * t + j];
            if c.abs() > 1e-12 {
                w[basis[i]] = (w[basis[i]] - alpha * c).max(0.0);
            }
        }
        match leave {
            None => w[j] = 0.0,
            Some(i) => {
                w[basis[i]] = 0.0;
                is_basic[basis[i]] = false;
                pivot(&mut a, rank, t, i, j);
                basis[i] = j;
                is_basic[j] = true;
                w[j] = w[j].max(0.0);
            }
        }
    }

    let mut out = SeparableCertificate::empty(cert.space, cert.layout.clone());
    for (j, term) in cert.terms.iter().enumerate() {
        if w[j] > 0.0 {
            out.push(w[j], term.factors.clone());
        }
    }
    out.target = cert.target.clone();
    Ok(out)
}

/// Scales row `p` so `a[p][j] = 1` and eliminates column `j` from the other
/// `rows - 1` rows.
fn pivot(a: &mut [f64], rows: usize, t: usize, p: usize, j: usize) {
    let inv = 1.0 / a[p * t + j];
    for k in 0..t {
        a[p * t + k] *= inv;
    }
    a[p * t + j] = 1.0;
    let prow: Vec<f64> = a[p * t..(p + 1) * t].to_vec();
    for i in 0..rows {
        if i == p {
            continue;
        }
        let f = a[i * t + j];
        if f == 0.0 {
            continue;
        }
        let row = &mut a[i * t..(i + 1) * t];
        for (x, y) in row.iter_mut().zip(&prow) {
            *x -= f * y;
        }
        row[j] = 0.0;
    }
}

/// Certificate for `(n + 1) ||Q|| I - Q` given a certificate for `Q`.
///
/// After reduction to `t <= n + 1` terms, each `||Q|| I - w_j P_j` splits into
/// `(||Q|| - w_j ||P_j||) I + w_j (||P_j|| I - P_j)`; the remaining
/// `(n + 1 - t) ||Q|| I` pads the sum. All identity parts merge into one term.
pub fn identity_minus_separable(cert: &SeparableCertificate) -> Result<SeparableCertificate> {
    let reduced = caratheodory_reduce(cert)?;
    let n = cert.space_dim();
    let q = reduced.reassemble()?;
    let q_norm = if reduced.is_empty() { 0.0 } else { op_norm(&q)? };
    let mut out = SeparableCertificate::empty(cert.space, cert.layout.clone());
    let mut identity_weight = (n + 1 - reduced.len()) as f64 * q_norm;
    let mut inner = Vec::new();
    for term in &reduced.terms {
        let norms: Vec<f64> = term
            .factors
            .iter()
            .map(op_norm)
            .collect::<Result<_>>()?;
        let p_norm: f64 = norms.iter().product();
        identity_weight += (q_norm - term.weight * p_norm).max(0.0);
        for (w, f) in identity_minus_product_terms(&term.factors, &norms) {
            inner.push((term.weight * w, f));
        }
    }
    out.push(identity_weight, out.identity_factors());
    for (w, f) in inner {
        out.push(w, f);
    }
    out.target = ComplexMatrix::identity(cert.layout.dim()).scale((n + 1) as f64 * q_norm) - q;
    Ok(out)
}

/// The ball constant `k = 2^(m-1) sqrt(n) (n + 1)` for a layout and space.
pub fn ball_constant(layout: &SystemLayout, kind: SpaceKind) -> f64 {
    let n: f64 = layout
        .parties()
        .iter()
        .map(|p| space_dimension(kind, p.din, p.dout) as f64)
        .product();
    2f64.powi(layout.m() as i32 - 1) * n.sqrt() * (n + 1.0)
}

/// Certificate for `k ||X||_F I - X` for grouped `X` in `S_1 (x) .. (x) S_m`:
/// `(n+1)||X+|| I - X+` from [`identity_minus_separable`], plus `X-`, plus
/// `(k ||X||_F - (n+1)||X+||) I`.
pub fn identity_minus_any(
    x: &ComplexMatrix,
    layout: &SystemLayout,
    kind: SpaceKind,
) -> Result<SeparableCertificate> {
    let (plus, minus) = sep_generate(x, layout, kind)?;
    let base = identity_minus_separable(&plus)?;
    let n = plus.space_dim();
    let k = ball_constant(layout, kind);
    let x_fro = fro_norm(x);
    let plus_norm = if plus.is_empty() { 0.0 } else { op_norm(&plus.reassemble()?)? };
    let slack = k * x_fro - (n + 1) as f64 * plus_norm;
    if slack < -1e-9 * k * x_fro.max(1.0) {
        return Err(Error::Numerical(format!(
            "norm bound violated: (n+1)||X+|| exceeds k||X||_F by {:.3e}",
            -slack
        )));
    }
    let mut out = SeparableCertificate::empty(kind, layout.clone());
    for t in base.terms {
        out.push(t.weight, t.factors);
    }
    for t in minus.terms {
        out.push(t.weight, t.factors);
    }
    out.push(slack.max(0.0), out.identity_factors());
    out.target = ComplexMatrix::identity(layout.dim()).scale(k * x_fro) - x.hermitian_part();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_pure_state, rng_from_seed};
    use crate::tensor::C64;

    fn qubits(m: usize) -> SystemLayout {
        SystemLayout::uniform(m, 2).unwrap()
    }

    #[test]
    fn split_of_pauli_z() {
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        let (p, m) = split_psd(&z).unwrap();
        assert_eq!(p, ComplexMatrix::from_real_diag(&[1.0, 0.0]));
        assert_eq!(m, ComplexMatrix::from_real_diag(&[0.0, 1.0]));
    }

    #[test]
    fn single_product_element_gives_two_terms() {
        let l = qubits(2);
        let b = crate::qspace::q_basis(2, 2);
        let x = crate::tensor::kron(&b.elements[4], &b.elements[9]);
        let (p, m) = sep_generate(&x, &l, SpaceKind::Q).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(m.len(), 2);
        let diff = &p.target - &m.target;
        assert!(diff.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn identity_minus_rank_one_product() {
        let mut rng = rng_from_seed(51);
        let l = SystemLayout::uniform(2, 1).unwrap();
        let u = random_pure_state(1, &mut rng);
        let p = ComplexMatrix::outer(&u, &u);
        let c = identity_minus_product(&[p.clone(), p], &l, SpaceKind::Hermitian).unwrap();
        assert!(c.len() <= 3);
        assert!(verify_certificate(&c, VerifyTolerances::default()).pass);

        let l = SystemLayout::uniform(2, 2).unwrap();
        let f: Vec<ComplexMatrix> = (0..2)
            .map(|_| {
                let v = random_pure_state(4, &mut rng);
                ComplexMatrix::outer(&v, &v)
            })
            .collect();
        let c = identity_minus_product(&f, &l, SpaceKind::Hermitian).unwrap();
        assert_eq!(c.len(), 3);
        assert!(verify_certificate(&c, VerifyTolerances::default()).pass);
    }

    #[test]
    fn identity_factor_gives_empty_certificate() {
        let l = SystemLayout::single(2, 2).unwrap();
        let c = identity_minus_product(&[ComplexMatrix::identity(4)], &l, SpaceKind::Q).unwrap();
        assert!(c.is_empty());
        assert!(fro_norm(&c.target) < 1e-15);
    }

    #[test]
    fn caratheodory_merges_copies() {
        let l = SystemLayout::single(2, 2).unwrap();
        let mut c = SeparableCertificate::empty(SpaceKind::Q, l);
        let f = ComplexMatrix::identity(4);
        let n = c.space_dim();
        for _ in 0..n + 5 {
            c.terms.push(ProductTerm {
                weight: 0.5,
                factors: vec![f.clone()],
            });
        }
        c.target = c.reassemble().unwrap();
        let r = caratheodory_reduce(&c).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.terms[0].weight - 0.5 * (n + 5) as f64).abs() < 1e-12);
    }

    #[test]
    fn verification_catches_violations() {
        let mut rng = rng_from_seed(52);
        let l = qubits(2);
        let x = project_onto_tensor_q(&random_hermitian(16, &mut rng), &l).unwrap();
        let (p, _) = sep_generate(&x, &l, SpaceKind::Q).unwrap();
        assert!(verify_certificate(&p, VerifyTolerances::default()).pass);
        let mut bad = p.clone();
        bad.terms[0].weight = -bad.terms[0].weight;
        let r = verify_certificate(&bad, VerifyTolerances::default());
        assert!(!r.pass && r.negative_weights == vec![0]);
    }

    #[test]
    fn rejects_operator_outside_span() {
        let l = qubits(2);
        let mut x = ComplexMatrix::identity(16);
        x[(0, 0)] += C64::new(0.5, 0.0);
        assert!(matches!(
            sep_generate(&x, &l, SpaceKind::Q),
            Err(Error::Contract { .. })
        ));
    }
}
