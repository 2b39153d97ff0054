//! The subspaces `Q_i` of Choi matrices of trace-preserving maps up to scale.
//!
//! `Q_i` holds the Hermitian `X` on `A_i (x) X_i` with `Tr_{A_i} X = lambda I`
//! for a real `lambda`. Its orthogonal complement in the Hermitian space is
//! `{I_A (x) Y : Y traceless}`, which gives the closed-form projection
//! `P(X) = X - (1/d_A) I_A (x) (Tr_A X - (tr X / d_X) I_X)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::choi::SystemLayout;
use crate::error::{Error, Result};
use crate::tensor::{
    embed_identity, fro_norm, functional_partial, hs_inner, kron_all, partial_trace, ComplexMatrix,
    FactorShape, C64, HERM_TOL,
};

/// Default membership tolerance, relative to `max(1, ||X||_F)`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
const GS_DROP: f64 = 1e-8;

/// Which subspace a party's certificate factors live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "hermitian")]
    Hermitian,
}

/// Orthonormal Hermitian generators of `Herm(d)`: diagonal units first, then
/// `(E_ij + E_ji)/sqrt2` and `(-i E_ij + i E_ji)/sqrt2` for `i < j`.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(ComplexMatrix::unit(d, i, i));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(i, j)] = C64::new(h, 0.0);
            m[(j, i)] = C64::new(h, 0.0);
            out.push(m);
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut m = ComplexMatrix::zeros(d, d);
            m[(i, j)] = C64::new(0.0, -h);
            m[(j, i)] = C64::new(0.0, h);
            out.push(m);
        }
    }
    out
}

/// Orthogonal projection onto `Q` for an operator on `A (x) X` (`dout x din`).
pub fn project_onto_q(x: &ComplexMatrix, din: usize, dout: usize) -> Result<ComplexMatrix> {
    x.check_dim(din * dout, "operator on A (x) X")?;
    x.ensure_hermitian(HERM_TOL, "operator to project")?;
    let shape = FactorShape::new(vec![dout, din]);
    let (ta, _) = partial_trace(x, &shape, &[0])?;
    let t = x.trace().re / din as f64;
    let traceless = ta - ComplexMatrix::identity(din).scale(t);
    let corr = embed_identity(&traceless, &shape, &[1])?;
    Ok(x - &corr.scale(1.0 / dout as f64))
}

pub fn project_onto_space(
    kind: SpaceKind,
    x: &ComplexMatrix,
    din: usize,
    dout: usize,
) -> Result<ComplexMatrix> {
    match kind {
        SpaceKind::Q => project_onto_q(x, din, dout),
        SpaceKind::Hermitian => {
            x.check_dim(din * dout, "operator on A (x) X")?;
            Ok(x.hermitian_part())
        }
    }
}

/// Orthogonal projection onto `Q_1 (x) .. (x) Q_m` of a grouped-order operator.
///
/// Applies the commuting party projections
/// `Y - (1/d_{A_i}) I_{A_i} (x) Tr_{A_i} Y + (1/(d_{A_i} d_{X_i})) I_{A_i X_i} (x) Tr_{A_i X_i} Y`.
pub fn project_onto_tensor_q(x: &ComplexMatrix, layout: &SystemLayout) -> Result<ComplexMatrix> {
    x.check_dim(layout.dim(), "grouped operator")?;
    x.ensure_hermitian(HERM_TOL, "operator to project")?;
    let shape = layout.grouped_shape();
    let all: Vec<usize> = (0..shape.len()).collect();
    let mut y = x.hermitian_part();
    for (i, p) in layout.parties().iter().enumerate() {
        let a = 2 * i;
        let keep_a: Vec<usize> = all.iter().copied().filter(|&f| f != a).collect();
        let keep_ax: Vec<usize> = all.iter().copied().filter(|&f| f != a && f != a + 1).collect();
        let (t1, _) = partial_trace(&y, &shape, &[a])?;
        let (t2, _) = partial_trace(&y, &shape, &[a, a + 1])?;
        let e1 = embed_identity(&t1, &shape, &keep_a)?;
        let e2 = if keep_ax.is_empty() {
            ComplexMatrix::identity(shape.total()).scale_c(t2[(0, 0)])
        } else {
            embed_identity(&t2, &shape, &keep_ax)?
        };
        y = y - e1.scale(1.0 / p.dout as f64) + e2.scale(1.0 / p.block() as f64);
    }
    Ok(y)
}

/// Orthonormal basis of `Q` (or of the full Hermitian space) on `A (x) X`.
#[derive(Clone, Debug, Serialize)]
pub struct QSubspaceBasis {
    pub din: usize,
    pub dout: usize,
    pub kind: SpaceKind,
    pub elements: Vec<ComplexMatrix>,
}

impl QSubspaceBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Coefficients `<E_k, X>` (real for Hermitian `X`).
    pub fn coefficients(&self, x: &ComplexMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| hs_inner(e, x).re).collect()
    }
}

/// Expected dimension of `Q` on `A (x) X`: `(dout din)^2 - din^2 + 1`.
pub fn q_dimension(din: usize, dout: usize) -> usize {
    (din * dout).pow(2) - din * din + 1
}

pub fn space_dimension(kind: SpaceKind, din: usize, dout: usize) -> usize {
    match kind {
        SpaceKind::Q => q_dimension(din, dout),
        SpaceKind::Hermitian => (din * dout).pow(2),
    }
}

/// Gram–Schmidt with a re-orthogonalization pass; vectors whose residual
/// norm falls below the drop threshold are discarded.
pub fn gram_schmidt(candidates: impl IntoIterator<Item = ComplexMatrix>) -> Vec<ComplexMatrix> {
    let mut out: Vec<ComplexMatrix> = Vec::new();
    for mut v in candidates {
        let start = fro_norm(&v);
        if start <= GS_DROP {
            continue;
        }
        for _ in 0..2 {
            for u in &out {
                let c = hs_inner(u, &v);
                v -= &u.scale_c(c);
            }
        }
        let n = fro_norm(&v);
        if n > GS_DROP * start.max(1.0) {
            out.push(v.scale(1.0 / n));
        }
    }
    out
}

fn build_basis(kind: SpaceKind, din: usize, dout: usize) -> QSubspaceBasis {
    let gens = hermitian_basis(din * dout);
    let elements = match kind {
        SpaceKind::Hermitian => gens,
        SpaceKind::Q => gram_schmidt(
            gens.into_iter()
                .map(|g| project_onto_q(&g, din, dout).expect("generators are Hermitian")),
        ),
    };
    QSubspaceBasis {
        din,
        dout,
        kind,
        elements,
    }
}

type BasisCache = Mutex<HashMap<(SpaceKind, usize, usize), Arc<QSubspaceBasis>>>;

/// Cached orthonormal basis; deterministic for given arguments.
pub fn space_basis(kind: SpaceKind, din: usize, dout: usize) -> Arc<QSubspaceBasis> {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&(kind, din, dout)) {
        return b.clone();
    }
    let b = Arc::new(build_basis(kind, din, dout));
    cache
        .lock()
        .expect("basis cache poisoned")
        .entry((kind, din, dout))
        .or_insert(b)
        .clone()
}

pub fn q_basis(din: usize, dout: usize) -> Arc<QSubspaceBasis> {
    space_basis(SpaceKind::Q, din, dout)
}

/// Per-subset residual of the partial-trace characterization of `span(Q_1 (x) .. (x) Q_m)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubsetResidual {
    /// One-based party indices.
    pub parties: Vec<usize>,
    pub residual: f64,
}

/// For every subset `K` of parties: `T = Tr_{A_K} X` and the residual
/// `||T - Tr_{X_K}(T)/d_{X_K} (x) I_{X_K}||_F`. `X` is in global ordering;
/// the empty subset is reported with residual zero.
pub fn constraint_residuals(x: &ComplexMatrix, layout: &SystemLayout) -> Result<Vec<SubsetResidual>> {
    x.check_dim(layout.dim(), "global operator")?;
    let m = layout.m();
    let shape = layout.global_shape();
    let mut out = Vec::with_capacity(1 << m);
    for mask in 0..(1usize << m) {
        let k: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let parties = k.iter().map(|i| i + 1).collect();
        if k.is_empty() {
            out.push(SubsetResidual { parties, residual: 0.0 });
            continue;
        }
        let (t, tshape) = partial_trace(x, &shape, &layout.output_factors(&k))?;
        // After tracing A_K the remaining factors are A_{K^c} then X_1..X_m.
        let n_rest_a = m - k.len();
        let xk_pos: Vec<usize> = k.iter().map(|i| n_rest_a + i).collect();
        let (tr_xk, _) = partial_trace(&t, &tshape, &xk_pos)?;
        let d_xk: usize = k.iter().map(|&i| layout.party(i).din).product();
        let rest: Vec<usize> = (0..tshape.len()).filter(|f| !xk_pos.contains(f)).collect();
        let mut target = ComplexMatrix::zeros(t.rows(), t.rows());
        if rest.is_empty() {
            target = ComplexMatrix::identity(t.rows()).scale_c(tr_xk[(0, 0)] / d_xk as f64);
        } else {
            // Embed Tr_{X_K}(T) on the remaining factors, identity on X_K.
            target += &embed_identity(&tr_xk, &tshape, &rest)?.scale(1.0 / d_xk as f64);
        }
        out.push(SubsetResidual {
            parties,
            residual: fro_norm(&(t - target)),
        });
    }
    Ok(out)
}

/// Coefficients `<B_{1,k_1} (x) .. (x) B_{m,k_m}, X>` of a grouped-order operator
/// in the product of per-party bases, multi-indices in lexicographic order
/// (first party most significant).
pub fn product_coefficients(
    x_grouped: &ComplexMatrix,
    layout: &SystemLayout,
    kind: SpaceKind,
) -> Result<Vec<C64>> {
    x_grouped.check_dim(layout.dim(), "grouped operator")?;
    let bases: Vec<Arc<QSubspaceBasis>> = layout
        .parties()
        .iter()
        .map(|p| space_basis(kind, p.din, p.dout))
        .collect();
    let blocks: Vec<usize> = layout.parties().iter().map(|p| p.block()).collect();
    let mut out = Vec::new();
    contract_party(x_grouped, &blocks, &bases, &mut out)?;
    Ok(out)
}

fn contract_party(
    x: &ComplexMatrix,
    blocks: &[usize],
    bases: &[Arc<QSubspaceBasis>],
    out: &mut Vec<C64>,
) -> Result<()> {
    let Some((basis, rest)) = bases.split_first() else {
        out.push(x[(0, 0)]);
        return Ok(());
    };
    if rest.is_empty() {
        for e in &basis.elements {
            out.push(hs_inner(e, x));
        }
        return Ok(());
    }
    let shape = FactorShape::new(blocks.to_vec());
    for e in &basis.elements {
        // <E (x) K, X> = <K, G> with G the partial contraction against E.
        let g = functional_partial(x, &shape, &[0], e)?;
        contract_party(&g, &blocks[1..], rest, out)?;
    }
    Ok(())
}

/// Calls `f` with every multi-index of the given per-party sizes in
/// lexicographic order.
pub fn for_each_multi_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    if sizes.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; sizes.len()];
    loop {
        f(&idx);
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Residual of expanding a grouped-order operator in the product basis of
/// `Q_1 (x) .. (x) Q_m`: the expansion is rebuilt explicitly and subtracted.
pub fn product_basis_residual(x_grouped: &ComplexMatrix, layout: &SystemLayout) -> Result<f64> {
    let coeffs = product_coefficients(x_grouped, layout, SpaceKind::Q)?;
    let bases: Vec<Arc<QSubspaceBasis>> = layout
        .parties()
        .iter()
        .map(|p| q_basis(p.din, p.dout))
        .collect();
    let sizes: Vec<usize> = bases.iter().map(|b| b.dim()).collect();
    let mut recon = ComplexMatrix::zeros(layout.dim(), layout.dim());
    let mut k = 0;
    let mut err = None;
    for_each_multi_index(&sizes, |idx| {
        let c = coeffs[k];
        k += 1;
        if c.norm() == 0.0 || err.is_some() {
            return;
        }
        let factors: Vec<&ComplexMatrix> =
            idx.iter().zip(&bases).map(|(&i, b)| &b.elements[i]).collect();
        match kron_all(&factors) {
            Ok(e) => recon += &e.scale_c(c),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(fro_norm(&(x_grouped - &recon)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorQReport {
    pub member: bool,
    /// `||X - P(X)||_F` from the product-basis expansion.
    pub projection_residual: f64,
    /// Largest partial-trace constraint residual, each scaled by `1/sqrt(d_{A_K})`.
    pub constraint_residual: f64,
    pub per_subset: Vec<SubsetResidual>,
    pub tol: f64,
}

/// Membership of a global-order Hermitian operator in `span(Q_1 (x) .. (x) Q_m)`,
/// decided by two independent tests that must agree.
pub fn in_tensor_q(x: &ComplexMatrix, layout: &SystemLayout, tol: f64) -> Result<TensorQReport> {
    x.check_dim(layout.dim(), "global operator")?;
    x.ensure_hermitian(HERM_TOL, "operator")?;
    let scale = fro_norm(x).max(1.0);
    let grouped = layout.to_grouped(x)?;
    let projection_residual = product_basis_residual(&grouped, layout)?;
    let per_subset = constraint_residuals(x, layout)?;
    let constraint_residual = per_subset
        .iter()
        .map(|s| {
            let d: usize = s.parties.iter().map(|&i| layout.party(i - 1).dout).product();
            s.residual / (d as f64).sqrt()
        })
        .fold(0.0, f64::max);
    let bound = tol * scale;
    let by_proj = projection_residual <= bound;
    let by_cons = constraint_residual <= bound;
    if by_proj != by_cons {
        let (ok, other) = if by_proj {
            (projection_residual, constraint_residual)
        } else {
            (constraint_residual, projection_residual)
        };
        if other > 10.0 * bound {
            return Err(Error::Numerical(format!(
                "membership tests disagree: {ok:.3e} vs {other:.3e}"
            )));
        }
    }
    Ok(TensorQReport {
        member: by_proj && by_cons,
        projection_residual,
        constraint_residual,
        per_subset,
        tol,
    })
}

/// Constants of the certified LOSR ball around the completely noisy channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallParameters {
    pub m: usize,
    /// `dim(Q_1 (x) .. (x) Q_m)`.
    pub n: u64,
    /// `k = 2^(m-1) sqrt(n) (n + 1)`.
    pub k: f64,
    pub d_a: usize,
    /// `1/k`: Frobenius radius around `I`.
    pub radius_unnormalized: f64,
    /// `1/(k d_A)`: Frobenius radius around `I/d_A`.
    pub radius_normalized: f64,
}

pub fn ball_parameters(layout: &SystemLayout) -> BallParameters {
    let m = layout.m();
    let n: u64 = layout
        .parties()
        .iter()
        .map(|p| q_dimension(p.din, p.dout) as u64)
        .product();
    let k = 2f64.powi(m as i32 - 1) * (n as f64).sqrt() * (n + 1) as f64;
    let d_a = layout.d_a();
    BallParameters {
        m,
        n,
        k,
        d_a,
        radius_unnormalized: 1.0 / k,
        radius_normalized: 1.0 / (k * d_a as f64),
    }
}
