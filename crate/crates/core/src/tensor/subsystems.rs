//! Tensor-factor operations: Kronecker products, partial traces, factor
//! permutations and identity embeddings.
//!
//! A [`FactorShape`] lists the factor dimensions of a space, first factor most
//! significant (the usual `kron` convention). Every routine here works by
//! precomputing offset tables, so each is a plain gather over the entries.

use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorShape {
    dims: Vec<usize>,
}

impl FactorShape {
    pub fn new(dims: Vec<usize>) -> Self {
        Self { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn sub_shape(&self, factors: &[usize]) -> FactorShape {
        FactorShape::new(factors.iter().map(|&f| self.dims[f]).collect())
    }

    /// Global offsets of every multi-index over `factors` (listed order, first
    /// most significant), with all other factors at index zero.
    pub fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * self.dims[f]);
            for &base in &out {
                for d in 0..self.dims[f] {
                    next.push(base + d * strides[f]);
                }
            }
            out = next;
        }
        out
    }

    fn validate(&self, factors: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.dims.len()];
        for &f in factors {
            if f >= self.dims.len() || seen[f] {
                return Err(Error::usage(format!(
                    "invalid factor selection {factors:?} for {} factors",
                    self.dims.len()
                )));
            }
            seen[f] = true;
        }
        Ok(())
    }
}

/// A set of factor indices, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubsystemSelector {
    factors: Vec<usize>,
}

impl SubsystemSelector {
    pub fn new(mut factors: Vec<usize>) -> Self {
        factors.sort_unstable();
        factors.dedup();
        Self { factors }
    }

    /// Factors whose bit is set in `mask`.
    pub fn from_mask(mask: usize, n: usize) -> Self {
        Self::new((0..n).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn complement(&self, n: usize) -> Self {
        Self::new((0..n).filter(|i| !self.factors.contains(i)).collect())
    }

    pub fn contains(&self, f: usize) -> bool {
        self.factors.binary_search(&f).is_ok()
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    let data = out.data_mut();
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * oc + j * bc;
                for l in 0..bc {
                    data[row + l] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a non-empty list, first factor most significant.
pub fn kron_all(ms: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = ms
        .split_first()
        .ok_or_else(|| Error::usage("kron of an empty factor list"))?;
    Ok(rest.iter().fold((*first).clone(), |acc, m| kron(&acc, m)))
}

/// Traces out `traced` factors of the square operator `m`; the remaining
/// factors keep their relative order.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &FactorShape,
    traced: &[usize],
) -> Result<(ComplexMatrix, FactorShape)> {
    m.check_dim(shape.total(), "operator")?;
    shape.validate(traced)?;
    let kept: Vec<usize> = (0..shape.len()).filter(|f| !traced.contains(f)).collect();
    let ko = shape.offsets(&kept);
    let to = shape.offsets(traced);
    let n = ko.len();
    let out = ComplexMatrix::from_fn(n, n, |i, j| {
        to.iter().map(|&t| m[(ko[i] + t, ko[j] + t)]).sum()
    });
    Ok((out, shape.sub_shape(&kept)))
}

/// Reorders factors: new position `i` holds old factor `perm[i]`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    shape: &FactorShape,
    perm: &[usize],
) -> Result<(ComplexMatrix, FactorShape)> {
    m.check_dim(shape.total(), "operator")?;
    if perm.len() != shape.len() {
        return Err(Error::usage("permutation length mismatch"));
    }
    shape.validate(perm)?;
    let map = shape.offsets(perm);
    let n = map.len();
    let out = ComplexMatrix::from_fn(n, n, |i, j| m[(map[i], map[j])]);
    Ok((out, shape.sub_shape(perm)))
}

/// Vector version of [`permute_subsystems`].
pub fn permute_vector(v: &[C64], shape: &FactorShape, perm: &[usize]) -> Result<Vec<C64>> {
    if v.len() != shape.total() || perm.len() != shape.len() {
        return Err(Error::usage("vector or permutation does not match shape"));
    }
    shape.validate(perm)?;
    Ok(shape.offsets(perm).into_iter().map(|k| v[k]).collect())
}

/// Places `op`, which acts on `targets` (in listed order), into the full space
/// of `shape` with the identity on the other factors.
pub fn embed_identity(
    op: &ComplexMatrix,
    shape: &FactorShape,
    targets: &[usize],
) -> Result<ComplexMatrix> {
    shape.validate(targets)?;
    let to = shape.offsets(targets);
    op.check_dim(to.len(), "embedded operator")?;
    let rest: Vec<usize> = (0..shape.len()).filter(|f| !targets.contains(f)).collect();
    let ro = shape.offsets(&rest);
    let n = shape.total();
    let mut out = ComplexMatrix::zeros(n, n);
    for &r in &ro {
        for (i, &ti) in to.iter().enumerate() {
            for (j, &tj) in to.iter().enumerate() {
                out[(ti + r, tj + r)] = op[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Partial Hilbert–Schmidt contraction of `w` with `j` on the `contracted`
/// factors: `G[r, c] = sum_{b, b'} conj(J[b, b']) W[(r, b), (c, b')]`.
///
/// For Hermitian `W`, `J`, `K` this satisfies `<W, K (x) J> = <G, K>` when the
/// contracted factors are the trailing ones; for other positions the kept
/// factors keep their relative order.
pub fn functional_partial(
    w: &ComplexMatrix,
    shape: &FactorShape,
    contracted: &[usize],
    j: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    w.check_dim(shape.total(), "functional")?;
    shape.validate(contracted)?;
    let co = shape.offsets(contracted);
    j.check_dim(co.len(), "contracted operator")?;
    let kept: Vec<usize> = (0..shape.len())
        .filter(|f| !contracted.contains(f))
        .collect();
    let ko = shape.offsets(&kept);
    let n = ko.len();
    let nz: Vec<(usize, usize, C64)> = (0..co.len())
        .flat_map(|b| (0..co.len()).map(move |bp| (b, bp)))
        .filter_map(|(b, bp)| {
            let v = j[(b, bp)];
            (v != ZERO).then(|| (co[b], co[bp], v.conj()))
        })
        .collect();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        nz.iter()
            .map(|&(ob, obp, v)| v * w[(ko[r] + ob, ko[c] + obp)])
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, rng_from_seed};
    use crate::tensor::hs_inner;

    #[test]
    fn partial_trace_of_product() {
        let mut rng = rng_from_seed(3);
        let a = random_density(2, &mut rng);
        let b = random_density(3, &mut rng);
        let ab = kron(&a, &b);
        let shape = FactorShape::new(vec![2, 3]);
        let (ta, _) = partial_trace(&ab, &shape, &[1]).unwrap();
        let (tb, sb) = partial_trace(&ab, &shape, &[0]).unwrap();
        assert!(ta.max_abs_diff(&a) < 1e-12);
        assert!(tb.max_abs_diff(&b) < 1e-12);
        assert_eq!(sb.dims(), &[3]);
    }

    #[test]
    fn permutation_swaps_kron_order() {
        let mut rng = rng_from_seed(4);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let c = random_hermitian(2, &mut rng);
        let abc = kron_all(&[&a, &b, &c]).unwrap();
        let shape = FactorShape::new(vec![2, 3, 2]);
        let (p, ps) = permute_subsystems(&abc, &shape, &[2, 0, 1]).unwrap();
        assert_eq!(ps.dims(), &[2, 2, 3]);
        assert!(p.max_abs_diff(&kron_all(&[&c, &a, &b]).unwrap()) < 1e-12);
    }

    #[test]
    fn embedding_matches_kron() {
        let mut rng = rng_from_seed(5);
        let b = random_hermitian(3, &mut rng);
        let shape = FactorShape::new(vec![2, 3, 2]);
        let e = embed_identity(&b, &shape, &[1]).unwrap();
        let expect = kron_all(&[
            &ComplexMatrix::identity(2),
            &b,
            &ComplexMatrix::identity(2),
        ])
        .unwrap();
        assert!(e.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn functional_partial_pairs_correctly() {
        let mut rng = rng_from_seed(6);
        let w = random_hermitian(6, &mut rng);
        let k = random_hermitian(2, &mut rng);
        let j = random_hermitian(3, &mut rng);
        let shape = FactorShape::new(vec![2, 3]);
        let g = functional_partial(&w, &shape, &[1], &j).unwrap();
        let lhs = hs_inner(&w, &kron(&k, &j));
        let rhs = hs_inner(&g, &k);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_selection() {
        let m = ComplexMatrix::identity(4);
        let shape = FactorShape::new(vec![2, 2]);
        assert!(partial_trace(&m, &shape, &[2]).is_err());
        assert!(permute_subsystems(&m, &shape, &[0, 0]).is_err());
    }
}
