//! Tensor index bookkeeping, Kronecker products, and factorized linear maps.
//!
//! Vectors in a tensor space `R^{d1} x ... x R^{dl}` are flattened row-major:
//! the multi-index `(k1, ..., kl)` lands at `sum_i k_i * prod_{j>i} d_j`.
//! Every operation in this crate uses that one convention.

pub mod spd;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Shape `(d1, ..., dl)` of a tensor space, flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorShape {
    dims: Vec<usize>,
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::ShapeMismatch("empty tensor shape".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::ShapeMismatch("zero-dimensional slot".into()));
        }
        Ok(TensorShape { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of tensor slots.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Dimension of the flattened space.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Stride of slot `i`: how far consecutive values of `k_i` are apart.
    pub fn stride(&self, i: usize) -> usize {
        self.dims[i + 1..].iter().product()
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter()
            .zip(self.dims.iter())
            .fold(0, |acc, (&k, &d)| acc * d + k)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            idx[i] = flat % self.dims[i];
            flat /= self.dims[i];
        }
        idx
    }

    /// Flat index of `e1 x ... x e1` with `x` in slot `i`, component `k`.
    /// All other slots sit at their first basis vector.
    pub fn slot_index(&self, i: usize, k: usize) -> usize {
        k * self.stride(i)
    }

    /// Embeds a factor vector into the tensor space at slot `i`, with `e1`
    /// in every other slot.
    pub fn embed_slot(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.total_dim());
        for k in 0..self.dims[i] {
            out[self.slot_index(i, k)] = x[k];
        }
        out
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Kronecker product of a list of vectors, row-major.
pub fn kron_vec(xs: &[DVector<f64>]) -> DVector<f64> {
    assert!(!xs.is_empty());
    let mut out = xs[0].clone();
    for x in &xs[1..] {
        let mut next = DVector::zeros(out.len() * x.len());
        for i in 0..out.len() {
            for j in 0..x.len() {
                next[i * x.len() + j] = out[i] * x[j];
            }
        }
        out = next;
    }
    out
}

/// Kronecker product of a list of matrices, row-major.
pub fn kron_mat(ms: &[DMatrix<f64>]) -> DMatrix<f64> {
    assert!(!ms.is_empty());
    let mut out = ms[0].clone();
    for m in &ms[1..] {
        out = out.kronecker(m);
    }
    out
}

/// A tensor-structured linear map `(T1 x ... x Tl) U_sigma` where `U_sigma`
/// permutes slots: `U_sigma(x^1 x ... x x^l) = x^{sigma(1)} x ... x x^{sigma(l)}`.
///
/// `sigma` may only move slots between positions of equal dimension, so each
/// `T_i` is square of size `d_i`.
#[derive(Debug, Clone)]
pub struct FactorMap {
    shape: TensorShape,
    factors: Vec<DMatrix<f64>>,
    perm: Vec<usize>,
}

impl FactorMap {
    pub fn new(shape: TensorShape, factors: Vec<DMatrix<f64>>, perm: Vec<usize>) -> Result<Self> {
        let l = shape.order();
        if factors.len() != l {
            return Err(Error::ShapeMismatch(format!(
                "expected {} factors, got {}",
                l,
                factors.len()
            )));
        }
        if perm.len() != l {
            return Err(Error::ShapeMismatch("permutation length mismatch".into()));
        }
        let mut seen = vec![false; l];
        for &p in &perm {
            if p >= l || seen[p] {
                return Err(Error::ShapeMismatch("not a permutation".into()));
            }
            seen[p] = true;
        }
        for i in 0..l {
            if shape.dims()[perm[i]] != shape.dims()[i] {
                return Err(Error::ShapeMismatch(format!(
                    "slot permutation moves dimension {} into slot of dimension {}",
                    shape.dims()[perm[i]],
                    shape.dims()[i]
                )));
            }
            let d = shape.dims()[i];
            if factors[i].nrows() != d || factors[i].ncols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "factor {} must be {}x{}",
                    i, d, d
                )));
            }
        }
        Ok(FactorMap {
            shape,
            factors,
            perm,
        })
    }

    pub fn identity(shape: TensorShape) -> Self {
        let factors = shape
            .dims()
            .iter()
            .map(|&d| DMatrix::identity(d, d))
            .collect();
        let perm = (0..shape.order()).collect();
        FactorMap {
            shape,
            factors,
            perm,
        }
    }

    pub fn from_factors(shape: TensorShape, factors: Vec<DMatrix<f64>>) -> Result<Self> {
        let perm = (0..shape.order()).collect();
        FactorMap::new(shape, factors, perm)
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn is_identity_perm(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Dense matrix of the map on the flattened space.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.shape.total_dim();
        let kron = kron_mat(&self.factors);
        if self.is_identity_perm() {
            return kron;
        }
        let mut pmat = DMatrix::zeros(n, n);
        // U_sigma sends source multi-index k to output m with m_i = k_{sigma(i)}.
        for col in 0..n {
            let k = self.shape.unflatten(col);
            let m: Vec<usize> = (0..k.len()).map(|i| k[self.perm[i]]).collect();
            pmat[(self.shape.flatten(&m), col)] = 1.0;
        }
        kron * pmat
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.shape.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.total_dim(),
                got: x.len(),
            });
        }
        Ok(self.to_matrix() * x)
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &FactorMap) -> Result<FactorMap> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(
                "composing maps over different tensor shapes".into(),
            ));
        }
        let l = self.shape.order();
        let factors: Vec<DMatrix<f64>> = (0..l)
            .map(|i| &self.factors[i] * &other.factors[self.perm[i]])
            .collect();
        let perm: Vec<usize> = (0..l).map(|i| other.perm[self.perm[i]]).collect();
        FactorMap::new(self.shape.clone(), factors, perm)
    }

    pub fn inverse(&self) -> Result<FactorMap> {
        let l = self.shape.order();
        let mut inv_perm = vec![0; l];
        for i in 0..l {
            inv_perm[self.perm[i]] = i;
        }
        let mut factors = Vec::with_capacity(l);
        for i in 0..l {
            let f = &self.factors[inv_perm[i]];
            let inv = f.clone().try_inverse().ok_or_else(|| {
                Error::SingularMap(format!("factor {} is singular", inv_perm[i]))
            })?;
            factors.push(inv);
        }
        FactorMap::new(self.shape.clone(), factors, inv_perm)
    }

    /// `(T^{-1})^T`, which keeps the slot permutation and replaces each
    /// factor by its inverse transpose.
    pub fn inverse_transpose(&self) -> Result<FactorMap> {
        let mut factors = Vec::with_capacity(self.factors.len());
        for (i, f) in self.factors.iter().enumerate() {
            let inv = f
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::SingularMap(format!("factor {} is singular", i)))?;
            factors.push(inv.transpose());
        }
        FactorMap::new(self.shape.clone(), factors, self.perm.clone())
    }

    /// True when every factor is orthogonal within `tol`.
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        self.factors.iter().all(|t| {
            let d = t.nrows();
            (t.transpose() * t - DMatrix::identity(d, d)).norm() <= tol
        })
    }
}

/// Admissible slot permutations for a shape: bijections moving slots only
/// between positions of equal dimension. At most `l! <= 6` for `l <= 3`.
pub fn admissible_perms(shape: &TensorShape) -> Vec<Vec<usize>> {
    let l = shape.order();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..l).collect();
    loop {
        if (0..l).all(|i| shape.dims()[perm[i]] == shape.dims()[i]) {
            out.push(perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    out
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix,
/// with the sign convention that makes the distribution Haar.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        // Box-Muller
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Random invertible matrix with singular values in `[1/kappa_max.sqrt(), kappa_max.sqrt()]`-ish:
/// built as `Q1 D Q2` with log-uniform diagonal, so the condition number stays moderate.
pub fn random_well_conditioned<R: Rng>(d: usize, kappa_max: f64, rng: &mut R) -> DMatrix<f64> {
    let q1 = random_orthogonal(d, rng);
    let q2 = random_orthogonal(d, rng);
    let half = kappa_max.sqrt();
    let diag = DVector::from_fn(d, |_, _| {
        let t: f64 = rng.gen_range(-1.0..1.0);
        half.powf(t)
    });
    q1 * DMatrix::from_diagonal(&diag) * q2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        v
    }

    #[test]
    fn row_major_flatten() {
        let s = TensorShape::new(vec![2, 3]).unwrap();
        assert_eq!(s.flatten(&[0, 0]), 0);
        assert_eq!(s.flatten(&[0, 2]), 2);
        assert_eq!(s.flatten(&[1, 0]), 3);
        assert_eq!(s.unflatten(4), vec![1, 1]);
        assert_eq!(s.total_dim(), 6);
        assert_eq!(s.stride(0), 3);
        assert_eq!(s.stride(1), 1);
    }

    #[test]
    fn kron_of_basis_vectors_matches_flatten() {
        // e1 x e2 in shape (2,2) lands at flat index 1
        let x = kron_vec(&[e(2, 0), e(2, 1)]);
        assert_eq!(x.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn kron_is_multilinear() {
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let y = DVector::from_vec(vec![0.5, 3.0, 1.0]);
        let z = DVector::from_vec(vec![-1.0, 0.25, 2.0]);
        let lhs = kron_vec(&[x.clone(), &y + &z]);
        let rhs = kron_vec(&[x.clone(), y.clone()]) + kron_vec(&[x, z]);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn inner_product_of_decomposables_factorizes() {
        let x1 = DVector::from_vec(vec![1.0, 2.0]);
        let x2 = DVector::from_vec(vec![-1.0, 0.5, 2.0]);
        let y1 = DVector::from_vec(vec![0.3, -0.7]);
        let y2 = DVector::from_vec(vec![2.0, 1.0, -1.0]);
        let lhs = kron_vec(&[x1.clone(), x2.clone()]).dot(&kron_vec(&[y1.clone(), y2.clone()]));
        let rhs = x1.dot(&y1) * x2.dot(&y2);
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn factor_map_applies_factors_after_permutation() {
        let shape = TensorShape::new(vec![2, 2]).unwrap();
        let t1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let t2 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let map = FactorMap::new(shape, vec![t1.clone(), t2.clone()], vec![1, 0]).unwrap();
        let x1 = DVector::from_vec(vec![1.0, 3.0]);
        let x2 = DVector::from_vec(vec![-2.0, 0.5]);
        let got = map.apply(&kron_vec(&[x1.clone(), x2.clone()])).unwrap();
        let want = kron_vec(&[&t1 * &x2, &t2 * &x1]);
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn permutation_needs_matching_dims() {
        let shape = TensorShape::new(vec![2, 3]).unwrap();
        let f = vec![DMatrix::identity(2, 2), DMatrix::identity(3, 3)];
        assert!(FactorMap::new(shape, f, vec![1, 0]).is_err());
    }

    #[test]
    fn compose_matches_sequential_apply() {
        let shape = TensorShape::new(vec![2, 2]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        use rand::SeedableRng;
        for _ in 0..20 {
            let a = FactorMap::new(
                shape.clone(),
                vec![
                    random_well_conditioned(2, 10.0, &mut rng),
                    random_well_conditioned(2, 10.0, &mut rng),
                ],
                vec![1, 0],
            )
            .unwrap();
            let b = FactorMap::new(
                shape.clone(),
                vec![
                    random_well_conditioned(2, 10.0, &mut rng),
                    random_well_conditioned(2, 10.0, &mut rng),
                ],
                vec![1, 0],
            )
            .unwrap();
            let x = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
            let got = a.compose(&b).unwrap().apply(&x).unwrap();
            let want = a.apply(&b.apply(&x).unwrap()).unwrap();
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_round_trips() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let shape = TensorShape::new(vec![2, 2, 2]).unwrap();
        let m = FactorMap::new(
            shape.clone(),
            vec![
                random_well_conditioned(2, 5.0, &mut rng),
                random_well_conditioned(2, 5.0, &mut rng),
                random_well_conditioned(2, 5.0, &mut rng),
            ],
            vec![2, 0, 1],
        )
        .unwrap();
        let x = DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0));
        let y = m.inverse().unwrap().apply(&m.apply(&x).unwrap()).unwrap();
        assert!((x - y).norm() < 1e-10);
        let id = m.compose(&m.inverse().unwrap()).unwrap().to_matrix();
        assert!((id - DMatrix::identity(8, 8)).norm() < 1e-10);
    }

    #[test]
    fn random_orthogonal_preserves_norm() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for d in [2usize, 3, 4] {
            let q = random_orthogonal(d, &mut rng);
            let x = DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
            assert!(((&q * &x).norm() - x.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn admissible_perms_respect_dims() {
        let s = TensorShape::new(vec![2, 3]).unwrap();
        assert_eq!(admissible_perms(&s), vec![vec![0, 1]]);
        let s = TensorShape::new(vec![2, 2, 3]).unwrap();
        let perms = admissible_perms(&s);
        assert_eq!(perms.len(), 2);
        let s = TensorShape::new(vec![2, 2]).unwrap();
        assert_eq!(admissible_perms(&s).len(), 2);
    }
}
