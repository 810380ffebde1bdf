//! Concrete body representations: V-polytopes, H-polytopes, ellipsoids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spd;
use crate::par;
use crate::simplex;

use super::PRUNE_TOL;

fn check_dims(vecs: &[DVector<f64>]) -> Result<usize> {
    let dim = vecs
        .first()
        .ok_or_else(|| Error::InvalidBody("empty generator/normal list".into()))?
        .len();
    if dim == 0 {
        return Err(Error::InvalidBody("zero-dimensional vector".into()));
    }
    for v in vecs {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if !v.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidBody("non-finite coordinate".into()));
        }
    }
    Ok(dim)
}

fn rank_of(vecs: &[DVector<f64>], dim: usize) -> usize {
    let m = DMatrix::from_columns(vecs);
    m.rank(1e-10 * (1.0 + m.norm())).min(dim)
}

/// Removes +-duplicates and near-zero vectors (coordinate tolerance scaled
/// by the largest norm present).
pub(crate) fn dedupe_signed(vecs: Vec<DVector<f64>>, tol: f64) -> Vec<DVector<f64>> {
    let scale = vecs.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(vecs.len());
    'outer: for v in vecs {
        if v.norm() <= tol * scale {
            continue;
        }
        for w in &kept {
            if (&v - w).norm() <= tol * scale || (&v + w).norm() <= tol * scale {
                continue 'outer;
            }
        }
        kept.push(v);
    }
    kept
}

/// Drops every generator lying in the symmetric hull of the others.
///
/// A parallel screening pass computes each generator's gauge against the
/// rest; removals are then confirmed sequentially against the surviving set
/// so that mutually redundant points cannot erase each other.
pub(crate) fn prune_generators(gens: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let gens = dedupe_signed(gens, 1e-12);
    if gens.len() <= 1 {
        return gens;
    }
    let idx: Vec<usize> = (0..gens.len()).collect();
    let screened: Vec<(usize, f64)> = par::map(&idx, |&i| {
        let others: Vec<DVector<f64>> = gens
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let g = simplex::gauge_lp(&others, &gens[i])
            .map(|(v, _)| v)
            .unwrap_or(f64::INFINITY);
        (i, g)
    });
    let mut candidates: Vec<usize> = screened
        .iter()
        .filter(|(_, g)| *g <= 1.0 + PRUNE_TOL)
        .map(|(i, _)| *i)
        .collect();
    // confirm in decreasing-gauge order: closest-to-boundary points go last
    candidates.sort_by(|a, b| {
        screened[*b]
            .1
            .partial_cmp(&screened[*a].1)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut alive = vec![true; gens.len()];
    for i in candidates {
        alive[i] = false;
        let others: Vec<DVector<f64>> = gens
            .iter()
            .enumerate()
            .filter(|(j, _)| alive[*j])
            .map(|(_, g)| g.clone())
            .collect();
        let redundant = !others.is_empty()
            && simplex::gauge_lp(&others, &gens[i])
                .map(|(v, _)| v <= 1.0 + PRUNE_TOL)
                .unwrap_or(false);
        if !redundant {
            alive[i] = true;
        }
    }
    gens.into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(g, _)| g)
        .collect()
}

/// Symmetric V-polytope `conv(+-g_1, ..., +-g_m)`.
#[derive(Debug, Clone)]
pub struct VPolytope {
    dim: usize,
    generators: Vec<DVector<f64>>,
}

impl VPolytope {
    /// Builds the hull of `+-gens`, pruning redundant generators.
    /// The generators must span: bodies here are full-dimensional.
    pub fn new(gens: Vec<DVector<f64>>) -> Result<Self> {
        let dim = check_dims(&gens)?;
        if rank_of(&gens, dim) < dim {
            return Err(Error::InvalidBody(format!(
                "generators span a proper subspace of R^{}",
                dim
            )));
        }
        let generators = prune_generators(gens);
        Ok(VPolytope { dim, generators })
    }

    /// Builds without pruning; for callers that already hold a minimal set.
    pub fn new_unpruned(gens: Vec<DVector<f64>>) -> Result<Self> {
        let dim = check_dims(&gens)?;
        if rank_of(&gens, dim) < dim {
            return Err(Error::InvalidBody(format!(
                "generators span a proper subspace of R^{}",
                dim
            )));
        }
        let generators = dedupe_signed(gens, 1e-12);
        Ok(VPolytope { dim, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[DVector<f64>] {
        &self.generators
    }

    pub fn gauge_witness(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        simplex::gauge_lp(&self.generators, x)
    }

    pub fn support_witness(&self, u: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut best = 0.0;
        let mut arg = self.generators[0].clone();
        for g in &self.generators {
            let s = g.dot(u);
            if s.abs() > best {
                best = s.abs();
                arg = if s >= 0.0 { g.clone() } else { -g };
            }
        }
        (best, arg)
    }
}

/// Symmetric H-polytope `{x : |<a_i, x>| <= 1}`.
#[derive(Debug, Clone)]
pub struct HPolytope {
    dim: usize,
    normals: Vec<DVector<f64>>,
}

impl HPolytope {
    /// Intersects the symmetric slabs `|<a_i, x>| <= 1`; the normals must
    /// span so that the body is bounded. Redundant slabs are pruned.
    pub fn new(normals: Vec<DVector<f64>>) -> Result<Self> {
        let dim = check_dims(&normals)?;
        if rank_of(&normals, dim) < dim {
            return Err(Error::InvalidBody(format!(
                "normals span a proper subspace of R^{}; body is unbounded",
                dim
            )));
        }
        let normals = prune_generators(normals);
        Ok(HPolytope { dim, normals })
    }

    pub fn new_unpruned(normals: Vec<DVector<f64>>) -> Result<Self> {
        let dim = check_dims(&normals)?;
        if rank_of(&normals, dim) < dim {
            return Err(Error::InvalidBody(format!(
                "normals span a proper subspace of R^{}; body is unbounded",
                dim
            )));
        }
        let normals = dedupe_signed(normals, 1e-12);
        Ok(HPolytope { dim, normals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[DVector<f64>] {
        &self.normals
    }

    pub fn gauge_witness(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mut best = 0.0;
        let mut arg = self.normals[0].clone();
        for a in &self.normals {
            let s = a.dot(x);
            if s.abs() > best {
                best = s.abs();
                arg = if s >= 0.0 { a.clone() } else { -a };
            }
        }
        (best, arg)
    }

    /// Support via the gauge LP of the polar V-polytope: the optimal dual
    /// variables form the attaining point of the body itself.
    pub fn support_witness(&self, u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let (h, x) = simplex::gauge_lp(&self.normals, u)?;
        Ok((h, x))
    }

    pub fn circumradius_bound(&self) -> f64 {
        let m = DMatrix::from_columns(&self.normals).transpose();
        let svd = m.clone().svd(false, false);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if smin <= 1e-14 {
            return f64::INFINITY;
        }
        (self.normals.len() as f64).sqrt() / smin
    }
}

/// Ellipsoid `{x : x^T M x <= 1}` with `M` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    dim: usize,
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    /// `M^{-1/2}`: maps the unit ball onto the ellipsoid.
    sqrt_inv: DMatrix<f64>,
    /// `M^{1/2}`: maps the ellipsoid onto the unit ball.
    sqrt: DMatrix<f64>,
    eig_min: f64,
    eig_max: f64,
}

impl Ellipsoid {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidBody("shape matrix must be square".into()));
        }
        let dim = m.nrows();
        let (q, vals) = spd::sym_eigen(&m)?;
        let eig_max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let eig_min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if eig_min <= 1e-14 * eig_max.max(1.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "shape matrix has eigenvalue {:.3e}",
                eig_min
            )));
        }
        let apply = |f: &dyn Fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&DVector::from_iterator(
                dim,
                vals.iter().map(|&v| f(v)),
            ));
            &q * d * q.transpose()
        };
        Ok(Ellipsoid {
            dim,
            m_inv: apply(&|v| 1.0 / v),
            sqrt_inv: apply(&|v| 1.0 / v.sqrt()),
            sqrt: apply(&|v| v.sqrt()),
            m,
            eig_min,
            eig_max,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn shape_inverse(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    /// `M^{-1/2}`, the SPD map sending the unit ball onto this ellipsoid.
    pub fn half_map(&self) -> &DMatrix<f64> {
        &self.sqrt_inv
    }

    /// `M^{1/2}`, the inverse of [`Ellipsoid::half_map`].
    pub fn half_map_inv(&self) -> &DMatrix<f64> {
        &self.sqrt
    }

    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        (x.dot(&(&self.m * x))).max(0.0).sqrt()
    }

    pub fn gauge_witness(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let mx = &self.m * x;
        let g = x.dot(&mx).max(0.0).sqrt();
        if g <= 0.0 {
            return (0.0, DVector::zeros(self.dim));
        }
        (g, mx / g)
    }

    pub fn support_witness(&self, u: &DVector<f64>) -> (f64, DVector<f64>) {
        let miu = &self.m_inv * u;
        let h = u.dot(&miu).max(0.0).sqrt();
        if h <= 0.0 {
            return (0.0, DVector::zeros(self.dim));
        }
        (h, miu / h)
    }

    pub fn circumradius(&self) -> f64 {
        1.0 / self.eig_min.sqrt()
    }

    pub fn inradius(&self) -> f64 {
        1.0 / self.eig_max.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn vpoly_prunes_interior_generators() {
        let p = VPolytope::new(vec![
            v(&[1.0, 0.0]),
            v(&[0.0, 1.0]),
            v(&[0.3, 0.3]),
            v(&[-1.0, 0.0]), // sign-duplicate of e1
        ])
        .unwrap();
        assert_eq!(p.generators().len(), 2);
    }

    #[test]
    fn vpoly_keeps_vertices_of_octagon() {
        // B1 + 0.5 Binf has 8 vertices, 4 up to sign
        let p = VPolytope::new(vec![
            v(&[1.5, 0.5]),
            v(&[0.5, 1.5]),
            v(&[1.5, -0.5]),
            v(&[0.5, -1.5]),
        ])
        .unwrap();
        assert_eq!(p.generators().len(), 4);
    }

    #[test]
    fn vpoly_rejects_flat_input() {
        assert!(VPolytope::new(vec![v(&[1.0, 0.0]), v(&[2.0, 0.0])]).is_err());
    }

    #[test]
    fn cross_polytope_gauge_is_l1() {
        let p = VPolytope::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])])
            .unwrap();
        let (g, dual) = p.gauge_witness(&v(&[1.0, -2.0, 0.5])).unwrap();
        assert_relative_eq!(g, 3.5, epsilon = 1e-9);
        assert_relative_eq!(dual.dot(&v(&[1.0, -2.0, 0.5])), 3.5, epsilon = 1e-8);
        // dual witness must lie in the polar cube
        assert!(dual.amax() <= 1.0 + 1e-9);
    }

    #[test]
    fn hpoly_gauge_is_max_form() {
        let h = HPolytope::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let (g, a) = h.gauge_witness(&v(&[0.25, -0.75]));
        assert_relative_eq!(g, 0.75, epsilon = 1e-12);
        assert_relative_eq!(a.dot(&v(&[0.25, -0.75])), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn hpoly_support_witness_lies_in_body() {
        let h = HPolytope::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[1.0, 1.0])]).unwrap();
        let u = v(&[0.3, 1.0]);
        let (hval, x) = h.support_witness(&u).unwrap();
        assert_relative_eq!(x.dot(&u), hval, epsilon = 1e-9);
        let (gx, _) = h.gauge_witness(&x);
        assert!(gx <= 1.0 + 1e-8, "witness outside body: gauge {}", gx);
    }

    #[test]
    fn hpoly_rejects_unbounded() {
        assert!(HPolytope::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])]).is_err());
    }

    #[test]
    fn ellipsoid_gauge_support_polar_pair() {
        let e = Ellipsoid::new(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0])).unwrap();
        // semi-axes 1/2 and 1
        assert_relative_eq!(e.gauge(&v(&[0.5, 0.0])), 1.0, epsilon = 1e-12);
        let (h, x) = e.support_witness(&v(&[1.0, 0.0]));
        assert_relative_eq!(h, 0.5, epsilon = 1e-12);
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(e.circumradius(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.inradius(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ellipsoid_rejects_indefinite() {
        assert!(Ellipsoid::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn ellipsoid_gauge_witness_is_subgradient() {
        let e = Ellipsoid::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let x = v(&[0.7, -0.4]);
        let (g, u) = e.gauge_witness(&x);
        assert_relative_eq!(u.dot(&x), g, epsilon = 1e-12);
        // u must lie in the polar ellipsoid {u^T M^{-1} u <= 1}
        let polar_gauge = u.dot(&(e.shape_inverse() * &u)).sqrt();
        assert_relative_eq!(polar_gauge, 1.0, epsilon = 1e-10);
    }
}
