//! Projective, injective, and Hilbertian tensor products of bodies.
//!
//! The projective product is the convex hull of Kronecker products of factor
//! points; for V-polytope factors it is built concretely from the Kronecker
//! products of the generators. The injective product is the polar of the
//! projective product of the polars; for polytopal factors its H-rep normals
//! are the Kronecker products of the polar factors' vertices. Non-polytopal
//! factors fall back to the analytic product representations, whose gauge
//! and support oracles are exact. The Hilbertian product of ellipsoids is
//! the ellipsoid of the Kronecker shape matrix.

use nalgebra::DVector;

use crate::body::{Body, BodyRep, Ellipsoid};
use crate::error::{Error, Result};
use crate::linalg::{kron_mat, kron_vec, TensorShape};

const MAX_FACTORS: usize = 3;
const MAX_TOTAL_DIM: usize = 16;
/// Kronecker vertex sets beyond this size stay in factored form: redundancy
/// pruning is quadratic in the generator count, and downstream facet
/// enumeration of a fat kron polytope is far worse. The factored reps keep
/// exact oracles through the factor scans.
const KRON_LIMIT: usize = 600;

fn check_profile(factors: &[Body], shape: &TensorShape) -> Result<()> {
    if factors.is_empty() {
        return Err(Error::InvalidBody("product of zero factors".into()));
    }
    if factors.len() > MAX_FACTORS {
        return Err(Error::CapExceeded(format!(
            "at most {} tensor factors supported, got {}",
            MAX_FACTORS,
            factors.len()
        )));
    }
    if shape.order() != factors.len()
        || factors
            .iter()
            .zip(shape.dims())
            .any(|(f, &d)| f.dim() != d)
    {
        return Err(Error::ShapeMismatch(format!(
            "factor dimensions {:?} do not match shape {:?}",
            factors.iter().map(|f| f.dim()).collect::<Vec<_>>(),
            shape.dims()
        )));
    }
    if shape.total_dim() > MAX_TOTAL_DIM {
        return Err(Error::CapExceeded(format!(
            "total tensor dimension {} exceeds cap {}",
            shape.total_dim(),
            MAX_TOTAL_DIM
        )));
    }
    Ok(())
}

fn kron_combinations(sets: &[Vec<DVector<f64>>]) -> Vec<DVector<f64>> {
    let mut acc: Vec<DVector<f64>> = vec![DVector::from_element(1, 1.0)];
    for set in sets {
        let mut next = Vec::with_capacity(acc.len() * set.len());
        for prefix in &acc {
            for v in set {
                next.push(kron_vec(&[prefix.clone(), v.clone()]));
            }
        }
        acc = next;
    }
    acc
}

/// Projective tensor product `conv({x1 ⊗ … ⊗ xl : xi ∈ Pi})`.
pub fn projective_product(factors: &[Body], shape: &TensorShape) -> Result<Body> {
    check_profile(factors, shape)?;
    if factors.len() == 1 {
        return Ok(factors[0].clone().with_shape(shape.clone())?);
    }
    let all_vpoly = factors.iter().all(|f| matches!(f.rep(), BodyRep::VPoly(_)));
    if all_vpoly {
        let sets: Vec<Vec<DVector<f64>>> = factors
            .iter()
            .map(|f| match f.rep() {
                BodyRep::VPoly(v) => v.generators().to_vec(),
                _ => unreachable!(),
            })
            .collect();
        let count: usize = sets.iter().map(|s| s.len()).product();
        if count <= KRON_LIMIT {
            let gens = kron_combinations(&sets);
            return Body::from_generators(gens)?.with_shape(shape.clone());
        }
    }
    Body::new(BodyRep::PiProd(factors.to_vec())).with_shape(shape.clone())
}

/// Injective tensor product: the polar of the projective product of the
/// polar factors.
pub fn injective_product(factors: &[Body], shape: &TensorShape) -> Result<Body> {
    check_profile(factors, shape)?;
    if factors.len() == 1 {
        return Ok(factors[0].clone().with_shape(shape.clone())?);
    }
    let all_polytopal = factors.iter().all(|f| f.is_polytopal());
    if all_polytopal {
        // normals of the injective product are the Kronecker products of
        // the polar factors' vertices
        let mut polar_vertex_sets: Vec<Vec<DVector<f64>>> = Vec::with_capacity(factors.len());
        for f in factors {
            let polar = f.polar()?;
            polar_vertex_sets.push(polar.as_vpoly()?.generators().to_vec());
        }
        let count: usize = polar_vertex_sets.iter().map(|s| s.len()).product();
        if count <= KRON_LIMIT {
            let normals = kron_combinations(&polar_vertex_sets);
            return Body::from_normals(normals)?.with_shape(shape.clone());
        }
    }
    Body::new(BodyRep::EpsProd(factors.to_vec())).with_shape(shape.clone())
}

/// Hilbertian tensor product of ellipsoids: the image of the unit ball
/// under the Kronecker product of the factor half-maps, i.e. the ellipsoid
/// with the Kronecker shape matrix.
pub fn hilbert_product(factors: &[Ellipsoid], shape: &TensorShape) -> Result<Ellipsoid> {
    if factors.is_empty() {
        return Err(Error::InvalidBody("product of zero factors".into()));
    }
    if factors.len() > MAX_FACTORS {
        return Err(Error::CapExceeded(format!(
            "at most {} tensor factors supported, got {}",
            MAX_FACTORS,
            factors.len()
        )));
    }
    if shape.order() != factors.len()
        || factors
            .iter()
            .zip(shape.dims())
            .any(|(f, &d)| f.dim() != d)
    {
        return Err(Error::ShapeMismatch(
            "ellipsoid dimensions do not match shape".into(),
        ));
    }
    if shape.total_dim() > MAX_TOTAL_DIM {
        return Err(Error::CapExceeded(format!(
            "total tensor dimension {} exceeds cap {}",
            shape.total_dim(),
            MAX_TOTAL_DIM
        )));
    }
    let mats: Vec<_> = factors.iter().map(|e| e.shape_matrix().clone()).collect();
    Ellipsoid::new(kron_mat(&mats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{hausdorff, nu, LpKind};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn shape2(a: usize, b: usize) -> TensorShape {
        TensorShape::new(vec![a, b]).unwrap()
    }

    #[test]
    fn cross_polytopes_give_cross_polytope() {
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let p = projective_product(&[b1.clone(), b1], &shape2(2, 2)).unwrap();
        match p.rep() {
            BodyRep::VPoly(v) => {
                assert_eq!(v.generators().len(), 4);
                for g in v.generators() {
                    assert_relative_eq!(g.abs().sum(), 1.0, epsilon = 1e-12);
                    assert_relative_eq!(g.amax(), 1.0, epsilon = 1e-12);
                }
            }
            _ => panic!("expected concrete V-rep"),
        }
        assert_eq!(p.shape().unwrap().dims(), &[2, 2]);
    }

    #[test]
    fn cube_product_generators_and_gauge() {
        let binf = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let p = projective_product(&[binf.clone(), binf], &shape2(2, 2)).unwrap();
        match p.rep() {
            BodyRep::VPoly(v) => assert_eq!(v.generators().len(), 4),
            _ => panic!("expected concrete V-rep"),
        }
        // a non-decomposable sign vector needs two decomposable terms
        let z = DVector::from_column_slice(&[1.0, 1.0, 1.0, -1.0]);
        assert_relative_eq!(p.gauge(&z).unwrap(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn injective_is_polar_of_projective_of_polars() {
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let binf = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let eps = injective_product(&[b1.clone(), b1], &shape2(2, 2)).unwrap();
        let pi_of_polars = projective_product(&[binf.clone(), binf], &shape2(2, 2)).unwrap();
        let polar = pi_of_polars.polar().unwrap();
        let h = hausdorff(&eps, &polar).unwrap();
        assert!(h.value <= 1e-10, "hausdorff {}", h.value);
        let e11 = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(eps.gauge(&e11).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn round_injective_gauge_is_operator_norm() {
        let eps = injective_product(&[Body::ball(2), Body::ball(2)], &shape2(2, 2)).unwrap();
        let id = DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(eps.gauge(&id).unwrap(), 1.0, epsilon = 1e-10);
        let rank1 = DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(eps.gauge(&rank1).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn gauge_factorizes_on_decomposables() {
        use rand::SeedableRng;
        let p1 = Body::random_polytope(2, 5, 21).unwrap();
        let p2 = Body::random_polytope(3, 6, 22).unwrap();
        let shape = shape2(2, 3);
        let pi = projective_product(&[p1.clone(), p2.clone()], &shape).unwrap();
        let eps = injective_product(&[p1.clone(), p2.clone()], &shape).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let x = crate::sampling::gaussian_dir(2, &mut rng);
            let y = crate::sampling::gaussian_dir(3, &mut rng);
            let z = kron_vec(&[x.clone(), y.clone()]);
            let want = p1.gauge(&x).unwrap() * p2.gauge(&y).unwrap();
            assert_relative_eq!(pi.gauge(&z).unwrap(), want, epsilon = 1e-8);
            assert_relative_eq!(eps.gauge(&z).unwrap(), want, epsilon = 1e-8);
        }
    }

    #[test]
    fn sandwich_on_random_factors() {
        let p1 = Body::random_polytope(2, 5, 31).unwrap();
        let p2 = Body::random_polytope(2, 5, 32).unwrap();
        let shape = shape2(2, 2);
        let pi = projective_product(&[p1.clone(), p2.clone()], &shape).unwrap();
        let eps = injective_product(&[p1, p2], &shape).unwrap();
        assert!(nu(&pi, &eps).unwrap() <= 1.0 + 1e-9);
        assert!(nu(&eps, &pi).unwrap() <= 2.0 + 1e-6);
    }

    #[test]
    fn hilbert_product_of_round_factors() {
        let half = Ellipsoid::new(DMatrix::from_diagonal_element(2, 2, 0.5)).unwrap();
        let prod = hilbert_product(&[half.clone(), half], &shape2(2, 2)).unwrap();
        // sqrt(2)-discs combine to the radius-2 ball
        assert!((prod.shape_matrix() - DMatrix::<f64>::identity(4, 4) * 0.25).norm() < 1e-12);
    }

    #[test]
    fn reciprocal_scaling_is_absorbed() {
        let m1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]);
        let m2 = DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 3.0]);
        let lam = 4.0f64;
        let e1 = Ellipsoid::new(m1.clone()).unwrap();
        let e2 = Ellipsoid::new(m2.clone()).unwrap();
        // lambda E has shape matrix M / lambda^2
        let e1s = Ellipsoid::new(&m1 / (lam * lam)).unwrap();
        let e2s = Ellipsoid::new(&m2 * (lam * lam)).unwrap();
        let a = hilbert_product(&[e1, e2], &shape2(2, 2)).unwrap();
        let b = hilbert_product(&[e1s, e2s], &shape2(2, 2)).unwrap();
        assert!((a.shape_matrix() - b.shape_matrix()).norm() < 1e-10);
    }

    #[test]
    fn caps_and_shape_mismatch_are_rejected() {
        let b = Body::lp_ball(LpKind::One, 2).unwrap();
        let four = vec![b.clone(), b.clone(), b.clone(), b.clone()];
        let shape4 = TensorShape::new(vec![2, 2, 2, 2]).unwrap();
        assert!(matches!(
            projective_product(&four, &shape4),
            Err(Error::CapExceeded(_))
        ));
        let b3 = Body::lp_ball(LpKind::One, 3).unwrap();
        let big = vec![b3.clone(), b3.clone(), Body::lp_ball(LpKind::One, 2).unwrap()];
        let shape_big = TensorShape::new(vec![3, 3, 2]).unwrap();
        assert!(matches!(
            projective_product(&big, &shape_big),
            Err(Error::CapExceeded(_))
        ));
        assert!(matches!(
            projective_product(&[b.clone(), b.clone()], &shape2(2, 3)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn factor_map_equivariance() {
        let p1 = Body::random_polytope(2, 4, 41).unwrap();
        let p2 = Body::random_polytope(2, 4, 42).unwrap();
        let shape = shape2(2, 2);
        let pi = projective_product(&[p1.clone(), p2.clone()], &shape).unwrap();
        let t1 = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.0, 0.8]);
        let t2 = DMatrix::from_row_slice(2, 2, &[1.0, -0.4, 0.3, 1.1]);
        let fm = crate::linalg::FactorMap::new(
            shape.clone(),
            vec![t1.clone(), t2.clone()],
            vec![0, 1],
        )
        .unwrap();
        let mapped = crate::body::linear_image(&crate::body::LinearMap::Factor(fm), &pi).unwrap();
        let direct = projective_product(
            &[
                crate::body::linear_image(&crate::body::LinearMap::Dense(t1), &p1).unwrap(),
                crate::body::linear_image(&crate::body::LinearMap::Dense(t2), &p2).unwrap(),
            ],
            &shape,
        )
        .unwrap();
        let h = hausdorff(&mapped, &direct).unwrap();
        assert!(h.value <= 1e-9, "hausdorff {}", h.value);
    }
}
