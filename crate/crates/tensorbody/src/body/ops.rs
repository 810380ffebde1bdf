//! Structural operations: polarity, scaling, sums, hulls, intersections,
//! linear images, representation conversion.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::FactorMap;

use super::concrete::{Ellipsoid, HPolytope, VPolytope};
use super::{Body, BodyRep};

/// Target representation for [`convert_rep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rep {
    VPoly,
    HPoly,
}

/// An invertible linear map acting on bodies: either a dense matrix or a
/// tensorial map (factor matrices plus an admissible slot permutation).
#[derive(Debug, Clone)]
pub enum LinearMap {
    Dense(DMatrix<f64>),
    Factor(FactorMap),
}

pub(super) fn polar(body: &Body) -> Result<Body> {
    let shape = body.shape().cloned();
    let rep = match body.rep() {
        BodyRep::VPoly(v) => {
            BodyRep::HPoly(HPolytope::new_unpruned(v.generators().to_vec())?)
        }
        BodyRep::HPoly(h) => BodyRep::VPoly(VPolytope::new_unpruned(h.normals().to_vec())?),
        BodyRep::Ellipsoid(e) => BodyRep::Ellipsoid(Ellipsoid::new(e.shape_inverse().clone())?),
        BodyRep::PiProd(fs) => BodyRep::EpsProd(polar_all(fs)?),
        BodyRep::EpsProd(fs) => BodyRep::PiProd(polar_all(fs)?),
        BodyRep::Sum(_) => BodyRep::Polar(Box::new(body.clone())),
        BodyRep::Hull(parts) => BodyRep::Meet(polar_all(parts)?),
        BodyRep::Meet(parts) => BodyRep::Hull(polar_all(parts)?),
        BodyRep::Polar(inner) => inner.rep().clone(),
        BodyRep::Mapped { mat, inv, inner } => BodyRep::Mapped {
            mat: inv.transpose(),
            inv: mat.transpose(),
            inner: Box::new(inner.polar()?),
        },
    };
    Ok(Body::fresh(rep, shape))
}

fn polar_all(bodies: &[Body]) -> Result<Vec<Body>> {
    bodies.iter().map(|b| b.polar()).collect()
}

pub(super) fn scale(body: &Body, lambda: f64) -> Result<Body> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Precondition(format!(
            "scale factor must be positive and finite, got {}",
            lambda
        )));
    }
    let shape = body.shape().cloned();
    let rep = match body.rep() {
        BodyRep::VPoly(v) => BodyRep::VPoly(VPolytope::new_unpruned(
            v.generators().iter().map(|g| g * lambda).collect(),
        )?),
        BodyRep::HPoly(h) => BodyRep::HPoly(HPolytope::new_unpruned(
            h.normals().iter().map(|a| a / lambda).collect(),
        )?),
        BodyRep::Ellipsoid(e) => {
            BodyRep::Ellipsoid(Ellipsoid::new(e.shape_matrix() / (lambda * lambda))?)
        }
        // products are positively homogeneous in each factor slot
        BodyRep::PiProd(fs) => BodyRep::PiProd(scale_first(fs, lambda)?),
        BodyRep::EpsProd(fs) => BodyRep::EpsProd(scale_first(fs, lambda)?),
        BodyRep::Sum(parts) => BodyRep::Sum(scale_all(parts, lambda)?),
        BodyRep::Hull(parts) => BodyRep::Hull(scale_all(parts, lambda)?),
        BodyRep::Meet(parts) => BodyRep::Meet(scale_all(parts, lambda)?),
        BodyRep::Polar(inner) => BodyRep::Polar(Box::new(inner.scale(1.0 / lambda)?)),
        BodyRep::Mapped { mat, inv, inner } => BodyRep::Mapped {
            mat: mat * lambda,
            inv: inv / lambda,
            inner: inner.clone(),
        },
    };
    Ok(Body::fresh(rep, shape))
}

fn scale_first(fs: &[Body], lambda: f64) -> Result<Vec<Body>> {
    let mut out = fs.to_vec();
    out[0] = out[0].scale(lambda)?;
    Ok(out)
}

fn scale_all(parts: &[Body], lambda: f64) -> Result<Vec<Body>> {
    parts.iter().map(|p| p.scale(lambda)).collect()
}

fn common_shape(a: &Body, b: &Body) -> Option<crate::linalg::TensorShape> {
    match (a.shape(), b.shape()) {
        (Some(s), Some(t)) if s == t => Some(s.clone()),
        (Some(s), None) | (None, Some(s)) => Some(s.clone()),
        _ => None,
    }
}

/// Minkowski sum. Exact V-polytope when both operands are polytopal;
/// proportional ellipsoids merge exactly; everything else becomes an
/// analytic sum with exact support.
pub fn minkowski_sum(a: &Body, b: &Body) -> Result<Body> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let shape = common_shape(a, b);
    if a.is_polytopal() && b.is_polytopal() {
        let va = a.as_vpoly()?;
        let vb = b.as_vpoly()?;
        let mut gens = Vec::with_capacity(2 * va.generators().len() * vb.generators().len());
        for ga in va.generators() {
            for gb in vb.generators() {
                gens.push(ga + gb);
                gens.push(ga - gb);
            }
        }
        return Ok(Body::fresh(BodyRep::VPoly(VPolytope::new(gens)?), shape));
    }
    let mut parts = Vec::new();
    collect_sum_parts(a, &mut parts);
    collect_sum_parts(b, &mut parts);
    let parts = merge_sum_parts(parts)?;
    if parts.len() == 1 {
        let only = parts.into_iter().next().expect("one part");
        return Ok(Body::fresh(only.rep().clone(), shape));
    }
    Ok(Body::fresh(BodyRep::Sum(parts), shape))
}

fn collect_sum_parts(b: &Body, out: &mut Vec<Body>) {
    match b.rep() {
        BodyRep::Sum(parts) => {
            for p in parts {
                collect_sum_parts(p, out);
            }
        }
        _ => out.push(b.clone()),
    }
}

/// Merges proportional ellipsoids (`lam E + mu E = (lam + mu) E`) and pairs
/// of small polytopal parts.
fn merge_sum_parts(mut parts: Vec<Body>) -> Result<Vec<Body>> {
    loop {
        let mut merged = None;
        'search: for i in 0..parts.len() {
            for j in (i + 1)..parts.len() {
                if let (BodyRep::Ellipsoid(ei), BodyRep::Ellipsoid(ej)) =
                    (parts[i].rep(), parts[j].rep())
                {
                    if let Some(e) = merge_proportional(ei, ej)? {
                        merged = Some((i, j, Body::new(BodyRep::Ellipsoid(e))));
                        break 'search;
                    }
                }
                if parts[i].is_polytopal() && parts[j].is_polytopal() {
                    let gi = parts[i].as_vpoly()?.generators().len();
                    let gj = parts[j].as_vpoly()?.generators().len();
                    if 2 * gi * gj <= 2000 {
                        let s = minkowski_sum(&parts[i], &parts[j])?;
                        merged = Some((i, j, s));
                        break 'search;
                    }
                }
            }
        }
        match merged {
            Some((i, j, body)) => {
                parts.remove(j);
                parts.remove(i);
                parts.push(body);
            }
            None => return Ok(parts),
        }
    }
}

fn merge_proportional(a: &Ellipsoid, b: &Ellipsoid) -> Result<Option<Ellipsoid>> {
    if a.dim() != b.dim() {
        return Ok(None);
    }
    let c = b.shape_matrix().trace() / a.shape_matrix().trace();
    if c <= 0.0 || !c.is_finite() {
        return Ok(None);
    }
    let diff = b.shape_matrix() - a.shape_matrix() * c;
    if diff.norm() > 1e-12 * b.shape_matrix().norm().max(1.0) {
        return Ok(None);
    }
    // E(M) + E(cM) = (1 + c^{-1/2}) E(M)
    let t = 1.0 + 1.0 / c.sqrt();
    Ok(Some(Ellipsoid::new(a.shape_matrix() / (t * t))?))
}

/// Convex hull of the union. Exact V-polytope when both are polytopal.
pub fn conv_union(a: &Body, b: &Body) -> Result<Body> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let shape = common_shape(a, b);
    if a.is_polytopal() && b.is_polytopal() {
        let mut gens = a.as_vpoly()?.generators().to_vec();
        gens.extend_from_slice(b.as_vpoly()?.generators());
        return Ok(Body::fresh(BodyRep::VPoly(VPolytope::new(gens)?), shape));
    }
    let mut parts = Vec::new();
    collect_hull_parts(a, &mut parts);
    collect_hull_parts(b, &mut parts);
    Ok(Body::fresh(BodyRep::Hull(parts), shape))
}

fn collect_hull_parts(b: &Body, out: &mut Vec<Body>) {
    match b.rep() {
        BodyRep::Hull(parts) => {
            for p in parts {
                collect_hull_parts(p, out);
            }
        }
        _ => out.push(b.clone()),
    }
}

/// Intersection. Exact H-polytope when both are polytopal.
pub fn intersect(a: &Body, b: &Body) -> Result<Body> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let shape = common_shape(a, b);
    if a.is_polytopal() && b.is_polytopal() {
        let mut normals = a.as_hpoly()?.normals().to_vec();
        normals.extend_from_slice(b.as_hpoly()?.normals());
        return Ok(Body::fresh(BodyRep::HPoly(HPolytope::new(normals)?), shape));
    }
    let mut parts = Vec::new();
    collect_meet_parts(a, &mut parts);
    collect_meet_parts(b, &mut parts);
    Ok(Body::fresh(BodyRep::Meet(parts), shape))
}

fn collect_meet_parts(b: &Body, out: &mut Vec<Body>) {
    match b.rep() {
        BodyRep::Meet(parts) => {
            for p in parts {
                collect_meet_parts(p, out);
            }
        }
        _ => out.push(b.clone()),
    }
}

/// Image of a body under an invertible linear map.
///
/// Tensorial maps act exactly on tensor products by transforming and
/// permuting the factors; dense maps transform concrete representations
/// directly and wrap composites.
pub fn linear_image(map: &LinearMap, body: &Body) -> Result<Body> {
    match map {
        LinearMap::Dense(t) => dense_image(t, body),
        LinearMap::Factor(fm) => factor_image(fm, body),
    }
}

fn dense_image(t: &DMatrix<f64>, body: &Body) -> Result<Body> {
    let d = body.dim();
    if t.nrows() != d || t.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: t.nrows(),
        });
    }
    let t_inv = t
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularMap("linear image requires an invertible map".into()))?;
    let shape = body.shape().cloned();
    let rep = match body.rep() {
        BodyRep::VPoly(v) => BodyRep::VPoly(VPolytope::new_unpruned(
            v.generators().iter().map(|g| t * g).collect(),
        )?),
        BodyRep::HPoly(h) => BodyRep::HPoly(HPolytope::new_unpruned(
            h.normals().iter().map(|a| t_inv.transpose() * a).collect(),
        )?),
        BodyRep::Ellipsoid(e) => {
            let m = t_inv.transpose() * e.shape_matrix() * &t_inv;
            let sym = (&m + m.transpose()) * 0.5;
            BodyRep::Ellipsoid(Ellipsoid::new(sym)?)
        }
        BodyRep::Mapped { mat, inv, inner } => BodyRep::Mapped {
            mat: t * mat,
            inv: inv * &t_inv,
            inner: inner.clone(),
        },
        _ => BodyRep::Mapped {
            mat: t.clone(),
            inv: t_inv,
            inner: Box::new(body.clone()),
        },
    };
    Ok(Body::fresh(rep, shape))
}

fn factor_image(fm: &FactorMap, body: &Body) -> Result<Body> {
    if fm.shape().total_dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: fm.shape().total_dim(),
        });
    }
    let shape = body.shape().cloned().or_else(|| Some(fm.shape().clone()));
    match body.rep() {
        // (T_1 (x) ... (x) T_l) U_sigma maps factor sigma(i) through T_i
        BodyRep::PiProd(fs) => {
            let mapped = permuted_factors(fm, fs)?;
            Ok(Body::fresh(BodyRep::PiProd(mapped), shape))
        }
        BodyRep::EpsProd(fs) => {
            let mapped = permuted_factors(fm, fs)?;
            Ok(Body::fresh(BodyRep::EpsProd(mapped), shape))
        }
        BodyRep::Sum(parts) => Ok(Body::fresh(
            BodyRep::Sum(factor_image_all(fm, parts)?),
            shape,
        )),
        BodyRep::Hull(parts) => Ok(Body::fresh(
            BodyRep::Hull(factor_image_all(fm, parts)?),
            shape,
        )),
        BodyRep::Meet(parts) => Ok(Body::fresh(
            BodyRep::Meet(factor_image_all(fm, parts)?),
            shape,
        )),
        BodyRep::Polar(inner) => {
            // T(B polar) = (T^{-T}(B)) polar, and T^{-T} has the same slot
            // permutation with inverted-transposed factor matrices
            let fm_it = fm.inverse_transpose()?;
            let img = factor_image(&fm_it, inner)?;
            let pol = img.polar()?;
            Ok(Body::fresh(pol.rep().clone(), shape))
        }
        _ => dense_image(&fm.to_matrix(), body),
    }
}

fn factor_image_all(fm: &FactorMap, parts: &[Body]) -> Result<Vec<Body>> {
    parts.iter().map(|p| factor_image(fm, p)).collect()
}

fn permuted_factors(fm: &FactorMap, fs: &[Body]) -> Result<Vec<Body>> {
    if fs.len() != fm.shape().order() {
        return Err(Error::ShapeMismatch(format!(
            "map acts on {} slots, product has {} factors",
            fm.shape().order(),
            fs.len()
        )));
    }
    (0..fs.len())
        .map(|i| {
            let src = fm.perm()[i];
            dense_image(&fm.factors()[i], &fs[src])
        })
        .collect()
}

/// Converts a polytopal body to the requested concrete representation.
pub fn convert_rep(body: &Body, target: Rep) -> Result<Body> {
    let shape = body.shape().cloned();
    match target {
        Rep::VPoly => {
            let v = body.as_vpoly()?;
            Ok(Body::fresh(BodyRep::VPoly((*v).clone()), shape))
        }
        Rep::HPoly => {
            let h = body.as_hpoly()?;
            Ok(Body::fresh(BodyRep::HPoly((*h).clone()), shape))
        }
    }
}

/// Inner polytopal approximation of an ellipsoid from `n` boundary
/// directions (planar bodies only; the achieved Hausdorff error is
/// `O(n^{-2})` and returned alongside).
pub fn ellipsoid_to_vpoly_approx(e: &Ellipsoid, n: usize) -> Result<(Body, f64)> {
    if e.dim() != 2 {
        return Err(Error::UnsupportedRep(
            "boundary-sampled conversion is planar-only".into(),
        ));
    }
    let n = n.max(8);
    let gens: Vec<_> = (0..n)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / n as f64;
            let dir = nalgebra::DVector::from_column_slice(&[t.cos(), t.sin()]);
            e.support_witness(&dir).1
        })
        .collect();
    let err = e.circumradius() * (1.0 - (std::f64::consts::PI / (2.0 * n as f64)).cos());
    Ok((Body::from_generators(gens)?, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::LpKind;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn polar_involutes_on_concrete_bodies() {
        let b1 = Body::lp_ball(LpKind::One, 3).unwrap();
        let pp = b1.polar().unwrap().polar().unwrap();
        let x = v(&[0.3, -0.2, 0.9]);
        assert_relative_eq!(
            b1.gauge(&x).unwrap(),
            pp.gauge(&x).unwrap(),
            epsilon = 1e-9
        );
        let e = Body::from_shape_matrix(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[4.0, 1.0, 1.0, 2.0],
        ))
        .unwrap();
        let ep = e.polar().unwrap();
        // gauge of the polar is the support of the body
        let y = v(&[1.0, -0.5]);
        assert_relative_eq!(
            ep.gauge(&y).unwrap(),
            e.support(&y).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn sum_of_cross_and_cube_is_octagon() {
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let binf = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let s = minkowski_sum(&b1, &binf).unwrap();
        match s.rep() {
            BodyRep::VPoly(v) => assert_eq!(v.generators().len(), 4),
            other => panic!("expected V-polytope, got {:?}", other),
        }
        assert_relative_eq!(s.support(&v(&[1.0, 0.0])).unwrap(), 2.0, epsilon = 1e-9);
        assert_relative_eq!(
            s.support(&v(&[1.0, 1.0])).unwrap(),
            3.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn proportional_ellipsoids_merge() {
        let e = Body::ball(3);
        let e2 = e.scale(2.0).unwrap();
        let s = minkowski_sum(&e, &e2).unwrap();
        match s.rep() {
            BodyRep::Ellipsoid(el) => {
                assert_relative_eq!(el.circumradius(), 3.0, epsilon = 1e-12)
            }
            other => panic!("expected merged ellipsoid, got {:?}", other),
        }
    }

    #[test]
    fn mixed_sum_keeps_exact_support() {
        let e = Body::ball(2);
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let s = minkowski_sum(&e, &b1).unwrap();
        let u = v(&[0.6, 0.8]);
        assert_relative_eq!(
            s.support(&u).unwrap(),
            1.0 + 0.8,
            epsilon = 1e-12
        );
    }

    #[test]
    fn hull_and_meet_are_polar_duals() {
        let e = Body::ball(2).scale(0.8).unwrap();
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let hull = conv_union(&e, &b1).unwrap();
        let meet = intersect(&e.polar().unwrap(), &b1.polar().unwrap()).unwrap();
        let dual = hull.polar().unwrap();
        let u = v(&[0.3, 1.1]);
        assert_relative_eq!(
            dual.gauge(&u).unwrap(),
            meet.gauge(&u).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn polytopal_intersection_is_exact() {
        let binf = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap().scale(1.5).unwrap();
        let m = intersect(&binf, &b1).unwrap();
        match m.rep() {
            BodyRep::HPoly(h) => assert_eq!(h.normals().len(), 4),
            other => panic!("expected H-polytope, got {:?}", other),
        }
        // corner of the cube is cut: gauge of (1,1) is 4/3
        assert_relative_eq!(m.gauge(&v(&[1.0, 1.0])).unwrap(), 4.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn dense_image_transforms_all_concrete_reps() {
        let t = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let map = LinearMap::Dense(t.clone());
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let img = linear_image(&map, &b1).unwrap();
        // T e1 = (2, 0): gauge there must be 1
        assert_relative_eq!(img.gauge(&v(&[2.0, 0.0])).unwrap(), 1.0, epsilon = 1e-9);
        let e = Body::ball(2);
        let img_e = linear_image(&map, &e).unwrap();
        let x = &t * v(&[0.6, 0.8]);
        assert_relative_eq!(img_e.gauge(&x).unwrap(), 1.0, epsilon = 1e-10);
        // support transforms through the transpose
        let u = v(&[0.3, -0.9]);
        assert_relative_eq!(
            img_e.support(&u).unwrap(),
            e.support(&(t.transpose() * &u)).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn conversion_round_trip_preserves_gauge() {
        let p = Body::random_polytope(3, 8, 11).unwrap();
        let h = convert_rep(&p, Rep::HPoly).unwrap();
        let back = convert_rep(&h, Rep::VPoly).unwrap();
        for dir in crate::sampling::sphere_directions(3, 25, 9) {
            assert_relative_eq!(
                p.gauge(&dir).unwrap(),
                h.gauge(&dir).unwrap(),
                epsilon = 1e-8
            );
            assert_relative_eq!(
                p.gauge(&dir).unwrap(),
                back.gauge(&dir).unwrap(),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn planar_ellipsoid_approximation_declares_error() {
        let e = Ellipsoid::new(nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]))
            .unwrap();
        let (poly, err) = ellipsoid_to_vpoly_approx(&e, 64).unwrap();
        assert!(err < 1e-3);
        let u = v(&[1.0, 0.0]);
        let hs = poly.support(&u).unwrap();
        assert!(hs <= 1.0 + 1e-12 && hs >= 1.0 - 2.0 * err);
    }
}
