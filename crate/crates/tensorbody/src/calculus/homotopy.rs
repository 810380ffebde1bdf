//! Homotopies and Minkowski paths between tensorial bodies.

use nalgebra::DMatrix;

use crate::body::{hausdorff, linear_image, minkowski_sum, nu, Body, LinearMap};
use crate::error::{Error, Result};
use crate::lowner::lowner;
use crate::products::projective_product;

use super::retract::{ensure_slice_position, reject_if_not, INNER_PROBES};
use super::{certify_tensorial, extract_factors, required_shape};

/// The three deformations: `W` slides a tensorial body onto its product
/// projection, `F` rounds the factors of a product into Euclidean balls, and
/// `G` runs `W` on `[0,½]` followed by `F` of the projection on `[½,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomotopyKind {
    W,
    F,
    G,
}

impl std::str::FromStr for HomotopyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "W" => Ok(HomotopyKind::W),
            "F" => Ok(HomotopyKind::F),
            "G" => Ok(HomotopyKind::G),
            other => Err(Error::Precondition(format!(
                "unknown homotopy kind '{}', expected W, F, or G",
                other
            ))),
        }
    }
}

/// Evaluates the chosen deformation at time `t ∈ [0,1]`.
///
/// `W(P,t) = (1−t)P + t·conv(P)` needs a tensorial body; `F` additionally
/// needs the body to be a projective product in slice position; `G` needs a
/// slice body and ends at the product of Euclidean balls.
pub fn homotopy_eval(kind: HomotopyKind, p: &Body, t: f64) -> Result<Body> {
    check_unit_interval(t)?;
    let shape = required_shape(p)?.clone();
    let cert = certify_tensorial(p, INNER_PROBES)?;
    reject_if_not(&cert, "homotopy evaluation")?;
    let conv = projective_product(&cert.factors, &shape)?;
    match kind {
        HomotopyKind::W => mix(p, 1.0 - t, &conv, t),
        HomotopyKind::F => {
            if nu(p, &conv)? > 1.0 + 1e-5 {
                return Err(Error::Precondition(
                    "factor homotopy needs a projective product, not a general tensorial body"
                        .into(),
                ));
            }
            ensure_slice_position(&cert.factors)?;
            factor_interpolation(&cert.factors, &shape, t)
        }
        HomotopyKind::G => {
            ensure_slice_position(&cert.factors)?;
            if t <= 0.5 {
                mix(p, 1.0 - 2.0 * t, &conv, 2.0 * t)
            } else {
                factor_interpolation(&cert.factors, &shape, 2.0 * t - 1.0)
            }
        }
    }
}

/// `⊗π over i of ((1−t)·f̂ᵢ + t·B2)` with `f̂ᵢ` the factors moved into exact
/// Löwner position. Scalar Löwner maps multiply out to one across the slots,
/// so at `t = 0` the product is unchanged.
fn factor_interpolation(
    factors: &[Body],
    shape: &crate::linalg::TensorShape,
    t: f64,
) -> Result<Body> {
    let mut interp = Vec::with_capacity(factors.len());
    for f in factors {
        let fit = lowner(f)?;
        let pos = linear_image(
            &LinearMap::Dense(fit.ellipsoid.half_map_inv().clone()),
            f,
        )?;
        let ball = Body::from_shape_matrix(DMatrix::identity(f.dim(), f.dim()))?;
        interp.push(mix(&pos, 1.0 - t, &ball, t)?);
    }
    projective_product(&interp, shape)
}

/// Two-segment Minkowski path between tensorial bodies on a two-factor
/// shape, threaded through the mixed product `K = P₁ ⊗π R₂`. Every point of
/// the path shares all factors but one with its segment endpoints, so the
/// whole path stays tensorial.
pub fn polygonal_path(p: &Body, r: &Body, t: f64) -> Result<Body> {
    check_unit_interval(t)?;
    let shape = required_shape(p)?.clone();
    if required_shape(r)? != &shape {
        return Err(Error::ShapeMismatch(
            "path endpoints must carry the same tensor shape".into(),
        ));
    }
    if shape.order() != 2 {
        return Err(Error::UnsupportedRep(
            "the two-segment path is defined for exactly two factors".into(),
        ));
    }
    let cp = certify_tensorial(p, INNER_PROBES)?;
    reject_if_not(&cp, "path endpoint")?;
    let cr = certify_tensorial(r, INNER_PROBES)?;
    reject_if_not(&cr, "path endpoint")?;
    let k = projective_product(
        &[cp.factors[0].clone(), cr.factors[1].clone()],
        &shape,
    )?;
    if t <= 0.5 {
        mix(p, 1.0 - 2.0 * t, &k, 2.0 * t)
    } else {
        mix(&k, 2.0 - 2.0 * t, r, 2.0 * t - 1.0)
    }
}

/// Minkowski sum `P + λR` of bodies whose canonical factors agree in every
/// slot except `slot`; multilinearity then keeps the sum tensorial with the
/// factor sum appearing in that slot. Refuses when two or more slots differ.
pub fn shared_factor_sum(p: &Body, r: &Body, slot: usize, lambda: f64) -> Result<Body> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Precondition(format!(
            "sum weight must be positive and finite, got {}",
            lambda
        )));
    }
    let shape = required_shape(p)?.clone();
    if required_shape(r)? != &shape {
        return Err(Error::ShapeMismatch(
            "summands must carry the same tensor shape".into(),
        ));
    }
    if slot >= shape.order() {
        return Err(Error::ShapeMismatch(format!(
            "slot {} out of range for an order-{} shape",
            slot,
            shape.order()
        )));
    }
    let fp = extract_factors(p)?;
    let fr = extract_factors(r)?;
    let mut mismatched = Vec::new();
    for i in 0..shape.order() {
        if i != slot && !factor_agrees(&fp[i], &fr[i])? {
            mismatched.push(i);
        }
    }
    if !mismatched.is_empty() {
        return Err(Error::Precondition(format!(
            "summands must share all factors except slot {}; they differ in slot(s) {:?}",
            slot, mismatched
        )));
    }
    minkowski_sum(p, &r.scale(lambda)?)
}

/// Canonical factors match when their Hausdorff distance is negligible
/// relative to the body scale.
fn factor_agrees(a: &Body, b: &Body) -> Result<bool> {
    let h = hausdorff(a, b)?;
    let d = if h.upper.is_finite() { h.upper } else { h.value };
    let mut e = nalgebra::DVector::zeros(a.dim());
    e[0] = 1.0;
    let scale = 1.0 + a.support(&e)?;
    Ok(d <= 1e-6 * scale)
}

fn check_unit_interval(t: f64) -> Result<()> {
    if t.is_finite() && (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "deformation parameter must lie in [0, 1], got {}",
            t
        )))
    }
}

/// `wa·a + wb·b` with exact endpoint handling (zero weights drop the term
/// instead of scaling by zero).
fn mix(a: &Body, wa: f64, b: &Body, wb: f64) -> Result<Body> {
    if wa <= 1e-12 {
        return b.scale(wb);
    }
    if wb <= 1e-12 {
        return a.scale(wa);
    }
    minkowski_sum(&a.scale(wa)?, &b.scale(wb)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{conv_tensor, slice_normalize};
    use crate::linalg::TensorShape;
    use nalgebra::DVector;

    fn shape22() -> TensorShape {
        TensorShape::new(vec![2, 2]).unwrap()
    }

    fn ball(d: usize) -> Body {
        Body::from_shape_matrix(DMatrix::identity(d, d)).unwrap()
    }

    fn cross(d: usize) -> Body {
        let gens = (0..d)
            .map(|k| {
                let mut e = DVector::zeros(d);
                e[k] = 1.0;
                e
            })
            .collect();
        Body::from_generators(gens).unwrap()
    }

    fn cube(d: usize) -> Body {
        let normals = (0..d)
            .map(|k| {
                let mut e = DVector::zeros(d);
                e[k] = 1.0;
                e
            })
            .collect();
        Body::from_normals(normals).unwrap()
    }

    fn close(a: &Body, b: &Body, tol: f64) -> bool {
        nu(a, b).unwrap() <= 1.0 + tol && nu(b, a).unwrap() <= 1.0 + tol
    }

    #[test]
    fn w_deformation_endpoints() {
        let shape = shape22();
        let p = projective_product(&[cross(2), cube(2)], &shape).unwrap();
        let at0 = homotopy_eval(HomotopyKind::W, &p, 0.0).unwrap();
        assert!(hausdorff(&at0, &p).unwrap().value <= 1e-10);
        let at1 = homotopy_eval(HomotopyKind::W, &p, 1.0).unwrap();
        let conv = conv_tensor(&p).unwrap();
        assert!(hausdorff(&at1, &conv).unwrap().value <= 1e-9);
    }

    #[test]
    fn f_deformation_fixes_ball_products() {
        let shape = shape22();
        let p = projective_product(&[ball(2), ball(2)], &shape).unwrap();
        for &t in &[0.0, 0.3, 0.7, 1.0] {
            let q = homotopy_eval(HomotopyKind::F, &p, t).unwrap();
            assert!(
                hausdorff(&q, &p).unwrap().value <= 1e-9,
                "moved at t={}",
                t
            );
        }
    }

    #[test]
    fn f_deformation_starts_at_the_product() {
        let shape = shape22();
        let p = projective_product(&[cube(2), cube(2)], &shape).unwrap();
        let (q, _) = slice_normalize(&p).unwrap();
        let at0 = homotopy_eval(HomotopyKind::F, &q, 0.0).unwrap();
        assert!(close(&at0, &q, 1e-6));
    }

    #[test]
    fn g_deformation_ends_at_ball_product() {
        let shape = shape22();
        let p = projective_product(&[cube(2), cube(2)], &shape).unwrap();
        let (q, _) = slice_normalize(&p).unwrap();
        let at1 = homotopy_eval(HomotopyKind::G, &q, 1.0).unwrap();
        let balls = projective_product(&[ball(2), ball(2)], &shape).unwrap();
        assert!(close(&at1, &balls, 1e-6));
        let at0 = homotopy_eval(HomotopyKind::G, &q, 0.0).unwrap();
        assert!(hausdorff(&at0, &q).unwrap().value <= 1e-9);
    }

    #[test]
    fn g_midpoint_is_the_product_projection() {
        let shape = shape22();
        let b = ball(4).with_shape(shape.clone()).unwrap();
        let mid = homotopy_eval(HomotopyKind::G, &b, 0.5).unwrap();
        let conv = conv_tensor(&b).unwrap();
        assert!(close(&mid, &conv, 1e-6));
    }

    #[test]
    fn parameter_out_of_range_is_refused() {
        let shape = shape22();
        let b = ball(4).with_shape(shape).unwrap();
        assert!(homotopy_eval(HomotopyKind::W, &b, 1.5).is_err());
        assert!(homotopy_eval(HomotopyKind::W, &b, -0.1).is_err());
        assert!(homotopy_eval(HomotopyKind::W, &b, f64::NAN).is_err());
    }

    #[test]
    fn kind_parses_from_strings() {
        assert_eq!("w".parse::<HomotopyKind>().unwrap(), HomotopyKind::W);
        assert_eq!("F".parse::<HomotopyKind>().unwrap(), HomotopyKind::F);
        assert_eq!(" g ".parse::<HomotopyKind>().unwrap(), HomotopyKind::G);
        assert!("Q".parse::<HomotopyKind>().is_err());
    }

    #[test]
    fn path_hits_both_endpoints_and_the_mixed_product() {
        let shape = shape22();
        let p = projective_product(&[ball(2), ball(2)], &shape).unwrap();
        let r = projective_product(&[cross(2), cross(2)], &shape).unwrap();
        let at0 = polygonal_path(&p, &r, 0.0).unwrap();
        assert!(hausdorff(&at0, &p).unwrap().value <= 1e-9);
        let at1 = polygonal_path(&p, &r, 1.0).unwrap();
        assert!(hausdorff(&at1, &r).unwrap().value <= 1e-9);
        let mid = polygonal_path(&p, &r, 0.5).unwrap();
        let k = projective_product(&[ball(2), cross(2)], &shape).unwrap();
        assert!(close(&mid, &k, 1e-8));
    }

    #[test]
    fn path_points_stay_tensorial() {
        let shape = shape22();
        let p = projective_product(&[ball(2), ball(2)], &shape).unwrap();
        let r = projective_product(&[cross(2), cross(2)], &shape).unwrap();
        for &t in &[0.25, 0.75] {
            let q = polygonal_path(&p, &r, t).unwrap();
            let cert = certify_tensorial(&q, 80).unwrap();
            assert!(
                cert.accepted,
                "t={}: violations {} / {}",
                t, cert.lower_violation, cert.upper_violation
            );
        }
    }

    #[test]
    fn shared_sum_accepts_single_differing_slot() {
        let shape = shape22();
        let p = projective_product(&[ball(2), ball(2)], &shape).unwrap();
        let r = projective_product(&[ball(2), cross(2)], &shape).unwrap();
        let s = shared_factor_sum(&p, &r, 1, 1.0).unwrap();
        let cert = certify_tensorial(&s, 80).unwrap();
        assert!(cert.accepted);
    }

    #[test]
    fn doubling_by_self_sum() {
        let shape = shape22();
        let p = projective_product(&[cross(2), cube(2)], &shape).unwrap();
        let s = shared_factor_sum(&p, &p, 0, 1.0).unwrap();
        let doubled = p.scale(2.0).unwrap();
        assert!(close(&s, &doubled, 1e-9));
    }

    #[test]
    fn shared_sum_refuses_two_differing_slots() {
        let shape = shape22();
        let p = projective_product(&[ball(2), ball(2)], &shape).unwrap();
        let r = projective_product(&[cross(2), cross(2)], &shape).unwrap();
        let err = shared_factor_sum(&p, &r, 1, 1.0).unwrap_err();
        match err {
            Error::Precondition(msg) => assert!(msg.contains("differ"), "msg: {}", msg),
            other => panic!("expected precondition error, got {:?}", other),
        }
    }
}
