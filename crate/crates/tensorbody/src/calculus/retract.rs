//! Retractions: projection onto products, the associated ellipsoid, the
//! hull-intersection retraction onto tensorial bodies, slice normalization,
//! and lifting of factor maps.

use nalgebra::DMatrix;

use crate::body::{linear_image, nu, Body, BodyRep, Ellipsoid, LinearMap};
use crate::error::{Error, Result};
use crate::linalg::{kron_mat, FactorMap};
use crate::lowner::lowner;
use crate::products::{injective_product, projective_product};

use super::{certify_tensorial, required_shape, Certificate, CERT_TOL};

/// Probe count for certifications embedded inside other operations.
pub(super) const INNER_PROBES: usize = 48;

/// Max entrywise deviation of a Löwner shape matrix from the identity under
/// which a body still counts as slice-normalized.
pub(super) const POSITION_TOL: f64 = 1e-4;

/// Projection of a tensorial body onto the projective product of its
/// canonical factors. Constant on each sandwich class, hence a retraction:
/// applying it twice gives the same product.
pub fn conv_tensor(p: &Body) -> Result<Body> {
    let shape = required_shape(p)?.clone();
    let cert = certify_tensorial(p, INNER_PROBES)?;
    reject_if_not(&cert, "product projection")?;
    projective_product(&cert.factors, &shape)
}

/// Löwner ellipsoid of the product projection. Factorizes over the slots, so
/// it is the Hilbertian product of the factor Löwner ellipsoids.
pub fn ell_tensor(p: &Body) -> Result<Ellipsoid> {
    Ok(lowner(&conv_tensor(p)?)?.ellipsoid)
}

/// Retraction of an arbitrary shaped body onto the tensorial bodies:
/// `conv(P ∪ ⊗π(factors)) ∩ ⊗ε(factors)`. Tensorial bodies are returned
/// unchanged, so the map is idempotent.
pub fn eta_retract(p: &Body) -> Result<Body> {
    let shape = required_shape(p)?.clone();
    let cert = certify_tensorial(p, INNER_PROBES)?;
    if cert.accepted {
        return Ok(p.clone());
    }
    let pi = projective_product(&cert.factors, &shape)?;
    let eps = injective_product(&cert.factors, &shape)?;
    let hull = Body::fresh(BodyRep::Hull(vec![p.clone(), pi]), Some(shape.clone()));
    Ok(Body::fresh(BodyRep::Meet(vec![hull, eps]), Some(shape)))
}

/// Moves a tensorial body into Löwner position slot by slot: returns
/// `(A⁻¹P, A)` where `A` is the Kronecker product of the factor Löwner axis
/// maps, so the normalized body's product ellipsoid is the unit ball.
pub fn slice_normalize(p: &Body) -> Result<(Body, DMatrix<f64>)> {
    let shape = required_shape(p)?.clone();
    let cert = certify_tensorial(p, INNER_PROBES)?;
    reject_if_not(&cert, "slice normalization")?;
    let mut fwd = Vec::with_capacity(shape.order());
    let mut back = Vec::with_capacity(shape.order());
    for f in &cert.factors {
        let fit = lowner(f)?;
        fwd.push(fit.ellipsoid.half_map().clone());
        back.push(fit.ellipsoid.half_map_inv().clone());
    }
    let a = kron_mat(&fwd);
    let map = FactorMap::from_factors(shape, back)?;
    let q = linear_image(&LinearMap::Factor(map), p)?;
    Ok((q, a))
}

/// A map applied to one Löwner-position factor body.
pub type FactorPipe = dyn Fn(&Body) -> Result<Body> + Send + Sync;

/// Lifts maps on the factor bodies to a map on slice bodies: the factors are
/// put in Löwner position, passed through `factor_maps`, and the body is
/// squeezed between the products of the outputs. Maps must preserve Löwner
/// position; identity maps reproduce the body exactly.
pub fn lift_eval(p: &Body, factor_maps: &[&FactorPipe]) -> Result<Body> {
    let shape = required_shape(p)?.clone();
    if factor_maps.len() != shape.order() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} factor maps, got {}",
            shape.order(),
            factor_maps.len()
        )));
    }
    let cert = certify_tensorial(p, INNER_PROBES)?;
    reject_if_not(&cert, "factor lifting")?;
    ensure_slice_position(&cert.factors)?;
    let mut mapped = Vec::with_capacity(shape.order());
    for (f, fmap) in cert.factors.iter().zip(factor_maps) {
        let fit = lowner(f)?;
        let pos = linear_image(
            &LinearMap::Dense(fit.ellipsoid.half_map_inv().clone()),
            f,
        )?;
        let out = fmap(&pos)?;
        if out.dim() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: out.dim(),
            });
        }
        let dev = identity_deviation(lowner(&out)?.ellipsoid.shape_matrix());
        if dev > POSITION_TOL {
            return Err(Error::Precondition(format!(
                "factor map output leaves Löwner position (deviation {:.2e})",
                dev
            )));
        }
        mapped.push(out);
    }
    let pi = projective_product(&mapped, &shape)?;
    let eps = injective_product(&mapped, &shape)?;
    // When the mapped products still sandwich the body, hull and
    // intersection both act as the identity.
    if nu(&pi, p)? <= 1.0 + CERT_TOL && nu(p, &eps)? <= 1.0 + CERT_TOL {
        return Ok(p.clone());
    }
    let hull = Body::fresh(BodyRep::Hull(vec![p.clone(), pi]), Some(shape.clone()));
    Ok(Body::fresh(BodyRep::Meet(vec![hull, eps]), Some(shape)))
}

pub(super) fn reject_if_not(cert: &Certificate, what: &str) -> Result<()> {
    if cert.accepted {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{} needs a tensorial body: lower violation {:.3e}, upper violation {:.3e}",
            what, cert.lower_violation, cert.upper_violation
        )))
    }
}

/// The product of the factor Löwner ellipsoids must be the unit ball.
pub(super) fn ensure_slice_position(factors: &[Body]) -> Result<()> {
    let mut mats = Vec::with_capacity(factors.len());
    for f in factors {
        mats.push(lowner(f)?.ellipsoid.shape_matrix().clone());
    }
    let dev = identity_deviation(&kron_mat(&mats));
    if dev > POSITION_TOL {
        return Err(Error::Precondition(format!(
            "body is not slice-normalized: product Löwner shape deviates from the identity by {:.2e}",
            dev
        )));
    }
    Ok(())
}

fn identity_deviation(m: &DMatrix<f64>) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((m[(i, j)] - target).abs());
        }
    }
    dev
}
