//! Tensorial calculus: factor extraction, certification, retractions,
//! homotopies, and path constructions on bodies carrying a tensor shape.
//!
//! A body `P` in the tensor dimension is *tensorial* when it is sandwiched
//! between the projective and injective products of some factor tuple,
//! `P1 ⊗π … ⊗π Pl ⊆ P ⊆ P1 ⊗ε … ⊗ε Pl`. The candidate factors are read off
//! `P` itself by restricting it to the decomposable slots: with
//! `E_i(x) = e1 ⊗ … ⊗ x ⊗ … ⊗ e1` and `γ = gauge(P, e1 ⊗ … ⊗ e1)`, the slot
//! factor is `{x : E_i(x)/γ ∈ P}` for `i < l-1` and `{x : E_l(x) ∈ P}` for
//! the last slot. That normalization makes the tuple canonical (the factor
//! scalings multiply to one), so certification and the retractions built on
//! it are deterministic.

mod homotopy;
mod retract;

pub use homotopy::{homotopy_eval, polygonal_path, shared_factor_sum, HomotopyKind};
pub use retract::{
    conv_tensor, ell_tensor, eta_retract, lift_eval, slice_normalize, FactorPipe,
};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::{conv_union, intersect, minkowski_sum, nu, Body, BodyRep, Ellipsoid, HPolytope, VPolytope};
use crate::error::{Error, Result};
use crate::linalg::TensorShape;
use crate::par;
use crate::products::{injective_product, projective_product};
use crate::sampling;

/// Violation tolerance under which a body is accepted as tensorial.
pub const CERT_TOL: f64 = 1e-6;

/// Number of random decomposable probes in a default certification run.
pub const DEFAULT_PROBES: usize = 200;

/// Planar slices sampled from gauge-only bodies use this many boundary points.
const SLICE_ARC_POINTS: usize = 64;
const SLICE_SPHERE_POINTS: usize = 240;

/// Outcome of a tensoriality check: the canonical factor candidates, the
/// decomposable-corner scale, and the measured inclusion violations.
///
/// `lower_violation` bounds how far the projective product of the factors
/// sticks out of the body; `upper_violation` bounds how far the body sticks
/// out of the injective product. Both are zero (up to tolerance) exactly when
/// the body is tensorial with respect to the extracted tuple.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub accepted: bool,
    pub factors: Vec<Body>,
    /// Gauge of the body at `e1 ⊗ … ⊗ e1`.
    pub scale: f64,
    /// Worst observed excess of `gauge(P, ·)` over the factor-product gauge.
    pub lower_violation: f64,
    /// Worst observed deficit of `gauge(P, ·)` below the factor-product gauge.
    pub upper_violation: f64,
    pub probe_count: usize,
}

/// Canonical factor candidates of a shaped body.
///
/// Exact for ellipsoids, polytopes, explicit products, and intersections
/// built from those; Minkowski sums whose summands share all factors but one
/// are combined exactly through multilinearity. Everything else falls back to
/// a sampled boundary approximation of each slot restriction, which is only
/// available for slot dimensions up to 3.
pub fn extract_factors(p: &Body) -> Result<Vec<Body>> {
    let shape = required_shape(p)?.clone();
    if shape.order() == 1 {
        return Ok(vec![p.clone()]);
    }
    let gamma = corner_scale(p)?;
    if let BodyRep::Sum(parts) = p.rep() {
        if parts.len() >= 2 {
            if let Some(factors) = sum_shared_factors(parts, &shape)? {
                return Ok(factors);
            }
        }
    }
    (0..shape.order())
        .map(|i| slice_body(p, &shape, gamma, i))
        .collect()
}

/// Checks the sandwich `⊗π(factors) ⊆ P ⊆ ⊗ε(factors)` for the canonical
/// factors of `P`, combining exact containment scalings with `probes` random
/// decomposable gauge comparisons.
pub fn certify_tensorial(p: &Body, probes: usize) -> Result<Certificate> {
    let shape = required_shape(p)?.clone();
    let factors = extract_factors(p)?;
    let scale = corner_scale(p)?;
    if shape.order() == 1 {
        return Ok(Certificate {
            accepted: true,
            factors,
            scale,
            lower_violation: 0.0,
            upper_violation: 0.0,
            probe_count: 0,
        });
    }
    let pi = projective_product(&factors, &shape)?;
    let eps = injective_product(&factors, &shape)?;
    let mut lower = (nu(&pi, p)? - 1.0).max(0.0);
    let mut upper = (nu(p, &eps)? - 1.0).max(0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(0x7ea5_cafe);
    for _ in 0..probes {
        let xs: Vec<DVector<f64>> = shape
            .dims()
            .iter()
            .map(|&d| sampling::gaussian_dir(d, &mut rng))
            .collect();
        let z = crate::linalg::kron_vec(&xs);
        let gp = p.gauge(&z)?;
        let mut gd = 1.0;
        for (f, x) in factors.iter().zip(&xs) {
            gd *= f.gauge(x)?;
        }
        if !(gp.is_finite() && gd.is_finite() && gp > 0.0 && gd > 0.0) {
            return Err(Error::Numerical(
                "non-finite gauge during certification probe".into(),
            ));
        }
        lower = lower.max(gp / gd - 1.0);
        upper = upper.max(gd / gp - 1.0);
    }
    Ok(Certificate {
        accepted: lower <= CERT_TOL && upper <= CERT_TOL,
        factors,
        scale,
        lower_violation: lower,
        upper_violation: upper,
        probe_count: probes,
    })
}

pub(crate) fn required_shape(p: &Body) -> Result<&TensorShape> {
    p.shape().ok_or_else(|| {
        Error::ShapeMismatch("operation needs a body with a tensor shape tag".into())
    })
}

/// Gauge at the decomposable corner `e1 ⊗ … ⊗ e1` (flat index zero).
pub(crate) fn corner_scale(p: &Body) -> Result<f64> {
    let mut e = DVector::zeros(p.dim());
    e[0] = 1.0;
    let g = p.gauge(&e)?;
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Numerical(format!(
            "degenerate gauge {} at the decomposable corner",
            g
        )));
    }
    Ok(g)
}

/// Slot restriction `{x : E_i(x)/γ ∈ body}` (`γ` dropped on the last slot).
///
/// `gamma` is always the scale of the *outermost* body, so recursive calls on
/// the parts of intersections and hulls restrict against the right set.
fn slice_body(body: &Body, shape: &TensorShape, gamma: f64, slot: usize) -> Result<Body> {
    let divisor = if slot + 1 < shape.order() { gamma } else { 1.0 };
    match body.rep() {
        BodyRep::PiProd(fs) | BodyRep::EpsProd(fs) if factors_fit(fs, shape) => {
            // On a product, the restriction is the slot factor scaled by the
            // gauges of the remaining factors at e1.
            let mut other = 1.0;
            for (j, f) in fs.iter().enumerate() {
                if j != slot {
                    other *= f.gauge(&basis0(f.dim()))?;
                }
            }
            fs[slot].scale(divisor / other)
        }
        BodyRep::Ellipsoid(e) => {
            let j = embed_matrix(shape, slot);
            let m = j.transpose() * e.shape_matrix() * &j;
            let body = Ellipsoid::new(m / (divisor * divisor))?;
            Ok(Body::fresh(BodyRep::Ellipsoid(body), None))
        }
        BodyRep::VPoly(_) | BodyRep::HPoly(_) => {
            let h = body.as_hpoly()?;
            let d = shape.dims()[slot];
            let mut normals = Vec::new();
            for a in h.normals() {
                let mut v = DVector::zeros(d);
                for k in 0..d {
                    v[k] = a[shape.slot_index(slot, k)] / divisor;
                }
                if v.norm() > 1e-12 * (1.0 + a.norm()) {
                    normals.push(v);
                }
            }
            let hp = HPolytope::new(normals)?;
            Ok(Body::fresh(BodyRep::HPoly(hp), None))
        }
        BodyRep::Meet(parts) => {
            let slices: Vec<Body> = parts
                .iter()
                .map(|part| slice_body(part, shape, gamma, slot))
                .collect::<Result<_>>()?;
            fold_pairwise(slices, intersect)
        }
        // Restrictions of hulls are only bounded below by the hull of the
        // part restrictions; inside an intersection whose other parts pin the
        // slot (the η pattern) the bound is tight.
        BodyRep::Hull(parts) => {
            let slices: Vec<Body> = parts
                .iter()
                .map(|part| slice_body(part, shape, gamma, slot))
                .collect::<Result<_>>()?;
            fold_pairwise(slices, conv_union)
        }
        // products whose factor layout disagrees with the requested shape
        // (regrouped slots) carry no usable structure for this slicing
        BodyRep::PiProd(_)
        | BodyRep::EpsProd(_)
        | BodyRep::Mapped { .. }
        | BodyRep::Sum(_)
        | BodyRep::Polar(_) => sampled_slice(body, shape, gamma, slot),
    }
}

fn factors_fit(fs: &[Body], shape: &TensorShape) -> bool {
    fs.len() == shape.order()
        && fs.iter().zip(shape.dims()).all(|(f, &d)| f.dim() == d)
}

fn basis0(d: usize) -> DVector<f64> {
    let mut e = DVector::zeros(d);
    e[0] = 1.0;
    e
}

/// Columns embed the slot basis vectors into the tensor space.
fn embed_matrix(shape: &TensorShape, slot: usize) -> DMatrix<f64> {
    let d = shape.dims()[slot];
    let mut j = DMatrix::zeros(shape.total_dim(), d);
    for k in 0..d {
        j[(shape.slot_index(slot, k), k)] = 1.0;
    }
    j
}

fn fold_pairwise<F>(mut bodies: Vec<Body>, op: F) -> Result<Body>
where
    F: Fn(&Body, &Body) -> Result<Body>,
{
    let mut acc = bodies
        .pop()
        .ok_or_else(|| Error::InvalidBody("empty composite".into()))?;
    while let Some(b) = bodies.pop() {
        acc = op(&acc, &b)?;
    }
    Ok(acc)
}

/// Boundary-sampled inner approximation of a slot restriction, for bodies
/// that only expose a gauge. Limited to slot dimension 3.
fn sampled_slice(body: &Body, shape: &TensorShape, gamma: f64, slot: usize) -> Result<Body> {
    let d = shape.dims()[slot];
    let divisor = if slot + 1 < shape.order() { gamma } else { 1.0 };
    let boundary = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let g = body.gauge(&shape.embed_slot(slot, x))? / divisor;
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Numerical("degenerate slot gauge".into()));
        }
        Ok(x / g)
    };
    let dirs: Vec<DVector<f64>> = match d {
        1 => vec![basis0(1)],
        2 => (0..SLICE_ARC_POINTS)
            .map(|k| {
                let th = std::f64::consts::PI * (k as f64 + 0.5) / SLICE_ARC_POINTS as f64;
                DVector::from_vec(vec![th.cos(), th.sin()])
            })
            .collect(),
        3 => sampling::sphere_directions(3, SLICE_SPHERE_POINTS, 0x51fe),
        _ => {
            return Err(Error::UnsupportedRep(format!(
                "sampled slot restriction needs slot dimension <= 3, got {}",
                d
            )))
        }
    };
    let gens = par::map(&dirs, |x| boundary(x))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(Body::fresh(BodyRep::VPoly(VPolytope::new(gens)?), None))
}

/// Minkowski sums of bodies sharing all factors except one slot are tensorial
/// with the sum taken in that slot. Detects the pattern by extracting each
/// summand's canonical factors and comparing slots; returns `None` when the
/// summands differ in two or more slots.
fn sum_shared_factors(parts: &[Body], shape: &TensorShape) -> Result<Option<Vec<Body>>> {
    let mut tuples = Vec::with_capacity(parts.len());
    for part in parts {
        let shaped = part.clone().with_shape(shape.clone())?;
        match extract_factors(&shaped) {
            Ok(t) => tuples.push(t),
            Err(_) => return Ok(None),
        }
    }
    let l = shape.order();
    // Find the single slot in which summands may differ.
    let mut diff_slot: Option<usize> = None;
    for i in 0..l {
        let agree = tuples[1..]
            .iter()
            .all(|t| bodies_match(&tuples[0][i], &t[i]).unwrap_or(false));
        if !agree {
            if diff_slot.is_some() {
                return Ok(None);
            }
            diff_slot = Some(i);
        }
    }
    let j = diff_slot.unwrap_or(l - 1);
    // Each summand's tuple is rescaled so the shared slots coincide with the
    // first summand's factors exactly; the compensating scalar lands on slot
    // j, and multilinearity sums that slot.
    let mut slot_sum: Option<Body> = None;
    for tuple in &tuples {
        let mut mu = 1.0;
        for i in 0..l {
            if i != j {
                mu *= scale_ratio(&tuples[0][i], &tuple[i])?;
            }
        }
        let piece = tuple[j].scale(1.0 / mu)?;
        slot_sum = Some(match slot_sum {
            None => piece,
            Some(acc) => minkowski_sum(&acc, &piece)?,
        });
    }
    let mut tuple: Vec<Body> = tuples[0].clone();
    tuple[j] = slot_sum.expect("at least one summand");
    // Recanonicalize so the factor scalings multiply to one again.
    let mut prod = 1.0;
    let mut out = Vec::with_capacity(l);
    for (i, f) in tuple.iter().enumerate() {
        if i + 1 < l {
            let g = f.gauge(&basis0(f.dim()))?;
            prod *= g;
            out.push(f.scale(g)?);
        } else {
            out.push(f.scale(1.0 / prod)?);
        }
    }
    Ok(Some(out))
}

/// True when `b = c·a` for some scalar `c` (gauge-ratio test on probe
/// directions), i.e. the bodies agree up to the canonical scaling already
/// applied by extraction — which pins `c = 1`.
fn bodies_match(a: &Body, b: &Body) -> Result<bool> {
    let c = scale_ratio(a, b)?;
    Ok((c - 1.0).abs() <= 1e-7)
}

/// Estimates the scalar `c` with `b ≈ a.scale(c)`; errors when the gauge
/// ratios spread too much for any scalar to fit.
fn scale_ratio(a: &Body, b: &Body) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut dirs: Vec<DVector<f64>> = (0..a.dim()).map(|k| basis_vec(a.dim(), k)).collect();
    dirs.extend(sampling::sphere_directions(a.dim(), 6, 0xad0b));
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in &dirs {
        let ga = a.gauge(x)?;
        let gb = b.gauge(x)?;
        if !(ga.is_finite() && gb.is_finite() && ga > 0.0 && gb > 0.0) {
            return Err(Error::Numerical("degenerate gauge in ratio probe".into()));
        }
        let r = ga / gb;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if hi - lo > 1e-7 * (1.0 + hi) {
        return Err(Error::Precondition(format!(
            "bodies are not proportional: gauge ratio spreads over [{:.6}, {:.6}]",
            lo, hi
        )));
    }
    Ok(0.5 * (lo + hi))
}

fn basis_vec(d: usize, k: usize) -> DVector<f64> {
    let mut e = DVector::zeros(d);
    e[k] = 1.0;
    e
}
