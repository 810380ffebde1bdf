//! Containment scaling and Hausdorff distance.
//!
//! `nu(A, B)` is the smallest `t` with `A` inside `t B`, i.e. the maximum of
//! the gauge of `B` over `A`. Vertex scans and spectral forms give exact
//! values for polytopal and ellipsoidal arguments; products walk their
//! decomposable extreme points; remaining composites flip through polarity
//! (`nu(A, B) = nu(B polar, A polar)`) or run multistart ascent.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{kron_vec, spd};
use crate::par;
use crate::sampling;

use super::ops::{linear_image, LinearMap};
use super::{mnp, Body, BodyRep, Ellipsoid};

/// Hausdorff distance estimate with certified enclosure where available:
/// `lower <= delta <= upper`; `value` is the best point estimate. `upper`
/// is infinite when no certificate applies to the pair.
#[derive(Debug, Clone, Copy)]
pub struct Hausdorff {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Smallest scaling of `b` containing `a`.
pub fn nu(a: &Body, b: &Body) -> Result<f64> {
    nu_rec(a, b, 2)
}

fn nu_rec(a: &Body, b: &Body, flips: u8) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    match a.rep() {
        BodyRep::VPoly(v) => {
            let vals = par::map(v.generators(), |g| b.gauge(g));
            let mut best = 0.0f64;
            for r in vals {
                best = best.max(r?);
            }
            Ok(best)
        }
        BodyRep::HPoly(_) => {
            let v = a.as_vpoly()?;
            let vals = par::map(v.generators(), |g| b.gauge(g));
            let mut best = 0.0f64;
            for r in vals {
                best = best.max(r?);
            }
            Ok(best)
        }
        BodyRep::Ellipsoid(e) => {
            if let BodyRep::Ellipsoid(f) = b.rep() {
                let m = e.half_map() * f.shape_matrix() * e.half_map();
                return Ok(spd::sym_lambda_max(&m)?.sqrt());
            }
            ellipsoid_nu(e, b)
        }
        BodyRep::PiProd(fs) => pi_nu(fs, b),
        BodyRep::EpsProd(fs) => {
            if let Some(val) = eps_planar_nu(fs, b)? {
                return Ok(val);
            }
            if flips == 0 {
                return Err(Error::UnsupportedRep(
                    "containment scaling between these composite forms is not supported".into(),
                ));
            }
            nu_rec(&b.polar()?, &a.polar()?, flips - 1)
        }
        BodyRep::Sum(parts) => {
            // Against a body whose polar is product-like, duality turns the
            // expensive side (gauge of `b` at sum extremes) into the cheap
            // side (support of the sum at product extremes).
            let polar_helps = matches!(
                b.rep(),
                BodyRep::EpsProd(_) | BodyRep::Polar(_) | BodyRep::Meet(_) | BodyRep::HPoly(_)
            );
            if polar_helps && flips > 0 {
                return nu_rec(&b.polar()?, &a.polar()?, flips - 1);
            }
            sum_nu(parts, b)
        }
        BodyRep::Hull(parts) => {
            let mut best = 0.0f64;
            for p in parts {
                best = best.max(nu_rec(p, b, flips)?);
            }
            Ok(best)
        }
        BodyRep::Meet(_) | BodyRep::Polar(_) => {
            if flips == 0 {
                return Err(Error::UnsupportedRep(
                    "containment scaling between these composite forms is not supported".into(),
                ));
            }
            nu_rec(&b.polar()?, &a.polar()?, flips - 1)
        }
        BodyRep::Mapped { inv, inner, .. } => {
            // sup over T(I) of the gauge of B equals sup over I of the gauge
            // of T^{-1}(B)
            let pulled = linear_image(&LinearMap::Dense(inv.clone()), b)?;
            nu_rec(inner, &pulled, flips)
        }
    }
}

/// Maximum of the gauge of `b` over an ellipsoid: projected subgradient
/// ascent on the sphere through the half-map, multistarted.
fn ellipsoid_nu(e: &Ellipsoid, b: &Body) -> Result<f64> {
    let d = e.dim();
    let f = |y: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
        let x = e.half_map() * y;
        let (g, u) = b.gauge_witness(&x)?;
        Ok((g, e.half_map() * u))
    };
    let mut best = 0.0f64;
    for dir in sampling::sphere_directions(d, 2 * d + 12, 401) {
        let mut y = dir.clone();
        let (mut val, mut grad) = f(&y)?;
        let mut step = 0.5;
        for _ in 0..150 {
            let tangent = &grad - &y * grad.dot(&y);
            if tangent.norm() <= 1e-13 * (1.0 + grad.norm()) {
                break;
            }
            let cand = (&y + &tangent * step).normalize();
            let (cv, cg) = f(&cand)?;
            if cv > val {
                y = cand;
                val = cv;
                grad = cg;
            } else {
                step *= 0.5;
                if step < 1e-10 {
                    break;
                }
            }
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Maximum of the gauge of `b` over the decomposable extreme points of a
/// projective product. When `b` is itself a product over the same factor
/// dimensions the value factorizes exactly (both product gauges multiply on
/// decomposables). Planar factor pairs get a dense torus sweep; general
/// products run alternating maximisation over factor extremes.
fn pi_nu(fs: &[Body], b: &Body) -> Result<f64> {
    let dims: Vec<usize> = fs.iter().map(|f| f.dim()).collect();
    let other = match b.rep() {
        BodyRep::PiProd(gs) | BodyRep::EpsProd(gs) => Some(gs),
        _ => None,
    };
    if let Some(gs) = other {
        if gs.len() == fs.len() && gs.iter().zip(&dims).all(|(g, &d)| g.dim() == d) {
            let mut prod = 1.0;
            for (f, g) in fs.iter().zip(gs) {
                prod *= nu(f, g)?;
            }
            return Ok(prod);
        }
    }
    if dims == [2, 2] {
        return planar_pair_nu(fs, b);
    }
    alternating_nu(fs, &dims, b)
}

fn planar_pair_nu(fs: &[Body], b: &Body) -> Result<f64> {
    // x (-y) = -(x y) and the gauge is even, so half-circle sweeps on both
    // slots cover every decomposable direction.
    let n0 = 32;
    let n1 = 32;
    let w0: Vec<DVector<f64>> = (0..n0)
        .map(|k| {
            let t = std::f64::consts::PI * (k as f64 + 0.5) / n0 as f64;
            DVector::from_column_slice(&[t.cos(), t.sin()])
        })
        .collect();
    let w1: Vec<DVector<f64>> = (0..n1)
        .map(|k| {
            let t = std::f64::consts::PI * (k as f64 + 0.5) / n1 as f64;
            DVector::from_column_slice(&[t.cos(), t.sin()])
        })
        .collect();
    let x0: Vec<DVector<f64>> = w0
        .iter()
        .map(|w| fs[0].support_witness(w).map(|(_, x)| x))
        .collect::<Result<_>>()?;
    let x1: Vec<DVector<f64>> = w1
        .iter()
        .map(|w| fs[1].support_witness(w).map(|(_, x)| x))
        .collect::<Result<_>>()?;
    let idx: Vec<usize> = (0..n0 * n1).collect();
    let vals = par::map(&idx, |&k| {
        let z = kron_vec(&[x0[k / n1].clone(), x1[k % n1].clone()]);
        b.gauge(&z)
    });
    let mut order: Vec<usize> = (0..vals.len()).collect();
    let mut flat: Vec<f64> = Vec::with_capacity(vals.len());
    for v in vals {
        flat.push(v?);
    }
    order.sort_by(|p, q| flat[*q].partial_cmp(&flat[*p]).unwrap());
    let mut best = 0.0f64;
    for &k in order.iter().take(8) {
        let pts = vec![x0[k / n1].clone(), x1[k % n1].clone()];
        let val = refine_alternating(fs, &[2, 2], b, pts)?;
        best = best.max(val);
    }
    Ok(best.max(flat[order[0]]))
}

fn alternating_nu(fs: &[Body], dims: &[usize], b: &Body) -> Result<f64> {
    use rand::SeedableRng;
    let l = fs.len();
    let mut starts: Vec<Vec<DVector<f64>>> = Vec::new();
    for axis in 0..dims.iter().copied().max().unwrap_or(1) {
        let mut pts = Vec::with_capacity(l);
        for (j, f) in fs.iter().enumerate() {
            let mut dir = DVector::zeros(dims[j]);
            dir[axis.min(dims[j] - 1)] = 1.0;
            pts.push(f.support_witness(&dir)?.1);
        }
        starts.push(pts);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(907);
    for _ in 0..10 {
        let mut pts = Vec::with_capacity(l);
        for (j, f) in fs.iter().enumerate() {
            pts.push(f.support_witness(&sampling::gaussian_dir(dims[j], &mut rng))?.1);
        }
        starts.push(pts);
    }
    let mut best = 0.0f64;
    for pts in starts {
        best = best.max(refine_alternating(fs, dims, b, pts)?);
    }
    Ok(best)
}

/// Alternating sweep: each slot maximises the (convex in that slot) gauge of
/// `b` over its factor's extreme points, holding the others fixed.
fn refine_alternating(
    fs: &[Body],
    dims: &[usize],
    b: &Body,
    mut pts: Vec<DVector<f64>>,
) -> Result<f64> {
    let l = fs.len();
    let mut val = b.gauge(&kron_vec(&pts))?;
    // Conditional-gradient ascent: linearize the (convex) gauge at the
    // current decomposable and jump each slot to the support witness of the
    // pulled-back subgradient, accepting only improvements.
    for _sweep in 0..30 {
        let before = val;
        for slot in 0..l {
            let (_, u) = b.gauge_witness(&kron_vec(&pts))?;
            let mut grad = DVector::zeros(dims[slot]);
            for k in 0..dims[slot] {
                let mut probe = pts.clone();
                let mut ek = DVector::zeros(dims[slot]);
                ek[k] = 1.0;
                probe[slot] = ek;
                grad[k] = u.dot(&kron_vec(&probe));
            }
            if grad.norm() <= 1e-300 {
                continue;
            }
            let (_, cand) = fs[slot].support_witness(&grad)?;
            let mut trial = pts.clone();
            trial[slot] = cand;
            let v = b.gauge(&kron_vec(&trial))?;
            if v > val {
                val = v;
                pts = trial;
            }
        }
        if val <= before * (1.0 + 1e-11) {
            break;
        }
    }
    Ok(val)
}

/// Sum case: alternating over the summands, each maximising the gauge of
/// `b` at its own extreme point against the fixed offset of the others.
fn sum_nu(parts: &[Body], b: &Body) -> Result<f64> {
    use rand::SeedableRng;
    let d = b.dim();
    let mut starts: Vec<DVector<f64>> = Vec::new();
    starts.extend(sampling::sphere_directions(d, d + 6, 733));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7331);
    for _ in 0..4 {
        starts.push(sampling::gaussian_dir(d, &mut rng));
    }
    let mut best = 0.0f64;
    for dir in starts {
        let mut zs: Vec<DVector<f64>> = parts
            .iter()
            .map(|p| p.support_witness(&dir).map(|(_, x)| x))
            .collect::<Result<_>>()?;
        let mut val = b.gauge(&zs.iter().fold(DVector::zeros(d), |acc, z| acc + z))?;
        // Conditional-gradient ascent, one summand at a time.
        for _sweep in 0..20 {
            let before = val;
            for j in 0..parts.len() {
                let mut offset = DVector::zeros(d);
                for (k, z) in zs.iter().enumerate() {
                    if k != j {
                        offset += z;
                    }
                }
                let (_, u) = b.gauge_witness(&(&offset + &zs[j]))?;
                let (_, cand) = parts[j].support_witness(&u)?;
                let v = b.gauge(&(&offset + &cand))?;
                if v > val {
                    val = v;
                    zs[j] = cand;
                }
            }
            if val <= before * (1.0 + 1e-11) {
                break;
            }
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Injective product of two planar ellipsoidal factors: the extreme points
/// are images of orthogonal matrices, swept as two angle branches
/// (rotations and reflections).
fn eps_planar_nu(fs: &[Body], b: &Body) -> Result<Option<f64>> {
    if fs.len() != 2 {
        return Ok(None);
    }
    let (e1, e2) = match (fs[0].rep(), fs[1].rep()) {
        (BodyRep::Ellipsoid(a), BodyRep::Ellipsoid(c)) if a.dim() == 2 && c.dim() == 2 => (a, c),
        _ => return Ok(None),
    };
    if let BodyRep::PiProd(gs) = b.rep() {
        // Against a planar ellipsoid pi-product the maximum is closed-form.
        // Extreme points of the injective product are A1 U A2 with U
        // orthogonal; in the frame where the target factors are balls the
        // gauge is the nuclear norm of K(U) = M1 U M2^T, and for 2x2 blocks
        // ||K||_nuc^2 = ||K||_F^2 + 2|det K|. The determinant term is
        // constant over O(2) and the Frobenius term is a single 2-theta
        // harmonic, so the maximum is trace(S)trace(W)/2 + 2|dev S||dev W|
        // plus the determinant term, with S = M1^T M1 and W = M2^T M2.
        if let [g1, g2] = &gs[..] {
            if let (BodyRep::Ellipsoid(f1), BodyRep::Ellipsoid(f2)) = (g1.rep(), g2.rep()) {
                if f1.dim() == 2 && f2.dim() == 2 {
                    let m1 = f1.half_map_inv() * e1.half_map();
                    let m2 = f2.half_map_inv() * e2.half_map();
                    let s = m1.transpose() * &m1;
                    let w = m2.transpose() * &m2;
                    let dev_s = (0.25 * (s[(0, 0)] - s[(1, 1)]).powi(2) + s[(0, 1)].powi(2)).sqrt();
                    let dev_w = (0.25 * (w[(0, 0)] - w[(1, 1)]).powi(2) + w[(0, 1)].powi(2)).sqrt();
                    let fro = 0.5 * s.trace() * w.trace() + 2.0 * dev_s * dev_w;
                    let det = (m1.determinant() * m2.determinant()).abs();
                    return Ok(Some((fro + 2.0 * det).sqrt()));
                }
            }
        }
    }
    let eval = |theta: f64, reflect: bool| -> Result<f64> {
        let (c, s) = (theta.cos(), theta.sin());
        let q = if reflect {
            nalgebra::DMatrix::from_row_slice(2, 2, &[c, s, s, -c])
        } else {
            nalgebra::DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        };
        let m = e1.half_map() * q * e2.half_map();
        let z = DVector::from_column_slice(&[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
        b.gauge(&z)
    };
    let n = 720;
    let mut best = 0.0f64;
    for reflect in [false, true] {
        let vals: Vec<f64> = (0..n)
            .map(|k| eval(2.0 * std::f64::consts::PI * k as f64 / n as f64, reflect))
            .collect::<Result<_>>()?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|p, q| vals[*q].partial_cmp(&vals[*p]).unwrap());
        for &k in order.iter().take(3) {
            let h = 2.0 * std::f64::consts::PI / n as f64;
            let center = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let (mut a, mut bb) = (center - h, center + h);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            let mut t1 = bb - phi * (bb - a);
            let mut t2 = a + phi * (bb - a);
            let mut f1 = eval(t1, reflect)?;
            let mut f2 = eval(t2, reflect)?;
            for _ in 0..70 {
                if f1 < f2 {
                    a = t1;
                    t1 = t2;
                    f1 = f2;
                    t2 = a + phi * (bb - a);
                    f2 = eval(t2, reflect)?;
                } else {
                    bb = t2;
                    t2 = t1;
                    f2 = f1;
                    t1 = bb - phi * (bb - a);
                    f1 = eval(t1, reflect)?;
                }
            }
            best = best.max(eval(0.5 * (a + bb), reflect)?);
        }
        best = best.max(vals[order[0]]);
    }
    Ok(Some(best))
}

/// Maximises a convex objective (value plus subgradient) over the extreme
/// points of a body. Exact scans for polytopes and planar bodies; ascent
/// with multistart otherwise.
pub(crate) fn extreme_max<F>(body: &Body, f: &F) -> Result<(f64, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> Result<(f64, DVector<f64>)>,
{
    match body.rep() {
        BodyRep::VPoly(v) => {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for g in v.generators() {
                for s in [1.0, -1.0] {
                    let x = g * s;
                    let (val, _) = f(&x)?;
                    if best.as_ref().map_or(true, |(b, _)| val > *b) {
                        best = Some((val, x));
                    }
                }
            }
            Ok(best.expect("polytope without generators"))
        }
        _ if body.dim() == 2 => {
            let n = 256;
            let mut best: Option<(f64, DVector<f64>)> = None;
            for k in 0..n {
                let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                let w = DVector::from_column_slice(&[t.cos(), t.sin()]);
                let (_, x) = body.support_witness(&w)?;
                let (val, _) = f(&x)?;
                if best.as_ref().map_or(true, |(b, _)| val > *b) {
                    best = Some((val, x));
                }
            }
            // one ascent pass from the best grid point
            let (mut val, mut x) = best.expect("nonempty grid");
            for _ in 0..40 {
                let (_, grad) = f(&x)?;
                let (_, cand) = body.support_witness(&grad)?;
                let (cv, _) = f(&cand)?;
                if cv > val * (1.0 + 1e-14) {
                    val = cv;
                    x = cand;
                } else {
                    break;
                }
            }
            Ok((val, x))
        }
        BodyRep::Ellipsoid(e) => {
            let d = e.dim();
            let mut best: Option<(f64, DVector<f64>)> = None;
            for dir in sampling::sphere_directions(d, 2 * d + 8, 577) {
                let mut y = dir.clone();
                let mut x = e.half_map() * &y;
                let (mut val, mut u) = f(&x)?;
                let mut step = 0.5;
                for _ in 0..120 {
                    let grad = e.half_map() * &u;
                    let tangent = &grad - &y * grad.dot(&y);
                    if tangent.norm() <= 1e-13 * (1.0 + grad.norm()) {
                        break;
                    }
                    let cand = (&y + &tangent * step).normalize();
                    let cx = e.half_map() * &cand;
                    let (cv, cu) = f(&cx)?;
                    if cv > val {
                        y = cand;
                        x = cx;
                        val = cv;
                        u = cu;
                    } else {
                        step *= 0.5;
                        if step < 1e-10 {
                            break;
                        }
                    }
                }
                if best.as_ref().map_or(true, |(b, _)| val > *b) {
                    best = Some((val, x));
                }
            }
            Ok(best.expect("at least one start"))
        }
        _ => {
            // conditional-gradient steps on the support oracle
            let d = body.dim();
            let mut best: Option<(f64, DVector<f64>)> = None;
            for dir in sampling::sphere_directions(d, 2 * d + 8, 7177) {
                let (_, mut x) = body.support_witness(&dir)?;
                let (mut val, mut u) = f(&x)?;
                for _ in 0..60 {
                    let (_, cand) = body.support_witness(&u)?;
                    let (cv, cu) = f(&cand)?;
                    if cv > val * (1.0 + 1e-14) {
                        val = cv;
                        x = cand;
                        u = cu;
                    } else {
                        break;
                    }
                }
                if best.as_ref().map_or(true, |(b, _)| val > *b) {
                    best = Some((val, x));
                }
            }
            Ok(best.expect("at least one start"))
        }
    }
}

/// Hausdorff distance between two bodies in the same space.
///
/// Polytopal pairs are exact (vertex scans with minimum-norm-point
/// projections). Ellipsoid pairs carry a spectral upper bound. Projective
/// products and sums with matching profiles get telescoped factor bounds.
/// Everything else reports a certified sampled lower bound.
pub fn hausdorff(a: &Body, b: &Body) -> Result<Hausdorff> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if a.is_polytopal() && b.is_polytopal() {
        let va = a.as_vpoly()?;
        let vb = b.as_vpoly()?;
        let one_sided = |verts: &super::VPolytope,
                         other_body: &Body,
                         other_v: &super::VPolytope|
         -> Result<f64> {
            let res = par::map(verts.generators(), |g| -> Result<f64> {
                if other_body.gauge(g)? <= 1.0 {
                    return Ok(0.0);
                }
                Ok(mnp::distance_to_vpolytope(g, other_v)?.0)
            });
            let mut m = 0.0f64;
            for r in res {
                m = m.max(r?);
            }
            Ok(m)
        };
        let d1 = one_sided(&va, b, &vb)?;
        let d2 = one_sided(&vb, a, &va)?;
        let v = d1.max(d2);
        return Ok(Hausdorff {
            value: v,
            lower: v,
            upper: v,
        });
    }
    if let (BodyRep::Ellipsoid(ea), BodyRep::Ellipsoid(eb)) = (a.rep(), b.rep()) {
        let lower = sampled_sup_diff(a, b)?;
        let diff = ea.half_map() - eb.half_map();
        let upper = diff.clone().svd(false, false).singular_values[0];
        return Ok(Hausdorff {
            value: lower,
            lower,
            upper: upper.max(lower),
        });
    }
    if let (BodyRep::PiProd(fa), BodyRep::PiProd(fb)) = (a.rep(), b.rep()) {
        if fa.len() == fb.len()
            && fa.iter().zip(fb).all(|(x, y)| x.dim() == y.dim())
        {
            let lower = sampled_sup_diff(a, b)?;
            let mut upper = 0.0f64;
            for i in 0..fa.len() {
                let fh = hausdorff(&fa[i], &fb[i])?;
                let mut radius_prod = 1.0;
                for j in 0..fa.len() {
                    if j != i {
                        radius_prod *=
                            fa[j].circumradius_bound().max(fb[j].circumradius_bound());
                    }
                }
                upper += fh.upper * radius_prod;
            }
            return Ok(Hausdorff {
                value: lower,
                lower,
                upper: upper.max(lower),
            });
        }
    }
    if let (BodyRep::Sum(pa), BodyRep::Sum(pb)) = (a.rep(), b.rep()) {
        if pa.len() == pb.len() && pa.iter().zip(pb).all(|(x, y)| x.dim() == y.dim()) {
            let lower = sampled_sup_diff(a, b)?;
            let mut upper = 0.0f64;
            for (x, y) in pa.iter().zip(pb) {
                upper += hausdorff(x, y)?.upper;
            }
            return Ok(Hausdorff {
                value: lower,
                lower,
                upper: upper.max(lower),
            });
        }
    }
    if a.dim() == 2 {
        return planar_sup_diff(a, b);
    }
    let lower = sampled_sup_diff(a, b)?;
    Ok(Hausdorff {
        value: lower,
        lower,
        upper: f64::INFINITY,
    })
}

/// Planar pairs reduce to one angle: a dense half-circle scan (the gap is
/// even) plus golden-section polish of the leading brackets pins the
/// supremum to solver precision, and a circumradius Lipschitz bound over the
/// grid spacing certifies the upper estimate.
fn planar_sup_diff(a: &Body, b: &Body) -> Result<Hausdorff> {
    let n = 512usize;
    let h = std::f64::consts::PI / n as f64;
    let gap = |t: f64| -> Result<f64> {
        let u = DVector::from_column_slice(&[t.cos(), t.sin()]);
        Ok((a.support(&u)? - b.support(&u)?).abs())
    };
    let ts: Vec<f64> = (0..n).map(|k| h * k as f64).collect();
    let sweep = par::map(&ts, |&t| gap(t));
    let mut vals = Vec::with_capacity(n);
    for v in sweep {
        vals.push(v?);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|p, q| vals[*q].partial_cmp(&vals[*p]).unwrap());
    let mut best = vals[order[0]];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for &k in order.iter().take(6) {
        let (mut lo, mut hi) = (ts[k] - h, ts[k] + h);
        let mut t1 = hi - phi * (hi - lo);
        let mut t2 = lo + phi * (hi - lo);
        let mut f1 = gap(t1)?;
        let mut f2 = gap(t2)?;
        for _ in 0..80 {
            if f1 < f2 {
                lo = t1;
                t1 = t2;
                f1 = f2;
                t2 = lo + phi * (hi - lo);
                f2 = gap(t2)?;
            } else {
                hi = t2;
                t2 = t1;
                f2 = f1;
                t1 = hi - phi * (hi - lo);
                f1 = gap(t1)?;
            }
        }
        best = best.max(gap(0.5 * (lo + hi))?);
    }
    let lip = a.circumradius_bound().max(b.circumradius_bound());
    Ok(Hausdorff {
        value: best,
        lower: best,
        upper: best + lip * h,
    })
}

/// Certified-from-below sup of `|h_a - h_b|` over the sphere: deterministic
/// direction sweep, then local pattern-search polish of the leaders.
fn sampled_sup_diff(a: &Body, b: &Body) -> Result<f64> {
    let d = a.dim();
    let n = if d <= 3 {
        1024
    } else if d <= 6 {
        2048
    } else {
        3072
    };
    let dirs = sampling::sphere_directions(d, n, 7177);
    let vals = par::map(&dirs, |u| -> Result<f64> {
        Ok((a.support(u)? - b.support(u)?).abs())
    });
    let mut flat = Vec::with_capacity(vals.len());
    for v in vals {
        flat.push(v?);
    }
    let mut order: Vec<usize> = (0..flat.len()).collect();
    order.sort_by(|p, q| flat[*q].partial_cmp(&flat[*p]).unwrap());
    let mut best = flat[order[0]];
    let f = |u: &DVector<f64>| -> f64 {
        match (a.support(u), b.support(u)) {
            (Ok(x), Ok(y)) => (x - y).abs(),
            _ => f64::NEG_INFINITY,
        }
    };
    for &k in order.iter().take(6) {
        let (v, _) = sampling::sphere_polish(&f, &dirs[k], 250);
        best = best.max(v);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::LpKind;
    use approx::assert_relative_eq;

    #[test]
    fn nu_between_cross_and_cube() {
        let b1 = Body::lp_ball(LpKind::One, 3).unwrap();
        let binf = Body::lp_ball(LpKind::Inf, 3).unwrap();
        // B1 touches the cube from inside; the cube needs 3 copies of B1
        assert_relative_eq!(nu(&b1, &binf).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(nu(&binf, &b1).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn nu_between_ellipsoids_is_spectral() {
        let e = Body::from_shape_matrix(nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[0.25, 0.0, 0.0, 1.0],
        ))
        .unwrap(); // semi-axes (2, 1)
        let ball = Body::ball(2);
        assert_relative_eq!(nu(&e, &ball).unwrap(), 2.0, epsilon = 1e-10);
        assert_relative_eq!(nu(&ball, &e).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn nu_of_ellipsoid_in_polytope() {
        let ball = Body::ball(2);
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        // unit disc needs sqrt(2) cross-polytopes
        let v = nu(&ball, &b1).unwrap();
        assert_relative_eq!(v, 2f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn nu_round_products_pi_inside_eps() {
        let pi = Body::fresh(
            BodyRep::PiProd(vec![Body::ball(2), Body::ball(2)]),
            None,
        );
        let eps = Body::fresh(
            BodyRep::EpsProd(vec![Body::ball(2), Body::ball(2)]),
            None,
        );
        assert_relative_eq!(nu(&pi, &eps).unwrap(), 1.0, epsilon = 1e-9);
        // the rotation direction needs the full trace-norm factor 2
        assert_relative_eq!(nu(&eps, &pi).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn hausdorff_disc_vs_square_in_plane() {
        let ball = Body::ball(2);
        let binf = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let h = hausdorff(&ball, &binf).unwrap();
        assert_relative_eq!(h.value, 2f64.sqrt() - 1.0, epsilon = 1e-6);
    }

    #[test]
    fn hausdorff_polytope_pair_exact() {
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let binf = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let h = hausdorff(&b1, &binf).unwrap();
        // corner of the square sticks out by |(1,1)| - |(0.5, 0.5)|
        assert_relative_eq!(h.value, 2f64.sqrt() / 2.0, epsilon = 1e-9);
        assert_eq!(h.lower, h.upper);
    }

    #[test]
    fn hausdorff_ellipsoid_pair_has_tight_bracket() {
        let e1 = Body::ball(3);
        let e2 = Body::ball(3).scale(1.25).unwrap();
        let h = hausdorff(&e1, &e2).unwrap();
        assert!(h.lower <= 0.25 + 1e-9 && 0.25 <= h.upper + 1e-9);
        assert_relative_eq!(h.value, 0.25, epsilon = 1e-6);
        assert!(h.upper - h.lower < 1e-4);
    }

    #[test]
    fn hausdorff_same_product_is_zero() {
        let pi1 = Body::fresh(
            BodyRep::PiProd(vec![Body::ball(2), Body::ball(2)]),
            None,
        );
        let pi2 = Body::fresh(
            BodyRep::PiProd(vec![Body::ball(2), Body::ball(2)]),
            None,
        );
        let h = hausdorff(&pi1, &pi2).unwrap();
        assert!(h.value <= 1e-12);
        assert!(h.upper <= 1e-12);
    }
}
