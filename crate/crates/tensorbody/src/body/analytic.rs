//! Gauge and support evaluation across all representations.
//!
//! Concrete bodies answer directly (LP, max-form, quadratic form). Composite
//! bodies expose exact support oracles through structural recursion; their
//! gauges run a cutting-plane scheme whose master problem is the gauge LP of
//! accumulated boundary points, warm-started from a per-body cut pool. Every
//! returned value comes with a witness: a subgradient in the polar body for
//! gauges, an attaining point of the body for supports.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{kron_vec, TensorShape};
use crate::sampling;
use crate::simplex;

use super::{Body, BodyRep, Ellipsoid};

/// Relative duality-gap target for cutting-plane evaluations.
const GAP_TOL: f64 = 1e-10;
/// Oracle repeating a known cut means the master cannot improve further; a
/// gap this small is then accepted as converged.
const STALL_TOL: f64 = 1e-7;
const MAX_CUTS: usize = 400;
const POOL_CAP: usize = 384;
const THETA_GRID: usize = 128;

pub(super) fn gauge_witness(body: &Body, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    if x.len() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: x.len(),
        });
    }
    match body.rep() {
        BodyRep::VPoly(v) => v.gauge_witness(x),
        BodyRep::HPoly(h) => Ok(h.gauge_witness(x)),
        BodyRep::Ellipsoid(e) => Ok(e.gauge_witness(x)),
        BodyRep::PiProd(fs) => {
            if let Some((e1, e2)) = ellipsoid_pair(fs) {
                return pi_ee_gauge(e1, e2, x);
            }
            kelley_gauge(body, x)
        }
        BodyRep::EpsProd(fs) => {
            let pi = body.dual_prod(|| {
                Ok(Body::fresh(BodyRep::PiProd(polar_factors(fs)?), None))
            })?;
            support_witness(&pi, x)
        }
        BodyRep::Sum(_) | BodyRep::Hull(_) => kelley_gauge(body, x),
        BodyRep::Meet(parts) => {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for p in parts {
                let (g, u) = gauge_witness(p, x)?;
                if best.as_ref().map_or(true, |(b, _)| g > *b) {
                    best = Some((g, u));
                }
            }
            Ok(best.expect("intersection of no parts"))
        }
        BodyRep::Polar(inner) => support_witness(inner, x),
        BodyRep::Mapped { inv, inner, .. } => {
            let (g, u) = gauge_witness(inner, &(inv * x))?;
            Ok((g, inv.transpose() * u))
        }
    }
}

pub(super) fn support_witness(body: &Body, u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    if u.len() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: u.len(),
        });
    }
    match body.rep() {
        BodyRep::VPoly(v) => Ok(v.support_witness(u)),
        BodyRep::HPoly(h) => h.support_witness(u),
        BodyRep::Ellipsoid(e) => Ok(e.support_witness(u)),
        BodyRep::PiProd(fs) => pi_support(fs, u),
        BodyRep::EpsProd(fs) => {
            let pi = body.dual_prod(|| {
                Ok(Body::fresh(BodyRep::PiProd(polar_factors(fs)?), None))
            })?;
            gauge_witness(&pi, u)
        }
        BodyRep::Sum(parts) => {
            let mut h = 0.0;
            let mut x = DVector::zeros(u.len());
            for p in parts {
                let (hp, xp) = support_witness(p, u)?;
                h += hp;
                x += xp;
            }
            Ok((h, x))
        }
        BodyRep::Hull(parts) => {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for p in parts {
                let (h, x) = support_witness(p, u)?;
                if best.as_ref().map_or(true, |(b, _)| h > *b) {
                    best = Some((h, x));
                }
            }
            Ok(best.expect("hull of no parts"))
        }
        BodyRep::Meet(parts) => meet_support(body, parts, u),
        BodyRep::Polar(inner) => gauge_witness(inner, u),
        BodyRep::Mapped { mat, inner, .. } => {
            let (h, x) = support_witness(inner, &(mat.transpose() * u))?;
            Ok((h, mat * x))
        }
    }
}

fn polar_factors(fs: &[Body]) -> Result<Vec<Body>> {
    fs.iter().map(|f| f.polar()).collect()
}

fn ellipsoid_pair(fs: &[Body]) -> Option<(&Ellipsoid, &Ellipsoid)> {
    if fs.len() != 2 {
        return None;
    }
    match (fs[0].rep(), fs[1].rep()) {
        (BodyRep::Ellipsoid(a), BodyRep::Ellipsoid(b)) => Some((a, b)),
        _ => None,
    }
}

fn mat_of(x: &DVector<f64>, d0: usize, d1: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d0, d1, |i, j| x[i * d1 + j])
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    let (d0, d1) = m.shape();
    DVector::from_fn(d0 * d1, |k, _| m[(k / d1, k % d1)])
}

/// Gauge of the projective product of two ellipsoids: the trace norm of the
/// matricisation pulled back through the factor half-maps. The dual witness
/// is built from the full singular decomposition.
fn pi_ee_gauge(e1: &Ellipsoid, e2: &Ellipsoid, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let (d0, d1) = (e1.dim(), e2.dim());
    let xm = mat_of(x, d0, d1);
    let a = e1.half_map_inv() * xm * e2.half_map_inv();
    let svd = a.svd(true, true);
    let g: f64 = svd.singular_values.iter().sum();
    if g <= 1e-300 {
        return Ok((0.0, DVector::zeros(d0 * d1)));
    }
    let u = svd.u.as_ref().expect("svd vectors requested");
    let vt = svd.v_t.as_ref().expect("svd vectors requested");
    let dual = e1.half_map_inv() * (u * vt) * e2.half_map_inv();
    Ok((g, vec_of(&dual)))
}

/// Support of the projective product of two ellipsoids: the spectral norm of
/// the matricisation pushed through the half-maps; the top singular pair
/// yields the attaining decomposable point.
fn pi_ee_support(e1: &Ellipsoid, e2: &Ellipsoid, u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let (d0, d1) = (e1.dim(), e2.dim());
    let um = mat_of(u, d0, d1);
    let a = e1.half_map() * um * e2.half_map();
    let svd = a.svd(true, true);
    let s1 = svd.singular_values[0];
    if s1 <= 1e-300 {
        return Ok((0.0, DVector::zeros(d0 * d1)));
    }
    let uu = svd.u.as_ref().expect("svd vectors requested");
    let vt = svd.v_t.as_ref().expect("svd vectors requested");
    let x1 = e1.half_map() * uu.column(0);
    let x2 = e2.half_map() * vt.row(0).transpose();
    Ok((s1, kron_vec(&[x1, x2])))
}

/// Direction seen by factor `slot` when every other factor is pinned:
/// contracts `u` against the fixed points in all remaining slots.
fn contract_except(
    u: &DVector<f64>,
    dims: &[usize],
    slot: usize,
    points: &[DVector<f64>],
) -> DVector<f64> {
    let shape = TensorShape::new(dims.to_vec()).expect("valid dims");
    let mut v = DVector::zeros(dims[slot]);
    for flat in 0..u.len() {
        let idx = shape.unflatten(flat);
        let mut prod = u[flat];
        for (j, &k) in idx.iter().enumerate() {
            if j != slot {
                prod *= points[j][k];
            }
        }
        v[idx[slot]] += prod;
    }
    v
}

/// Exact support of a projective product. Chooses, in order: the
/// two-ellipsoid spectral form, generator scans over V-polytope factors
/// (with recursive contraction for three factors), a one-dimensional sweep
/// when a two-dimensional slot is available, and alternating ascent as a
/// last resort.
fn pi_support(fs: &[Body], u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    if fs.len() == 1 {
        return support_witness(&fs[0], u);
    }
    let dims: Vec<usize> = fs.iter().map(|f| f.dim()).collect();
    if let Some((e1, e2)) = ellipsoid_pair(fs) {
        return pi_ee_support(e1, e2, u);
    }
    // scan the vertices of a polytopal factor, preferring the smallest set;
    // low-dimensional H-reps convert through the cached V-form
    let mut vslot: Option<(usize, Vec<DVector<f64>>)> = None;
    for (i, f) in fs.iter().enumerate() {
        let vertex_form = matches!(f.rep(), BodyRep::VPoly(_))
            || (f.is_polytopal() && f.dim() <= 4);
        if !vertex_form {
            continue;
        }
        let gens = f.as_vpoly()?.generators().to_vec();
        if vslot.as_ref().map_or(true, |(_, g)| gens.len() < g.len()) {
            vslot = Some((i, gens));
        }
    }
    if let Some((slot, gens)) = vslot {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for g in &gens {
            let (val, w) = pinned_support(fs, &dims, slot, g, u)?;
            if best.as_ref().map_or(true, |(b, _)| val > *b) {
                best = Some((val, w));
            }
        }
        return best.ok_or_else(|| Error::InvalidBody("factor without generators".into()));
    }
    if fs.len() == 2 {
        if let Some(slot) = dims.iter().position(|&d| d == 2) {
            return theta_sweep_support(fs, &dims, slot, u);
        }
    }
    alternating_support(fs, &dims, u)
}

/// Support when factor `slot` is pinned to the boundary point `g`: contracts
/// `u` and recurses on the remaining factors, then reassembles the witness.
fn pinned_support(
    fs: &[Body],
    dims: &[usize],
    slot: usize,
    g: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let shape = TensorShape::new(dims.to_vec()).expect("valid dims");
    let rest_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != slot)
        .map(|(_, &d)| d)
        .collect();
    let rest_shape = TensorShape::new(rest_dims.clone()).expect("valid dims");
    let mut contracted = DVector::zeros(rest_shape.total_dim());
    for flat in 0..u.len() {
        let idx = shape.unflatten(flat);
        let rest_idx: Vec<usize> = idx
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != slot)
            .map(|(_, &k)| k)
            .collect();
        contracted[rest_shape.flatten(&rest_idx)] += u[flat] * g[idx[slot]];
    }
    let rest: Vec<Body> = fs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != slot)
        .map(|(_, f)| f.clone())
        .collect();
    let (val, xr) = pi_support(&rest, &contracted)?;
    // witness: reinsert g at its slot
    let mut w = DVector::zeros(u.len());
    for flat in 0..u.len() {
        let idx = shape.unflatten(flat);
        let rest_idx: Vec<usize> = idx
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != slot)
            .map(|(_, &k)| k)
            .collect();
        w[flat] = g[idx[slot]] * xr[rest_shape.flatten(&rest_idx)];
    }
    Ok((val, w))
}

/// One-dimensional sweep over the boundary of a planar factor: every extreme
/// point of a two-dimensional body is the support witness of some angle, so
/// a dense sweep plus golden-section refinement is exact up to 1D-search
/// resolution. Requires exact support on the other factor.
fn theta_sweep_support(
    fs: &[Body],
    dims: &[usize],
    slot: usize,
    u: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    let other = 1 - slot;
    let eval = |theta: f64| -> Result<(f64, DVector<f64>, DVector<f64>)> {
        let w = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
        let (_, xs) = support_witness(&fs[slot], &w)?;
        let dir = contract_pair(u, dims, slot, &xs);
        let (val, xo) = support_witness(&fs[other], &dir)?;
        Ok((val, xs, xo))
    };
    let mut vals = Vec::with_capacity(THETA_GRID);
    for k in 0..THETA_GRID {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / THETA_GRID as f64;
        vals.push((theta, eval(theta)?.0));
    }
    // refine the best few separated brackets
    let mut order: Vec<usize> = (0..THETA_GRID).collect();
    order.sort_by(|a, b| vals[*b].1.partial_cmp(&vals[*a].1).unwrap());
    let mut picked: Vec<usize> = Vec::new();
    for &k in &order {
        if picked.iter().all(|&p: &usize| {
            let diff = (p as isize - k as isize).unsigned_abs();
            diff > 2 && diff < THETA_GRID - 2
        }) {
            picked.push(k);
        }
        if picked.len() == 4 {
            break;
        }
    }
    let h = std::f64::consts::PI / THETA_GRID as f64;
    let mut best_theta = vals[order[0]].0;
    let mut best_val = f64::NEG_INFINITY;
    for &k in &picked {
        let (mut a, mut b) = (vals[k].0 - h, vals[k].0 + h);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut t1 = b - phi * (b - a);
        let mut t2 = a + phi * (b - a);
        let mut f1 = eval(t1)?.0;
        let mut f2 = eval(t2)?.0;
        for _ in 0..70 {
            if f1 < f2 {
                a = t1;
                t1 = t2;
                f1 = f2;
                t2 = a + phi * (b - a);
                f2 = eval(t2)?.0;
            } else {
                b = t2;
                t2 = t1;
                f2 = f1;
                t1 = b - phi * (b - a);
                f1 = eval(t1)?.0;
            }
        }
        let t = 0.5 * (a + b);
        let v = eval(t)?.0;
        if v > best_val {
            best_val = v;
            best_theta = t;
        }
    }
    let (val, xs, xo) = eval(best_theta)?;
    let w = if slot == 0 {
        kron_vec(&[xs, xo])
    } else {
        kron_vec(&[xo, xs])
    };
    Ok((val, w))
}

/// Contraction for a two-factor product: `U^T x` or `U x` by slot.
fn contract_pair(u: &DVector<f64>, dims: &[usize], slot: usize, x: &DVector<f64>) -> DVector<f64> {
    let um = mat_of(u, dims[0], dims[1]);
    if slot == 0 {
        um.transpose() * x
    } else {
        um * x
    }
}

/// Alternating ascent over factor boundaries with deterministic multistart.
/// Monotone and convergent, but only locally optimal in general; composite
/// factors beyond the exact branches go through here.
fn alternating_support(fs: &[Body], dims: &[usize], u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    use rand::SeedableRng;
    let l = fs.len();
    let mut starts: Vec<Vec<DVector<f64>>> = Vec::new();
    // axis starts
    for axis in 0..dims.iter().copied().max().unwrap_or(1) {
        let mut pts = Vec::with_capacity(l);
        for (j, f) in fs.iter().enumerate() {
            let mut dir = DVector::zeros(dims[j]);
            dir[axis.min(dims[j] - 1)] = 1.0;
            pts.push(support_witness(f, &dir)?.1);
        }
        starts.push(pts);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..12 {
        let mut pts = Vec::with_capacity(l);
        for (j, f) in fs.iter().enumerate() {
            let dir = sampling::gaussian_dir(dims[j], &mut rng);
            pts.push(support_witness(f, &dir)?.1);
        }
        starts.push(pts);
    }
    let mut best: Option<(f64, Vec<DVector<f64>>)> = None;
    for mut pts in starts {
        let mut val = f64::NEG_INFINITY;
        for _sweep in 0..200 {
            let mut sweep_val = val;
            for slot in 0..l {
                let dir = contract_except(u, dims, slot, &pts);
                if dir.norm() <= 1e-300 {
                    continue;
                }
                let (v, x) = support_witness(&fs[slot], &dir)?;
                pts[slot] = x;
                sweep_val = v;
            }
            if sweep_val <= val + 1e-14 * (1.0 + val.abs()) {
                val = sweep_val.max(val);
                break;
            }
            val = sweep_val;
        }
        if best.as_ref().map_or(true, |(b, _)| val > *b) {
            best = Some((val, pts));
        }
    }
    let (val, pts) = best.expect("at least one start");
    let w = kron_vec(&pts);
    Ok((val.max(w.dot(u)), w))
}

fn rank_of_points(pts: &[DVector<f64>]) -> usize {
    if pts.is_empty() {
        return 0;
    }
    let m = DMatrix::from_columns(pts);
    m.rank(1e-10 * (1.0 + m.norm()))
}

/// Pool cuts most aligned with the query direction, at most `k`. Keeping the
/// master problem small is what makes warm starts pay off; stuffing the whole
/// pool in makes every solve slower than a cold start.
fn pool_selection(body: &Body, query: &DVector<f64>, k: usize) -> Vec<DVector<f64>> {
    let pool: Vec<DVector<f64>> = body
        .cut_pool()
        .lock()
        .map(|p| p.clone())
        .unwrap_or_default();
    if pool.len() <= k {
        return pool;
    }
    let q = query.normalize();
    let mut scored: Vec<(f64, DVector<f64>)> = pool
        .into_iter()
        .map(|c| {
            let n = c.norm();
            let s = if n > 1e-300 { (c.dot(&q) / n).abs() } else { 0.0 };
            (s, c)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    scored.truncate(k);
    scored.into_iter().map(|(_, c)| c).collect()
}

/// Push `c` unless an almost identical cut is present; reports whether the
/// working set actually grew.
fn push_unique(cuts: &mut Vec<DVector<f64>>, c: DVector<f64>) -> bool {
    let tol = 1e-12 * (1.0 + c.norm());
    if cuts.iter().any(|p| (p - &c).norm() <= tol) {
        return false;
    }
    cuts.push(c);
    true
}

/// Store freshly discovered cuts for later warm starts, deduplicated, with
/// first-in-first-out eviction past the cap.
fn pool_store(body: &Body, fresh: &[DVector<f64>]) {
    if fresh.is_empty() {
        return;
    }
    if let Ok(mut pool) = body.cut_pool().lock() {
        for c in fresh {
            let tol = 1e-10 * (1.0 + c.norm());
            if !pool.iter().any(|p| (p - c).norm() <= tol) {
                pool.push(c.clone());
            }
        }
        let len = pool.len();
        if len > POOL_CAP {
            pool.drain(0..len - POOL_CAP);
        }
    }
}

/// Cutting-plane gauge for composite bodies with exact support oracles.
///
/// The master problem maximises `<z, u>` over the outer approximation of the
/// polar cut out by accumulated boundary points; its optimum is a certified
/// upper bound, and scaling the master dual into the polar certifies a lower
/// bound. Terminates when the relative gap drops below `1e-10`.
fn kelley_gauge(body: &Body, z: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let d = body.dim();
    if z.norm() <= 1e-300 {
        return Ok((0.0, DVector::zeros(d)));
    }
    let seed = |cuts: &mut Vec<DVector<f64>>| -> Result<()> {
        if rank_of_points(cuts) < d {
            for dir in sampling::sphere_directions(d, 4 * d + 16, 91) {
                let (_, x) = support_witness(body, &dir)?;
                if x.norm() > 1e-14 {
                    push_unique(cuts, x);
                }
                if cuts.len() >= d && rank_of_points(cuts) == d {
                    break;
                }
            }
            if rank_of_points(cuts) < d {
                return Err(Error::InvalidBody(
                    "support oracle spans a proper subspace; body is degenerate".into(),
                ));
            }
        }
        let (_, xz) = support_witness(body, &z.normalize())?;
        if xz.norm() > 1e-14 {
            push_unique(cuts, xz);
        }
        Ok(())
    };
    let mut cuts = pool_selection(body, z, 8 * d);
    seed(&mut cuts)?;
    let mut fresh: Vec<DVector<f64>> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut dual_best = DVector::zeros(d);
    let mut rebuilt = false;
    for _iter in 0..MAX_CUTS {
        let (ub, ustar) = match simplex::gauge_lp(&cuts, z) {
            Ok(v) => v,
            Err(_) if !rebuilt => {
                // degenerate master basis: restart from seed cuts only
                rebuilt = true;
                cuts.clear();
                seed(&mut cuts)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (h, xnew) = support_witness(body, &ustar)?;
        if h <= 1e-13 * (1.0 + ustar.norm()) {
            return Err(Error::Numerical(
                "support vanished along a master direction".into(),
            ));
        }
        let cand = z.dot(&ustar) / h;
        if cand > lb {
            lb = cand;
            dual_best = &ustar / h;
        }
        let gap = ub - lb;
        let scale = ub.abs().max(1.0);
        if gap <= GAP_TOL * scale {
            pool_store(body, &fresh);
            return Ok((0.5 * (ub + lb), dual_best));
        }
        if !push_unique(&mut cuts, xnew.clone()) {
            // oracle repeated a known boundary point: the master cannot move
            if gap <= STALL_TOL * scale {
                pool_store(body, &fresh);
                return Ok((0.5 * (ub + lb), dual_best));
            }
            if !rebuilt {
                rebuilt = true;
                cuts.clear();
                seed(&mut cuts)?;
                continue;
            }
            return Err(Error::Numerical(format!(
                "cutting-plane gauge stalled at relative gap {:.2e}",
                gap / scale
            )));
        }
        fresh.push(xnew);
    }
    Err(Error::Numerical(format!(
        "cutting-plane gauge did not reach gap {} within {} cuts",
        GAP_TOL, MAX_CUTS
    )))
}

/// Support of an intersection: maximises `<u, x>` subject to every part's
/// gauge at most one, refining an outer polytope with gauge subgradient cuts.
fn meet_support(body: &Body, parts: &[Body], u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let d = body.dim();
    if u.norm() <= 1e-300 {
        return Ok((0.0, DVector::zeros(d)));
    }
    // cuts are polar points c: the intersection lies in {|<c, y>| <= 1}
    let seed = |cuts: &mut Vec<DVector<f64>>| -> Result<()> {
        if rank_of_points(cuts) < d {
            for dir in sampling::sphere_directions(d, 4 * d + 16, 137) {
                for p in parts {
                    let (g, c) = gauge_witness(p, &dir)?;
                    if g > 1e-14 && c.norm() > 1e-14 {
                        push_unique(cuts, c);
                    }
                }
                if cuts.len() >= d && rank_of_points(cuts) == d {
                    break;
                }
            }
            if rank_of_points(cuts) < d {
                return Err(Error::InvalidBody(
                    "intersection parts do not bound; gauge cuts are degenerate".into(),
                ));
            }
        }
        Ok(())
    };
    let mut cuts = pool_selection(body, u, 8 * d);
    seed(&mut cuts)?;
    let mut fresh: Vec<DVector<f64>> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut witness = DVector::zeros(d);
    let mut rebuilt = false;
    for _iter in 0..MAX_CUTS {
        let (ub, y) = match simplex::gauge_lp(&cuts, u) {
            Ok(v) => v,
            Err(_) if !rebuilt => {
                rebuilt = true;
                cuts.clear();
                seed(&mut cuts)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut gworst = f64::NEG_INFINITY;
        let mut cworst = DVector::zeros(d);
        for p in parts {
            let (g, c) = gauge_witness(p, &y)?;
            if g > gworst {
                gworst = g;
                cworst = c;
            }
        }
        let feas = gworst.max(1.0);
        let cand = u.dot(&y) / feas;
        if cand > lb {
            lb = cand;
            witness = &y / feas;
        }
        let gap = ub - lb;
        let scale = ub.abs().max(1.0);
        if gap <= GAP_TOL * scale {
            pool_store(body, &fresh);
            return Ok((0.5 * (ub + lb), witness));
        }
        if !push_unique(&mut cuts, cworst.clone()) {
            if gap <= STALL_TOL * scale {
                pool_store(body, &fresh);
                return Ok((0.5 * (ub + lb), witness));
            }
            if !rebuilt {
                rebuilt = true;
                cuts.clear();
                seed(&mut cuts)?;
                continue;
            }
            return Err(Error::Numerical(format!(
                "intersection support stalled at relative gap {:.2e}",
                gap / scale
            )));
        }
        fresh.push(cworst);
    }
    Err(Error::Numerical(format!(
        "intersection support did not reach gap {} within {} cuts",
        GAP_TOL, MAX_CUTS
    )))
}
