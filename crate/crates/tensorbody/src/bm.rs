//! Banach-Mazur distance estimation over dense and tensor-structured maps.
//!
//! The distance from `P` to `R` is the smallest `lambda` over invertible `T`
//! with `R ⊆ T·P ⊆ lambda·R`. For a fixed map the optimal scalar factors
//! through containment: `lambda(T) = nu(T·P, R) · nu(R, T·P)`, so the
//! estimator minimizes that product by derivative-free multistart search.
//! Classical mode ranges over all of `GL(d)`; tensorial mode ranges over
//! decomposable-preserving maps `(T1 ⊗ … ⊗ Tl) U_sigma`, enumerating the
//! admissible slot permutations and optimizing the factor matrices for each.
//! Results are upper bounds on the true distance — the search is local — and
//! the returned map is rescaled so both containments hold as stated.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::body::{hausdorff, linear_image, nu, Body, LinearMap};
use crate::calculus::extract_factors;
use crate::error::{Error, Result};
use crate::linalg::{admissible_perms, random_orthogonal, FactorMap, TensorShape};
use crate::lowner::lowner;
use crate::par;

/// Search space for `bm_estimate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BmMode {
    /// All invertible maps of the flattened space.
    Classical,
    /// Decomposable-preserving maps `(T1 ⊗ … ⊗ Tl) U_sigma`.
    Tensorial,
}

/// Upper bound on a Banach-Mazur distance with the map that achieves it:
/// `R ⊆ map·P ⊆ lambda·R` up to solver tolerance.
#[derive(Debug, Clone)]
pub struct BmEstimate {
    pub lambda: f64,
    pub map: LinearMap,
    /// False when no optimizer run collapsed its simplex inside the
    /// iteration budget; the estimate is then best-so-far.
    pub converged: bool,
}

/// Estimates the Banach-Mazur distance from `p` to `r` by multistart
/// Nelder-Mead over a parameterization of the map group.
///
/// `restarts` counts optimizer starts (per slot permutation in tensorial
/// mode): the identity, a Löwner-alignment guess, and seeded random
/// perturbations of both. Tensorial mode requires both bodies to carry the
/// same tensor shape tag.
pub fn bm_estimate(
    p: &Body,
    r: &Body,
    mode: BmMode,
    restarts: usize,
    seed: u64,
) -> Result<BmEstimate> {
    if p.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: r.dim(),
        });
    }
    match mode {
        BmMode::Classical => {
            let d = p.dim();
            let align = classical_alignment(p, r);
            let f = |th: &[f64]| objective(p, r, &LinearMap::Dense(build_ldu(d, th)));
            let out = multistart(&f, d * d, align, restarts, seed);
            if !out.lambda.is_finite() {
                return Err(Error::Numerical(
                    "no evaluable map found in the search".into(),
                ));
            }
            let map = rescaled_dense(p, r, build_ldu(d, &out.params))?;
            Ok(BmEstimate {
                lambda: out.lambda,
                map,
                converged: out.converged,
            })
        }
        BmMode::Tensorial => {
            let shape = shared_shape(p, r)?;
            let n: usize = shape.dims().iter().map(|&d| d * d).sum();
            let pf = extract_factors(p).ok();
            let rf = extract_factors(r).ok();
            let mut best: Option<(Run, Vec<usize>)> = None;
            for (k, perm) in admissible_perms(&shape).into_iter().enumerate() {
                let align = match (&pf, &rf) {
                    (Some(a), Some(b)) => factor_alignment(a, b, &perm),
                    _ => None,
                };
                let f = |th: &[f64]| match factor_map_from(&shape, &perm, th) {
                    Ok(fm) => objective(p, r, &LinearMap::Factor(fm)),
                    Err(_) => f64::INFINITY,
                };
                let out = multistart(
                    &f,
                    n,
                    align,
                    restarts,
                    seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                );
                if best.as_ref().map_or(true, |(b, _)| out.lambda < b.lambda) {
                    best = Some((out, perm));
                }
            }
            let (out, perm) = best.expect("at least the identity permutation is admissible");
            if !out.lambda.is_finite() {
                return Err(Error::Numerical(
                    "no evaluable map found in the search".into(),
                ));
            }
            let fm = factor_map_from(&shape, &perm, &out.params)?;
            let map = rescaled_factor(p, r, fm)?;
            Ok(BmEstimate {
                lambda: out.lambda,
                map,
                converged: out.converged,
            })
        }
    }
}

/// Largest Hausdorff displacement of `p` under random orthogonal factor maps
/// composed with admissible slot permutations. Bodies invariant under the
/// orthogonal tensor group report values at numerical noise; generic bodies
/// report something macroscopic.
pub fn orbit_invariance_check(p: &Body, trials: usize, seed: u64) -> Result<f64> {
    let shape = p
        .shape()
        .ok_or_else(|| Error::Precondition("orbit check needs a tensor shape tag".into()))?
        .clone();
    let perms = admissible_perms(&shape);
    let ids: Vec<u64> = (0..trials as u64).collect();
    let devs = par::map(&ids, |&t| -> Result<f64> {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(t.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let factors = shape
            .dims()
            .iter()
            .map(|&d| random_orthogonal(d, &mut rng))
            .collect();
        let perm = perms[rng.gen_range(0..perms.len())].clone();
        let u = FactorMap::new(shape.clone(), factors, perm)?;
        let moved = linear_image(&LinearMap::Factor(u), p)?;
        Ok(hausdorff(&moved, p)?.value)
    });
    let mut worst = 0.0f64;
    for d in devs {
        worst = worst.max(d?);
    }
    Ok(worst)
}

fn shared_shape(p: &Body, r: &Body) -> Result<TensorShape> {
    let sp = p
        .shape()
        .ok_or_else(|| Error::Precondition("tensorial mode needs tensor shape tags".into()))?;
    let sr = r
        .shape()
        .ok_or_else(|| Error::Precondition("tensorial mode needs tensor shape tags".into()))?;
    if sp != sr {
        return Err(Error::ShapeMismatch(format!(
            "tensor shapes differ: {} vs {}",
            sp, sr
        )));
    }
    Ok(sp.clone())
}

/// `lambda(T)`; map evaluation failures count as unusable points.
fn objective(p: &Body, r: &Body, map: &LinearMap) -> f64 {
    let tp = match linear_image(map, p) {
        Ok(b) => b,
        Err(_) => return f64::INFINITY,
    };
    let a = match nu(&tp, r) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    let b = match nu(r, &tp) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    let v = a * b;
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Positive reparameterization `g(x) = x + sqrt(1 + x²)`: smooth, strictly
/// increasing, `g(0) = 1`, never zero or negative.
fn g(x: f64) -> f64 {
    x + (1.0 + x * x).sqrt()
}

fn g_inv(y: f64) -> f64 {
    0.5 * (y - 1.0 / y)
}

/// Invertible matrix from `d²` unconstrained parameters: unit lower triangle,
/// positive diagonal through `g`, unit upper triangle. Zero parameters give
/// the identity; scaling is absorbed by the diagonal block.
fn build_ldu(d: usize, th: &[f64]) -> DMatrix<f64> {
    debug_assert_eq!(th.len(), d * d);
    let strict = d * (d - 1) / 2;
    let mut lo = DMatrix::identity(d, d);
    let mut k = 0;
    for i in 1..d {
        for j in 0..i {
            lo[(i, j)] = th[k];
            k += 1;
        }
    }
    let mut up = DMatrix::identity(d, d);
    let mut k = strict + d;
    for i in 0..d {
        for j in i + 1..d {
            up[(i, j)] = th[k];
            k += 1;
        }
    }
    for i in 0..d {
        let s = g(th[strict + i]);
        for j in 0..d {
            up[(i, j)] *= s;
        }
    }
    lo * up
}

/// Parameters reproducing `t` through `build_ldu`, when `t` factors as LDU
/// with safely positive pivots (no pivoting is attempted — callers treat
/// `None` as "skip this initial guess").
fn ldu_params(t: &DMatrix<f64>) -> Option<Vec<f64>> {
    let d = t.nrows();
    let scale = t.amax().max(1.0);
    let mut a = t.clone();
    let mut lo = DMatrix::identity(d, d);
    for k in 0..d {
        let piv = a[(k, k)];
        if piv <= 1e-8 * scale {
            return None;
        }
        for i in k + 1..d {
            let f = a[(i, k)] / piv;
            lo[(i, k)] = f;
            for j in k..d {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    let strict = d * (d - 1) / 2;
    let mut th = vec![0.0; d * d];
    let mut k = 0;
    for i in 1..d {
        for j in 0..i {
            th[k] = lo[(i, j)];
            k += 1;
        }
    }
    for i in 0..d {
        th[strict + i] = g_inv(a[(i, i)]);
    }
    let mut k = strict + d;
    for i in 0..d {
        for j in i + 1..d {
            th[k] = a[(i, j)] / a[(i, i)];
            k += 1;
        }
    }
    Some(th)
}

fn factor_map_from(shape: &TensorShape, perm: &[usize], th: &[f64]) -> Result<FactorMap> {
    let mut fs = Vec::with_capacity(shape.order());
    let mut off = 0;
    for &d in shape.dims() {
        fs.push(build_ldu(d, &th[off..off + d * d]));
        off += d * d;
    }
    FactorMap::new(shape.clone(), fs, perm.to_vec())
}

/// Parameters of the map sending the Löwner ellipsoid of `p` onto that of
/// `r` — exact for ellipsoid pairs, a sensible warm start otherwise.
fn classical_alignment(p: &Body, r: &Body) -> Option<Vec<f64>> {
    let fp = lowner(p).ok()?;
    let fr = lowner(r).ok()?;
    let t = fr.ellipsoid.half_map() * fp.ellipsoid.half_map_inv();
    ldu_params(&t)
}

/// Per-slot Löwner alignment between the extracted factors of the two
/// bodies, respecting the slot permutation (factor `i` of the map receives
/// slot `perm[i]` of the source).
fn factor_alignment(pf: &[Body], rf: &[Body], perm: &[usize]) -> Option<Vec<f64>> {
    let mut th = Vec::new();
    for (i, &src) in perm.iter().enumerate() {
        let a = lowner(&pf[src]).ok()?;
        let b = lowner(&rf[i]).ok()?;
        let t = b.ellipsoid.half_map() * a.ellipsoid.half_map_inv();
        th.extend(ldu_params(&t)?);
    }
    Some(th)
}

/// Rescales `t` so the returned map satisfies `R ⊆ T·P` exactly, absorbing
/// the inner containment factor.
fn rescaled_dense(p: &Body, r: &Body, t: DMatrix<f64>) -> Result<LinearMap> {
    let tp = linear_image(&LinearMap::Dense(t.clone()), p)?;
    let b = nu(r, &tp)?;
    Ok(LinearMap::Dense(t * b))
}

fn rescaled_factor(p: &Body, r: &Body, fm: FactorMap) -> Result<LinearMap> {
    let tp = linear_image(&LinearMap::Factor(fm.clone()), p)?;
    let b = nu(r, &tp)?;
    let mut fs = fm.factors().to_vec();
    fs[0] *= b;
    let scaled = FactorMap::new(fm.shape().clone(), fs, fm.perm().to_vec())?;
    Ok(LinearMap::Factor(scaled))
}

struct Run {
    lambda: f64,
    params: Vec<f64>,
    converged: bool,
}

fn iters_for(n: usize) -> usize {
    120 + 18 * n
}

/// Runs one Nelder-Mead descent per initial point (in parallel) and keeps
/// the smallest objective. Each descent gets a coarse stage and a fine
/// restart from its own winner.
fn multistart<F>(
    f: &F,
    n: usize,
    align: Option<Vec<f64>>,
    restarts: usize,
    seed: u64,
) -> Run
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let total = restarts.max(1);
    let zeros = vec![0.0; n];
    let mut inits: Vec<Vec<f64>> = vec![zeros.clone()];
    if let Some(al) = &align {
        if total > 1 {
            inits.push(al.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while inits.len() < total {
        let k = inits.len();
        let radius = [0.25, 0.6, 1.2][k % 3];
        let base = if k % 2 == 1 {
            align.as_ref().unwrap_or(&zeros)
        } else {
            &zeros
        };
        inits.push(
            base.iter()
                .map(|&b| b + rng.gen_range(-radius..radius))
                .collect(),
        );
    }
    let runs = par::map(&inits, |x0| {
        let (x1, f1, c1) = nelder_mead(f, x0, 0.25, iters_for(n));
        let (x2, f2, c2) = nelder_mead(f, &x1, 0.04, iters_for(n) / 2);
        if f2 <= f1 {
            (f2, x2, c2)
        } else {
            (f1, x1, c1)
        }
    });
    let mut best: Option<Run> = None;
    for (lambda, params, converged) in runs {
        if best.as_ref().map_or(true, |b| lambda < b.lambda) {
            best = Some(Run {
                lambda,
                params,
                converged,
            });
        }
    }
    best.expect("multistart always runs at least one descent")
}

/// One Nelder-Mead descent (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Returns the best point, its value, and whether the simplex
/// collapsed before the budget ran out.
fn nelder_mead<F>(f: &F, x0: &[f64], step: f64, max_iters: usize) -> (Vec<f64>, f64, bool)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0);
    pts.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        pts.push((x, v));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| {
        a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)
    };
    let edge = |pts: &[(Vec<f64>, f64)]| {
        let mut m = 0.0f64;
        for p in &pts[1..] {
            for j in 0..n {
                m = m.max((p.0[j] - pts[0].0[j]).abs());
            }
        }
        m
    };
    let mut converged = false;
    for _ in 0..max_iters {
        pts.sort_by(by_value);
        let spread = pts[n].1 - pts[0].1;
        if spread <= 1e-11 * (1.0 + pts[0].1.abs()) && edge(&pts) <= 1e-6 {
            converged = true;
            break;
        }
        let mut c = vec![0.0; n];
        for p in &pts[..n] {
            for j in 0..n {
                c[j] += p.0[j];
            }
        }
        for v in &mut c {
            *v /= n as f64;
        }
        let worst = pts[n].clone();
        let xr: Vec<f64> = (0..n).map(|j| 2.0 * c[j] - worst.0[j]).collect();
        let fr = eval(&xr);
        if fr < pts[0].1 {
            let xe: Vec<f64> = (0..n).map(|j| 3.0 * c[j] - 2.0 * worst.0[j]).collect();
            let fe = eval(&xe);
            pts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < pts[n - 1].1 {
            pts[n] = (xr, fr);
        } else {
            let toward = if fr < worst.1 { &xr } else { &worst.0 };
            let xc: Vec<f64> = (0..n).map(|j| 0.5 * (c[j] + toward[j])).collect();
            let fc = eval(&xc);
            if fc < fr.min(worst.1) {
                pts[n] = (xc, fc);
            } else {
                let base = pts[0].0.clone();
                for p in pts[1..].iter_mut() {
                    for j in 0..n {
                        p.0[j] = 0.5 * (base[j] + p.0[j]);
                    }
                    p.1 = eval(&p.0);
                }
            }
        }
    }
    pts.sort_by(by_value);
    let (x, v) = pts.swap_remove(0);
    (x, v, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::LpKind;
    use crate::products::projective_product;
    use nalgebra::DVector;

    fn shape22() -> TensorShape {
        TensorShape::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn reparameterization_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2usize, 3, 4] {
            for _ in 0..10 {
                let th: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let t = build_ldu(d, &th);
                let back = ldu_params(&t).unwrap();
                let t2 = build_ldu(d, &back);
                assert!((&t - &t2).norm() <= 1e-9 * t.norm().max(1.0));
            }
        }
    }

    #[test]
    fn nelder_mead_minimizes_a_quadratic() {
        let f = |x: &[f64]| {
            (x[0] - 1.0).powi(2) + 4.0 * (x[1] + 0.5).powi(2) + (x[2] - 2.0).powi(2)
        };
        let (x, v, converged) = nelder_mead(&f, &[0.0, 0.0, 0.0], 0.5, 400);
        assert!(converged);
        assert!(v < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn self_distance_is_one() {
        let p = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let est = bm_estimate(&p, &p, BmMode::Classical, 4, 7).unwrap();
        assert!(est.lambda >= 1.0 - 1e-9);
        assert!(est.lambda <= 1.0 + 1e-6);
        assert!(matches!(est.map, LinearMap::Dense(_)));
    }

    #[test]
    fn recovers_a_linear_orbit() {
        let p = Body::random_polytope(2, 6, 41).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[1.3, 0.4, -0.2, 0.9]);
        let r = linear_image(&LinearMap::Dense(t), &p).unwrap();
        let est = bm_estimate(&p, &r, BmMode::Classical, 8, 3).unwrap();
        assert!(est.lambda <= 1.0 + 1e-3, "lambda = {}", est.lambda);
        // the returned map realizes the sandwich R ⊆ TP ⊆ lambda R
        let tp = linear_image(&est.map, &p).unwrap();
        assert!(nu(&r, &tp).unwrap() <= 1.0 + 1e-8);
        assert!(nu(&tp, &r).unwrap() <= est.lambda * (1.0 + 1e-8));
    }

    #[test]
    fn scale_is_absorbed_by_the_map() {
        let p = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let r = Body::lp_ball(LpKind::One, 2).unwrap();
        let base = bm_estimate(&p, &r, BmMode::Classical, 6, 11).unwrap();
        let scaled = bm_estimate(&p.scale(10.0).unwrap(), &r, BmMode::Classical, 6, 11).unwrap();
        assert!((scaled.lambda / base.lambda - 1.0).abs() <= 0.02);
    }

    #[test]
    fn tensorial_self_distance_on_a_cross_product() {
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let p = projective_product(&[b1.clone(), b1], &shape22()).unwrap();
        let est = bm_estimate(&p, &p, BmMode::Tensorial, 3, 11).unwrap();
        assert!(est.lambda >= 1.0 - 1e-9);
        assert!(est.lambda <= 1.0 + 1e-6);
        assert!(matches!(est.map, LinearMap::Factor(_)));
    }

    #[test]
    fn tensorial_recovers_a_factor_orbit() {
        let b1 = Body::lp_ball(LpKind::One, 2).unwrap();
        let p = projective_product(&[b1.clone(), b1], &shape22()).unwrap();
        let fm = FactorMap::new(
            shape22(),
            vec![
                DMatrix::from_row_slice(2, 2, &[1.4, 0.3, 0.0, 0.8]),
                DMatrix::from_row_slice(2, 2, &[0.9, -0.2, 0.1, 1.1]),
            ],
            vec![0, 1],
        )
        .unwrap();
        let r = linear_image(&LinearMap::Factor(fm), &p).unwrap();
        let est = bm_estimate(&p, &r, BmMode::Tensorial, 8, 17).unwrap();
        assert!(est.lambda <= 1.0 + 1e-3, "lambda = {}", est.lambda);
    }

    #[test]
    fn orthogonal_orbit_fixes_ball_products() {
        let b2 = Body::ball(2);
        let p = projective_product(&[b2.clone(), b2], &shape22()).unwrap();
        assert!(orbit_invariance_check(&p, 8, 3).unwrap() <= 1e-8);
        let ball4 = Body::ball(4).with_shape(shape22()).unwrap();
        assert!(orbit_invariance_check(&ball4, 8, 5).unwrap() <= 1e-8);
    }

    #[test]
    fn generic_polytope_moves_under_the_orbit() {
        let p = Body::random_polytope(4, 10, 23)
            .unwrap()
            .with_shape(shape22())
            .unwrap();
        assert!(orbit_invariance_check(&p, 6, 9).unwrap() > 0.01);
    }

    #[test]
    fn random_inits_are_deterministic() {
        let p = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let r = Body::random_polytope(2, 5, 8).unwrap();
        let a = bm_estimate(&p, &r, BmMode::Classical, 5, 99).unwrap();
        let b = bm_estimate(&p, &r, BmMode::Classical, 5, 99).unwrap();
        assert_eq!(a.lambda, b.lambda);
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let (ma, mb) = match (&a.map, &b.map) {
            (LinearMap::Dense(ma), LinearMap::Dense(mb)) => (ma * &x, mb * &x),
            _ => unreachable!(),
        };
        assert_eq!(ma, mb);
    }
}
