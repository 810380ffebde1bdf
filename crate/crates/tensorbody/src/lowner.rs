//! Minimal-volume enclosing (Lowner) ellipsoids.
//!
//! V-polytopes run a Wolfe-Atwood coordinate ascent on the dual log-det
//! problem, with away steps and a rank-one update of the inverse scatter
//! matrix. Projective products factor exactly: the Lowner ellipsoid of a
//! projective product is the Hilbertian product of the factor ellipsoids.
//! Everything else is column generation against the support oracle. The
//! returned ellipsoid always contains the body; `gap` bounds how far it can
//! be from the optimal one.

use nalgebra::{DMatrix, DVector};

use crate::body::{linear_image, Body, BodyRep, Ellipsoid, LinearMap};
use crate::error::{Error, Result};
use crate::linalg::kron_mat;
use crate::sampling;

const MVEE_TOL: f64 = 1e-9;
const MVEE_MAX_ITERS: usize = 200_000;
const ORACLE_ROUNDS: usize = 120;
const ORACLE_TOL: f64 = 5e-7;

/// A Lowner ellipsoid together with its optimality certificate: contact
/// points of the body on the ellipsoid boundary and weights `c_j` such that
/// the normalised contacts `u_j = M^{1/2} p_j` satisfy
/// `sum_j c_j u_j u_j^T = I` up to the reported gap (a John decomposition).
#[derive(Debug, Clone)]
pub struct LownerEllipsoid {
    pub ellipsoid: Ellipsoid,
    pub contacts: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub gap: f64,
}

/// Lowner ellipsoid of a body in any representation.
pub fn lowner(body: &Body) -> Result<LownerEllipsoid> {
    match body.rep() {
        BodyRep::Ellipsoid(e) => {
            // the body is its own minimal ellipsoid; principal semi-axes
            // certify it
            let (vecs, vals) = crate::linalg::spd::sym_eigen(e.shape_matrix())?;
            let mut contacts = Vec::with_capacity(e.dim());
            for i in 0..e.dim() {
                contacts.push(vecs.column(i) / vals[i].sqrt());
            }
            Ok(LownerEllipsoid {
                ellipsoid: e.clone(),
                contacts,
                weights: vec![1.0; e.dim()],
                gap: 0.0,
            })
        }
        BodyRep::VPoly(v) => mvee_points(v.generators(), MVEE_TOL),
        BodyRep::HPoly(_) => mvee_points(body.as_vpoly()?.generators(), MVEE_TOL),
        BodyRep::PiProd(fs) => {
            // Lowner of a projective product is the Hilbertian product of
            // the factor Lowner ellipsoids
            let fits: Vec<LownerEllipsoid> =
                fs.iter().map(lowner).collect::<Result<_>>()?;
            let mats: Vec<DMatrix<f64>> =
                fits.iter().map(|f| f.ellipsoid.shape_matrix().clone()).collect();
            let ellipsoid = Ellipsoid::new(kron_mat(&mats))?;
            let mut contacts = Vec::new();
            let mut weights = Vec::new();
            let mut stack: Vec<(DVector<f64>, f64)> = vec![(DVector::from_element(1, 1.0), 1.0)];
            for fit in &fits {
                let mut next = Vec::new();
                for (prefix, wp) in &stack {
                    for (c, w) in fit.contacts.iter().zip(&fit.weights) {
                        next.push((crate::linalg::kron_vec(&[prefix.clone(), c.clone()]), wp * w));
                    }
                }
                stack = next;
            }
            for (c, w) in stack {
                contacts.push(c);
                weights.push(w);
            }
            let gap = fits.iter().fold(1.0, |acc, f| acc * (1.0 + f.gap)) - 1.0;
            Ok(LownerEllipsoid {
                ellipsoid,
                contacts,
                weights,
                gap,
            })
        }
        BodyRep::Mapped { mat, inner, .. } => {
            let fit = lowner(inner)?;
            let img = linear_image(&LinearMap::Dense(mat.clone()), &Body::new(
                BodyRep::Ellipsoid(fit.ellipsoid),
            ))?;
            let ellipsoid = match img.rep() {
                BodyRep::Ellipsoid(e) => e.clone(),
                _ => unreachable!("linear image of an ellipsoid stays an ellipsoid"),
            };
            let contacts = fit.contacts.iter().map(|c| mat * c).collect();
            Ok(LownerEllipsoid {
                ellipsoid,
                contacts,
                weights: fit.weights,
                gap: fit.gap,
            })
        }
        _ => lowner_oracle(body),
    }
}

/// Puts a body in Lowner position: returns `(T B, T)` where `T = M^{1/2}`
/// maps the Lowner ellipsoid of `B` onto the unit ball.
pub fn lowner_position(body: &Body) -> Result<(Body, DMatrix<f64>)> {
    let fit = lowner(body)?;
    let t = fit.ellipsoid.half_map_inv().clone();
    let positioned = linear_image(&LinearMap::Dense(t.clone()), body)?;
    Ok((positioned, t))
}

/// Minimal-volume ellipsoid containing `conv(+-points)` by Wolfe-Atwood
/// ascent on the dual: maximise `log det sum_j w_j p_j p_j^T` over the
/// simplex. Away steps shrink weights of interior points.
pub fn mvee_points(points: &[DVector<f64>], tol: f64) -> Result<LownerEllipsoid> {
    if points.is_empty() {
        return Err(Error::InvalidBody("no points for enclosing ellipsoid".into()));
    }
    let d = points[0].len();
    let m = points.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points.iter().map(|p| p.len()).find(|&l| l != d).unwrap(),
        });
    }
    let mut w = vec![1.0 / m as f64; m];
    let scatter = |w: &[f64]| -> DMatrix<f64> {
        let mut x = DMatrix::zeros(d, d);
        for (p, &wj) in points.iter().zip(w) {
            if wj > 0.0 {
                x += p * p.transpose() * wj;
            }
        }
        x
    };
    let mut x_inv = scatter(&w)
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::InvalidBody("points do not span the space".into()))?;
    let mut kappa: Vec<f64> = points.iter().map(|p| (p.transpose() * &x_inv * p)[0]).collect();
    let df = d as f64;
    let mut gap = f64::INFINITY;
    for it in 0..MVEE_MAX_ITERS {
        let (mut k_hi, mut v_hi) = (0usize, f64::NEG_INFINITY);
        let (mut k_lo, mut v_lo) = (usize::MAX, f64::INFINITY);
        for (j, &kj) in kappa.iter().enumerate() {
            if kj > v_hi {
                k_hi = j;
                v_hi = kj;
            }
            if w[j] > 1e-12 && kj < v_lo {
                k_lo = j;
                v_lo = kj;
            }
        }
        let up = v_hi / df - 1.0;
        let down = 1.0 - v_lo / df;
        gap = up.max(0.0);
        if up <= tol && down <= tol {
            break;
        }
        let (k, kap, beta) = if up >= down {
            let beta = (v_hi / df - 1.0) / (v_hi - 1.0);
            (k_hi, v_hi, beta)
        } else {
            let raw = (v_lo / df - 1.0) / (v_lo - 1.0);
            let cap = -w[k_lo] / (1.0 - w[k_lo]);
            (k_lo, v_lo, raw.max(cap))
        };
        if beta.abs() < 1e-16 {
            break;
        }
        // rank-one update of the inverse scatter and all kappa values
        let p = &points[k];
        let xp = &x_inv * p;
        let denom = 1.0 - beta + beta * kap;
        for j in 0..m {
            let q = xp.dot(&points[j]);
            kappa[j] = (kappa[j] - beta * q * q / denom) / (1.0 - beta);
        }
        x_inv = (&x_inv - &xp * xp.transpose() * (beta / denom)) / (1.0 - beta);
        for (j, wj) in w.iter_mut().enumerate() {
            *wj *= 1.0 - beta;
            if j == k {
                *wj += beta;
            }
            if *wj < 0.0 {
                *wj = 0.0;
            }
        }
        // periodic refactorisation against drift
        if it % 512 == 511 {
            x_inv = scatter(&w)
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::Numerical("scatter matrix became singular".into()))?;
            kappa = points.iter().map(|p| (p.transpose() * &x_inv * p)[0]).collect();
        }
    }
    // enclosing ellipsoid: scale the dual shape so all points fit
    let worst = kappa.iter().cloned().fold(0.0f64, f64::max);
    let mut mshape = &x_inv / (worst.max(df));
    mshape = (&mshape + mshape.transpose()) * 0.5;
    let ellipsoid = Ellipsoid::new(mshape)?;
    let mut contacts = Vec::new();
    let mut weights = Vec::new();
    for (j, &wj) in w.iter().enumerate() {
        if wj > 1e-8 {
            contacts.push(points[j].clone());
            weights.push(df * wj);
        }
    }
    Ok(LownerEllipsoid {
        ellipsoid,
        contacts,
        weights,
        gap,
    })
}

/// Column generation for bodies known only through their support oracle:
/// fit an ellipsoid to accumulated boundary points, then ask the body for
/// a point sticking out and repeat until nothing does.
fn lowner_oracle(body: &Body) -> Result<LownerEllipsoid> {
    let d = body.dim();
    let mut pts: Vec<DVector<f64>> = Vec::new();
    for u in sampling::sphere_directions(d, 2 * d + 8, 53) {
        pts.push(body.support_witness(&u)?.1);
    }
    let mut fit = mvee_points(&pts, MVEE_TOL)?;
    for _ in 0..ORACLE_ROUNDS {
        let e = fit.ellipsoid.clone();
        let f = |x: &DVector<f64>| -> Result<(f64, DVector<f64>)> {
            let g = e.gauge(x);
            let grad = if g > 1e-14 {
                e.shape_matrix() * x / g
            } else {
                DVector::zeros(d)
            };
            Ok((g, grad))
        };
        let (val, witness) = crate::body::metrics::extreme_max(body, &f)?;
        if val <= 1.0 + ORACLE_TOL {
            fit.gap = fit.gap.max((val - 1.0).max(0.0));
            return Ok(fit);
        }
        pts.push(witness);
        fit = mvee_points(&pts, MVEE_TOL)?;
    }
    Err(Error::Numerical(
        "enclosing-ellipsoid column generation did not converge".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::LpKind;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn square_gets_circumscribed_disc() {
        let fit = lowner(&Body::lp_ball(LpKind::Inf, 2).unwrap()).unwrap();
        let m = fit.ellipsoid.shape_matrix();
        assert_relative_eq!(m[(0, 0)], 0.5, epsilon = 1e-6);
        assert_relative_eq!(m[(1, 1)], 0.5, epsilon = 1e-6);
        assert_relative_eq!(m[(0, 1)], 0.0, epsilon = 1e-6);
        assert!(fit.gap < 1e-8);
        assert_eq!(fit.contacts.len(), 2); // both corner pairs touch
    }

    #[test]
    fn cross_polytope_gets_unit_ball() {
        let fit = lowner(&Body::lp_ball(LpKind::One, 3).unwrap()).unwrap();
        let m = fit.ellipsoid.shape_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(m[(i, j)], want, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn john_decomposition_residual_is_small() {
        let fit = lowner(&Body::lp_ball(LpKind::Inf, 3).unwrap()).unwrap();
        let d = 3;
        let mut s = DMatrix::<f64>::zeros(d, d);
        for (c, &w) in fit.contacts.iter().zip(&fit.weights) {
            let u = (fit.ellipsoid.half_map_inv() * c).normalize();
            s += &u * u.transpose() * w;
        }
        assert!((s - DMatrix::<f64>::identity(d, d)).norm() < 1e-4);
    }

    #[test]
    fn equivariance_under_linear_maps() {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let cube = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let skewed = linear_image(&LinearMap::Dense(t.clone()), &cube).unwrap();
        let fit = lowner(&skewed).unwrap();
        let t_inv = t.try_inverse().unwrap();
        let want = t_inv.transpose() * DMatrix::from_diagonal_element(2, 2, 0.5) * t_inv;
        assert!((fit.ellipsoid.shape_matrix() - want).norm() < 1e-5);
    }

    #[test]
    fn projective_product_factorizes() {
        let cube = Body::lp_ball(LpKind::Inf, 2).unwrap();
        let pi = Body::fresh(BodyRep::PiProd(vec![cube.clone(), cube.clone()]), None);
        let fit = lowner(&pi).unwrap();
        let m = fit.ellipsoid.shape_matrix();
        // disc of radius sqrt(2) per factor -> ball of radius 2 in dim 4
        assert!((m - DMatrix::<f64>::identity(4, 4) * 0.25).norm() < 1e-5);
        // direct fit of the kron generators agrees
        let mut gens = Vec::new();
        if let (BodyRep::VPoly(a), BodyRep::VPoly(b)) = (cube.rep(), cube.rep()) {
            for ga in a.generators() {
                for gb in b.generators() {
                    gens.push(crate::linalg::kron_vec(&[ga.clone(), gb.clone()]));
                }
            }
        }
        let direct = mvee_points(&gens, 1e-9).unwrap();
        assert!((direct.ellipsoid.shape_matrix() - m).norm() < 1e-5);
    }

    #[test]
    fn injective_round_product_by_column_generation() {
        let eps = Body::fresh(
            BodyRep::EpsProd(vec![Body::ball(2), Body::ball(2)]),
            None,
        );
        let fit = lowner(&eps).unwrap();
        let m = fit.ellipsoid.shape_matrix();
        // operator-norm ball has Frobenius circumradius sqrt(2)
        assert!((m - DMatrix::<f64>::identity(4, 4) * 0.5).norm() < 1e-4);
    }

    #[test]
    fn sum_by_column_generation() {
        let body = crate::body::minkowski_sum(
            &Body::ball(2).scale(0.5).unwrap(),
            &Body::lp_ball(LpKind::One, 2).unwrap(),
        )
        .unwrap();
        let fit = lowner(&body).unwrap();
        let m = fit.ellipsoid.shape_matrix();
        let want = 1.0 / (1.5 * 1.5);
        assert!((m - DMatrix::<f64>::identity(2, 2) * want).norm() < 1e-4);
    }

    #[test]
    fn lowner_position_maps_to_unit_ball() {
        let p = Body::from_generators(vec![
            v(&[3.0, 0.1]),
            v(&[0.2, 0.9]),
            v(&[2.0, -0.8]),
        ])
        .unwrap();
        let (positioned, _t) = lowner_position(&p).unwrap();
        let fit = lowner(&positioned).unwrap();
        assert!(
            (fit.ellipsoid.shape_matrix() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-5
        );
    }

    #[test]
    fn ellipsoid_is_its_own_fit() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let e = Body::from_shape_matrix(m.clone()).unwrap();
        let fit = lowner(&e).unwrap();
        assert!((fit.ellipsoid.shape_matrix() - &m).norm() < 1e-12);
        assert_eq!(fit.gap, 0.0);
        for c in &fit.contacts {
            assert_relative_eq!(fit.ellipsoid.gauge(c), 1.0, epsilon = 1e-10);
        }
    }
}
