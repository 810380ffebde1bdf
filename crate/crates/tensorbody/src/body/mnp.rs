//! Minimum-norm point in the convex hull of a finite point set (Wolfe's
//! algorithm) and exact Euclidean distance from a point to a polytope.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::concrete::VPolytope;

const MNP_TOL: f64 = 1e-12;

/// Affine minimizer of the norm over the points indexed by `idx`: solves the
/// equality-constrained least-squares system on the Gram matrix.
fn affine_minimizer(points: &[DVector<f64>], idx: &[usize]) -> Result<Vec<f64>> {
    let k = idx.len();
    let mut sys = DMatrix::zeros(k + 1, k + 1);
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            sys[(r, c)] = points[i].dot(&points[j]);
        }
        sys[(r, k)] = 1.0;
        sys[(k, r)] = 1.0;
    }
    let scale = sys.norm().max(1.0);
    for r in 0..k {
        sys[(r, r)] += 1e-14 * scale;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("degenerate simplex in norm minimization".into()))?;
    Ok(sol.as_slice()[..k].to_vec())
}

/// Point of minimum Euclidean norm in `conv(points)`, with its norm.
pub(crate) fn min_norm_point(points: &[DVector<f64>]) -> Result<(f64, DVector<f64>)> {
    if points.is_empty() {
        return Err(Error::Precondition("empty point set".into()));
    }
    let scale = points
        .iter()
        .map(|p| p.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let start = points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.norm().partial_cmp(&b.norm()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut simplex: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();
    for _major in 0..4000 {
        // steepest candidate
        let mut jstar = 0;
        let mut dmin = f64::INFINITY;
        for (j, p) in points.iter().enumerate() {
            let t = x.dot(p);
            if t < dmin {
                dmin = t;
                jstar = j;
            }
        }
        if dmin >= x.norm_squared() - MNP_TOL * scale * scale {
            break;
        }
        if simplex.contains(&jstar) {
            break;
        }
        simplex.push(jstar);
        lambda.push(0.0);
        for _minor in 0..1000 {
            let y = affine_minimizer(points, &simplex)?;
            if y.iter().all(|&c| c >= -1e-12) {
                lambda = y;
                break;
            }
            // move towards y until a coefficient vanishes
            let mut t = 1.0f64;
            for (l, c) in lambda.iter().zip(&y) {
                if *c < 1e-12 && *l > *c {
                    t = t.min(l / (l - c));
                }
            }
            for (l, c) in lambda.iter_mut().zip(&y) {
                *l += t * (*c - *l);
            }
            let mut keep_idx = Vec::with_capacity(simplex.len());
            let mut keep_lam = Vec::with_capacity(simplex.len());
            for (i, &l) in lambda.iter().enumerate() {
                if l > 1e-12 {
                    keep_idx.push(simplex[i]);
                    keep_lam.push(l);
                }
            }
            let total: f64 = keep_lam.iter().sum();
            simplex = keep_idx;
            lambda = keep_lam.iter().map(|l| l / total).collect();
            if simplex.is_empty() {
                return Ok((0.0, DVector::zeros(points[0].len())));
            }
        }
        x = DVector::zeros(points[0].len());
        for (&i, &l) in simplex.iter().zip(&lambda) {
            x += &points[i] * l;
        }
    }
    Ok((x.norm(), x))
}

/// Exact distance from `x` to the symmetric polytope, with the closest point.
pub fn distance_to_vpolytope(x: &DVector<f64>, poly: &VPolytope) -> Result<(f64, DVector<f64>)> {
    let mut cloud = Vec::with_capacity(2 * poly.generators().len());
    for g in poly.generators() {
        cloud.push(g - x);
        cloud.push(-g - x);
    }
    let (d, y) = min_norm_point(&cloud)?;
    Ok((d, y + x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn distance_to_square_from_outside() {
        let p = VPolytope::new(vec![v(&[1.0, 1.0]), v(&[1.0, -1.0])]).unwrap();
        let (d, y) = distance_to_vpolytope(&v(&[3.0, 0.0]), &p).unwrap();
        assert_relative_eq!(d, 2.0, epsilon = 1e-10);
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn distance_from_inside_is_zero() {
        let p = VPolytope::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let (d, _) = distance_to_vpolytope(&v(&[0.2, 0.2]), &p).unwrap();
        assert!(d <= 1e-10, "got {}", d);
    }

    #[test]
    fn distance_to_corner() {
        let p = VPolytope::new(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        let (d, y) = distance_to_vpolytope(&v(&[2.0, 2.0]), &p).unwrap();
        // nearest point is the corner "between" both generators on the edge
        let expect = ((2.0 - 0.5f64).powi(2) * 2.0).sqrt();
        assert_relative_eq!(d, expect, epsilon = 1e-9);
        assert_relative_eq!(y[0] + y[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn min_norm_of_shifted_segment() {
        let pts = vec![v(&[1.0, 1.0]), v(&[-1.0, 1.0])];
        let (d, y) = min_norm_point(&pts).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-12);
        assert_relative_eq!(y[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(y[0], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn min_norm_containing_origin() {
        let pts = vec![v(&[1.0, 0.0]), v(&[-0.5, 0.8]), v(&[-0.5, -0.8])];
        let (d, _) = min_norm_point(&pts).unwrap();
        assert!(d <= 1e-9, "got {}", d);
    }
}
