//! Deterministic direction sets on the unit sphere.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` unit directions in dimension `d`: the coordinate axes first, then
/// seeded Gaussian directions (equally spaced angles in the plane).
pub fn sphere_directions(d: usize, n: usize, seed: u64) -> Vec<DVector<f64>> {
    assert!(d >= 1);
    if d == 2 {
        return (0..n)
            .map(|k| {
                let t = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
                DVector::from_column_slice(&[t.cos(), t.sin()])
            })
            .collect();
    }
    let mut dirs = Vec::with_capacity(n);
    for j in 0..d.min(n) {
        let mut e = DVector::zeros(d);
        e[j] = 1.0;
        dirs.push(e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < n {
        let v = gaussian_dir(d, &mut rng);
        dirs.push(v);
    }
    dirs
}

pub fn gaussian_dir(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| {
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        });
        let nrm = v.norm();
        if nrm > 1e-6 {
            return v / nrm;
        }
    }
}

/// Derivative-free local refinement of `f` over the unit sphere starting at
/// `u0`: pattern search over tangent perturbations with shrinking steps.
pub fn sphere_polish<F: Fn(&DVector<f64>) -> f64>(
    f: &F,
    u0: &DVector<f64>,
    iters: usize,
) -> (f64, DVector<f64>) {
    let d = u0.len();
    let mut u = u0.normalize();
    let mut best = f(&u);
    let mut step = 0.1;
    for _ in 0..iters {
        let mut improved = false;
        for j in 0..d {
            for s in [1.0, -1.0] {
                let mut cand = u.clone();
                cand[j] += s * step;
                let n = cand.norm();
                if n < 1e-12 {
                    continue;
                }
                cand /= n;
                let v = f(&cand);
                if v > best + 1e-15 {
                    best = v;
                    u = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-9 {
                break;
            }
        }
    }
    (best, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_deterministic() {
        let a = sphere_directions(5, 40, 7);
        let b = sphere_directions(5, 40, 7);
        assert_eq!(a.len(), 40);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.norm() - 1.0).abs() < 1e-12);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn planar_directions_cover_half_turn() {
        let dirs = sphere_directions(2, 8, 0);
        for w in dirs.windows(2) {
            let cross = w[0][0] * w[1][1] - w[0][1] * w[1][0];
            assert!(cross > 0.0, "angles must increase");
        }
    }

    #[test]
    fn polish_climbs_to_coordinate_peak() {
        let f = |u: &DVector<f64>| u[2];
        let start = DVector::from_column_slice(&[0.6, 0.6, 0.52915]).normalize();
        let (v, u) = sphere_polish(&f, &start, 200);
        assert!(v > 1.0 - 1e-9, "got {}", v);
        assert!((u[2] - 1.0).abs() < 1e-4);
    }
}
