//! Symmetric eigendecomposition by cyclic Jacobi rotations, and SPD matrix
//! functions built on it. Matrices here are small (tensor dimension <= 16),
//! where Jacobi is accurate and has no trouble with clustered spectra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const OFF_DIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 64;

/// Eigendecomposition `M = Q diag(vals) Q^T` of a symmetric matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::ShapeMismatch("eigendecomposition of non-square matrix".into()));
    }
    let scale = m.norm().max(1.0);
    if (m - m.transpose()).norm() > 1e-10 * scale {
        return Err(Error::NotPositiveDefinite("matrix is not symmetric".into()));
    }
    let mut a = 0.5 * (m + m.transpose());
    let mut q = DMatrix::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= OFF_DIAG_TOL * scale {
            break;
        }
        for p in 0..n {
            for qq in (p + 1)..n {
                let apq = a[(p, qq)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[(qq, qq)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J with the rotation in the (p, q) plane
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, qq)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, qq)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(qq, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(qq, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, qq)];
                    q[(k, p)] = c * qkp - s * qkq;
                    q[(k, qq)] = s * qkp + c * qkq;
                }
            }
        }
    }
    let vals = DVector::from_fn(n, |i, _| a[(i, i)]);
    Ok((q, vals))
}

fn spd_apply<F: Fn(f64) -> f64>(m: &DMatrix<f64>, f: F, what: &str) -> Result<DMatrix<f64>> {
    let (q, vals) = sym_eigen(m)?;
    let vmax = vals.iter().cloned().fold(0.0f64, f64::max);
    for v in vals.iter() {
        if *v <= 1e-14 * vmax.max(1.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "{}: eigenvalue {:.3e} is not positive",
                what, v
            )));
        }
    }
    let d = DMatrix::from_diagonal(&vals.map(f));
    Ok(&q * d * q.transpose())
}

/// Unique SPD square root of an SPD matrix.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_apply(m, f64::sqrt, "spd_sqrt")
}

/// Inverse of the SPD square root.
pub fn spd_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_apply(m, |v| 1.0 / v.sqrt(), "spd_inv_sqrt")
}

/// Inverse of an SPD matrix through its eigendecomposition.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_apply(m, |v| 1.0 / v, "spd_inverse")
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_lambda_max(m: &DMatrix<f64>) -> Result<f64> {
    let (_, vals) = sym_eigen(m)?;
    Ok(vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_known_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (q, vals) = sym_eigen(&m).unwrap();
        let mut v: Vec<f64> = vals.iter().cloned().collect();
        v.sort_by(f64::total_cmp);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 3.0).abs() < 1e-12);
        let rec = &q * DMatrix::from_diagonal(&vals) * q.transpose();
        assert!((rec - m).norm() < 1e-12);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let s = spd_sqrt(&m).unwrap();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((s[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(s[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for d in [2usize, 3, 4, 6, 9] {
            let g = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            let m = &g * g.transpose() + DMatrix::identity(d, d) * 0.1;
            let s = spd_sqrt(&m).unwrap();
            assert!((&s * &s - &m).norm() <= 1e-10 * m.norm());
            let si = spd_inv_sqrt(&m).unwrap();
            assert!((&s * &si - DMatrix::identity(d, d)).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(spd_sqrt(&m).is_err());
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(sym_eigen(&m).is_err());
    }
}
