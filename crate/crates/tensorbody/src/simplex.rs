//! Dense two-phase simplex for the small LPs this crate generates: gauge
//! evaluations on V-polytopes, supports of H-polytopes, redundancy pruning,
//! and cutting-plane master problems. Problems have at most a few dozen rows
//! and a few thousand columns, so a dense tableau with Dantzig pricing and a
//! Bland fallback is both fast and dependable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 20_000;
/// Pivots between exact recomputations of the reduced-cost row.
const REFRESH_EVERY: usize = 48;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: DVector<f64>,
    /// Duals of the equality constraints.
    pub dual: DVector<f64>,
}

/// Solves `min c^T x  s.t.  A x = b, x >= 0`.
pub fn solve_min(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LpSolution> {
    let m = a.nrows();
    let n = a.ncols();
    if c.len() != n || b.len() != m {
        return Err(Error::ShapeMismatch("LP dimensions disagree".into()));
    }
    if m == 0 {
        return Ok(LpSolution {
            value: 0.0,
            x: DVector::zeros(n),
            dual: DVector::zeros(0),
        });
    }

    // Tableau: m rows, columns [original | artificial | rhs], plus a cost row.
    // Rows with negative rhs are flipped so the artificial basis is feasible;
    // the flips must be undone when reading the duals back out.
    let cols = n + m + 1;
    let rhs = n + m;
    let mut t = DMatrix::zeros(m + 1, cols);
    let mut flips = vec![1.0f64; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        flips[i] = flip;
        for j in 0..n {
            t[(i, j)] = flip * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, rhs)] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Pristine copy of the constraint rows; refactorization rebuilds the
    // working tableau from it whenever pivot drift needs flushing.
    let mut orig = t.clone();

    // Phase 1: minimize the artificial sum.
    refresh_costs(&mut t, &basis, n, None);
    run_simplex(&mut t, &mut basis, &orig, n, None)?;
    let scale = b.amax().max(1.0);
    if -t[(m, rhs)] > FEAS_TOL * scale {
        return Err(Error::Numerical(format!(
            "LP infeasible (phase-1 residual {:.3e})",
            -t[(m, rhs)]
        )));
    }

    // Drive leftover artificials out of the basis where possible, pivoting on
    // the largest real entry for stability.
    refactorize(&mut t, &basis, &orig)?;
    for i in 0..m {
        if basis[i] >= n {
            let mut best: Option<usize> = None;
            let mut best_a = 1e-8;
            for j in 0..n {
                if t[(i, j)].abs() > best_a {
                    best_a = t[(i, j)].abs();
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                pivot(&mut t, &mut basis, i, j);
            } else {
                // Redundant row: blank it in both the tableau and the pristine
                // copy (keeping the artificial slot) so no later pass revives
                // its sub-threshold junk.
                for j in 0..cols {
                    t[(i, j)] = 0.0;
                    orig[(i, j)] = 0.0;
                }
                t[(i, n + i)] = 1.0;
                orig[(i, n + i)] = 1.0;
            }
        }
    }

    // Phase 2: install the real costs reduced over the current basis.
    refresh_costs(&mut t, &basis, n, Some(c));
    run_simplex(&mut t, &mut basis, &orig, n, Some(c))?;

    let mut x = DVector::zeros(n);
    for (i, &bj) in basis.iter().enumerate() {
        if bj < n {
            x[bj] = t[(i, rhs)];
        }
    }
    // Duals are the negated reduced costs of the artificial columns, mapped
    // back through the row flips.
    let dual = DVector::from_fn(m, |i, _| -t[(m, n + i)] * flips[i]);
    Ok(LpSolution {
        value: -t[(m, rhs)],
        x,
        dual,
    })
}

/// Recomputes the reduced-cost row exactly from the current tableau rows.
/// `costs` holds the real objective; `None` means the phase-1 objective
/// (unit cost on every artificial column).
fn refresh_costs(
    t: &mut DMatrix<f64>,
    basis: &[usize],
    n_real: usize,
    costs: Option<&DVector<f64>>,
) {
    let m = basis.len();
    let cols = t.ncols();
    let cost_of = |j: usize| -> f64 {
        match costs {
            Some(c) => {
                if j < n_real {
                    c[j]
                } else {
                    0.0
                }
            }
            None => {
                if j >= n_real && j + 1 < cols {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    for j in 0..cols {
        let mut s = if j + 1 < cols { cost_of(j) } else { 0.0 };
        for i in 0..m {
            let cb = cost_of(basis[i]);
            if cb != 0.0 {
                s -= cb * t[(i, j)];
            }
        }
        t[(m, j)] = s;
    }
}

/// Rebuilds the constraint rows as `B⁻¹ · orig` for the current basis `B`,
/// collapsing accumulated pivot drift into one dense solve. The basis
/// matrices here are tiny (one row per tensor coordinate), so this is cheap
/// enough to run at every decision point.
fn refactorize(t: &mut DMatrix<f64>, basis: &[usize], orig: &DMatrix<f64>) -> Result<()> {
    let m = basis.len();
    let mut bmat = DMatrix::zeros(m, m);
    for (k, &bj) in basis.iter().enumerate() {
        for i in 0..m {
            bmat[(i, k)] = orig[(i, bj)];
        }
    }
    let lu = bmat.full_piv_lu();
    let body = lu
        .solve(&orig.rows(0, m).clone_owned())
        .ok_or_else(|| Error::Numerical("singular working basis".into()))?;
    t.rows_mut(0, m).copy_from(&body);
    Ok(())
}

fn run_simplex(
    t: &mut DMatrix<f64>,
    basis: &mut [usize],
    orig: &DMatrix<f64>,
    n_real: usize,
    costs: Option<&DVector<f64>>,
) -> Result<()> {
    let phase1 = costs.is_none();
    let m = basis.len();
    let cols = t.ncols();
    let rhs = cols - 1;
    let allowed = if phase1 { cols - 1 } else { n_real };
    let mut stall = 0usize;
    let mut last_obj = t[(m, rhs)];
    // Columns the exact repricing says cannot help; they never re-enter.
    let mut retired = vec![false; allowed];
    let mut since_refresh = 0usize;
    let mut verified = false;
    let mut last_stuck: Option<usize> = None;

    let apply_retired = |t: &mut DMatrix<f64>, retired: &[bool]| {
        for (j, &r) in retired.iter().enumerate() {
            if r {
                t[(m, j)] = 0.0;
            }
        }
    };

    for _iter in 0..MAX_ITERS {
        if since_refresh >= REFRESH_EVERY {
            refactorize(t, basis, orig)?;
            refresh_costs(t, basis, n_real, costs);
            apply_retired(t, &retired);
            since_refresh = 0;
        }
        let bland = stall > 2 * (m + allowed);
        // Entering column
        let mut enter: Option<usize> = None;
        if bland {
            for j in 0..allowed {
                if !retired[j] && t[(m, j)] < -COST_TOL {
                    enter = Some(j);
                    break;
                }
            }
        } else {
            let mut best = -COST_TOL;
            for j in 0..allowed {
                if !retired[j] && t[(m, j)] < best {
                    best = t[(m, j)];
                    enter = Some(j);
                }
            }
        }
        let Some(j) = enter else {
            // Confirm optimality against a freshly refactorized tableau once,
            // so accumulated drift cannot stop the solve early.
            if verified {
                return Ok(());
            }
            refactorize(t, basis, orig)?;
            refresh_costs(t, basis, n_real, costs);
            apply_retired(t, &retired);
            since_refresh = 0;
            verified = true;
            continue;
        };

        // Ratio test; ties prefer the larger pivot element for stability,
        // except under Bland's rule where the lowest basis index wins.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let aij = t[(i, j)];
            if aij > PIVOT_TOL {
                let ratio = t[(i, rhs)] / aij;
                let better = ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.map_or(true, |li| {
                            if bland {
                                basis[i] < basis[li]
                            } else {
                                aij > t[(li, j)]
                            }
                        }));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(i) = leave else {
            // No admissible pivot. Rebuild the column from pristine data once
            // before judging it; drift routinely manufactures these.
            if last_stuck != Some(j) {
                refactorize(t, basis, orig)?;
                refresh_costs(t, basis, n_real, costs);
                apply_retired(t, &retired);
                since_refresh = 0;
                last_stuck = Some(j);
                continue;
            }
            let rc = t[(m, j)];
            let cmax = costs.map_or(1.0, |c| c.amax().max(1.0));
            // Phase 1 minimizes a sum of nonnegative variables and cannot be
            // unbounded, and an exactly repriced column that still offers no
            // pivot with marginal cost is degeneracy; either way the column
            // cannot help.
            if phase1 || rc >= -1e-8 * cmax {
                retired[j] = true;
                t[(m, j)] = 0.0;
                verified = false;
                last_stuck = None;
                continue;
            }
            return Err(Error::Numerical("LP unbounded".into()));
        };
        pivot(t, basis, i, j);
        verified = false;
        last_stuck = None;
        since_refresh += 1;

        let obj = t[(m, rhs)];
        if (obj - last_obj).abs() <= 1e-13 * (1.0 + obj.abs()) {
            stall += 1;
        } else {
            stall = 0;
            last_obj = obj;
        }
    }
    Err(Error::Numerical("simplex iteration cap reached".into()))
}

fn pivot(t: &mut DMatrix<f64>, basis: &mut [usize], row: usize, col: usize) {
    let cols = t.ncols();
    let p = t[(row, col)];
    for j in 0..cols {
        t[(row, j)] /= p;
    }
    for i in 0..t.nrows() {
        if i != row {
            let f = t[(i, col)];
            if f != 0.0 {
                for j in 0..cols {
                    t[(i, j)] -= f * t[(row, j)];
                }
            }
        }
    }
    basis[row] = col;
}

/// Value and witnesses of `min sum(lambda)  s.t.  [G | -G] lambda = x`.
///
/// For `G` the generator columns of a symmetric V-polytope this is the gauge
/// of the polytope at `x`; the equality duals `y` land in the polar body and
/// satisfy `<x, y> = value`, which makes them support witnesses for the
/// polar's support problems.
pub fn gauge_lp(generators: &[DVector<f64>], x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let d = x.len();
    let m = generators.len();
    if m == 0 {
        return Err(Error::InvalidBody("no generators".into()));
    }
    let nrm = x.norm();
    if nrm == 0.0 {
        return Ok((0.0, DVector::zeros(d)));
    }
    // Solve at unit scale for conditioning, then scale back.
    let xs = x / nrm;
    let mut a = DMatrix::zeros(d, 2 * m);
    for (j, g) in generators.iter().enumerate() {
        for i in 0..d {
            a[(i, j)] = g[i];
            a[(i, m + j)] = -g[i];
        }
    }
    let c = DVector::from_element(2 * m, 1.0);
    let sol = solve_min(&c, &a, &xs)?;
    Ok((sol.value * nrm, sol.dual))
}
