//! Vertex enumeration for symmetric H-polytopes by incremental cutting.
//!
//! Starts from a parallelotope spanned by `d` independent slabs and inserts
//! the remaining halfspaces one at a time. New vertices arise on edges
//! between kept and cut vertices; edges are recognised by the rank of the
//! common active constraint set. Facet enumeration of a V-polytope is vertex
//! enumeration of its polar.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::concrete::{dedupe_signed, prune_generators, HPolytope, VPolytope};

const DIM_CAP: usize = 10;
const VERTEX_CAP: usize = 100_000;
const ACT_TOL: f64 = 1e-9;

struct Vert {
    x: DVector<f64>,
    /// bitset over one-sided constraints processed so far
    active: Vec<u64>,
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn common_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// All vertices of `{x : <c_i, x> <= 1}` where the one-sided constraints
/// `c_i` come in +- pairs (a symmetric polytope).
pub(crate) fn vertex_enumeration(normals: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let dim = normals[0].len();
    if dim > DIM_CAP {
        return Err(Error::CapExceeded(format!(
            "vertex enumeration capped at dimension {}, got {}",
            DIM_CAP, dim
        )));
    }
    // one-sided constraint list: +a_k at 2k, -a_k at 2k+1
    let mut cons: Vec<DVector<f64>> = Vec::with_capacity(2 * normals.len());
    for a in normals {
        cons.push(a.clone());
        cons.push(-a);
    }
    let words = (cons.len() + 63) / 64;

    // greedy basis of d independent normals
    let mut basis: Vec<usize> = Vec::new();
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    for (k, a) in normals.iter().enumerate() {
        let mut trial = chosen.clone();
        trial.push(a.clone());
        let m = DMatrix::from_columns(&trial);
        if m.rank(1e-10 * (1.0 + m.norm())) == trial.len() {
            chosen.push(a.clone());
            basis.push(k);
            if basis.len() == dim {
                break;
            }
        }
    }
    if basis.len() < dim {
        return Err(Error::InvalidBody(
            "normals do not span; polytope unbounded".into(),
        ));
    }
    let a0 = DMatrix::from_rows(&chosen.iter().map(|c| c.transpose()).collect::<Vec<_>>());
    let a0_inv = a0
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular basis in vertex enumeration".into()))?;

    // parallelotope corners A0^{-1} s, s in {+-1}^d
    let mut verts: Vec<Vert> = Vec::with_capacity(1 << dim);
    for bits in 0..(1usize << dim) {
        let s = DVector::from_fn(dim, |i, _| if bits >> i & 1 == 1 { -1.0 } else { 1.0 });
        let x = &a0_inv * s;
        let mut active = vec![0u64; words];
        for (i, &k) in basis.iter().enumerate() {
            let side = if bits >> i & 1 == 1 { 2 * k + 1 } else { 2 * k };
            bit_set(&mut active, side);
        }
        verts.push(Vert { x, active });
    }

    let mut processed_sides: Vec<usize> = Vec::new();
    for &k in &basis {
        processed_sides.push(2 * k);
        processed_sides.push(2 * k + 1);
    }
    for k in 0..normals.len() {
        if basis.contains(&k) {
            continue;
        }
        for side in [2 * k, 2 * k + 1] {
            processed_sides.push(side);
            let c = &cons[side];
            let vals: Vec<f64> = verts.iter().map(|v| c.dot(&v.x)).collect();
            let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let any_out = vals.iter().any(|&t| t > 1.0 + ACT_TOL * scale);
            if !any_out {
                // tighten active sets where the new constraint is touching
                for (v, &t) in verts.iter_mut().zip(&vals) {
                    if (t - 1.0).abs() <= ACT_TOL * scale {
                        bit_set(&mut v.active, side);
                    }
                }
                continue;
            }
            // three-way split: vertices on the hyperplane stay (the
            // "crossing" of any of their edges would be the vertex itself)
            let mut kept: Vec<Vert> = Vec::new();
            let mut kept_vals: Vec<f64> = Vec::new();
            let mut cut: Vec<Vert> = Vec::new();
            let mut cut_vals: Vec<f64> = Vec::new();
            for (mut v, &t) in verts.drain(..).zip(&vals) {
                if t > 1.0 + ACT_TOL * scale {
                    cut.push(v);
                    cut_vals.push(t);
                } else {
                    if (t - 1.0).abs() <= ACT_TOL * scale {
                        bit_set(&mut v.active, side);
                    }
                    kept.push(v);
                    kept_vals.push(t);
                }
            }
            let mut new_verts: Vec<Vert> = Vec::new();
            for (u, &tu) in kept.iter().zip(&kept_vals) {
                if tu >= 1.0 - ACT_TOL * scale {
                    continue; // on the hyperplane; crossing degenerates to u
                }
                for (w, &tw) in cut.iter().zip(&cut_vals) {
                    if common_count(&u.active, &w.active) < dim - 1 {
                        continue;
                    }
                    // rank test on the common active normals
                    let mut rows: Vec<_> = Vec::new();
                    for i in 0..cons.len() {
                        let word = i / 64;
                        let bit = 1u64 << (i % 64);
                        if u.active[word] & w.active[word] & bit != 0 {
                            rows.push(cons[i].transpose());
                        }
                    }
                    let m = DMatrix::from_rows(&rows);
                    if m.rank(1e-9 * (1.0 + m.norm())) < dim - 1 {
                        continue;
                    }
                    let lam = (1.0 - tu) / (tw - tu);
                    let x = &u.x + (&w.x - &u.x) * lam;
                    let xscale = 1.0 + x.norm();
                    // degenerate cuts can reach the same point along several
                    // edges, or land on a vertex already kept on the plane
                    let already = new_verts
                        .iter()
                        .map(|v| &v.x)
                        .chain(
                            kept.iter()
                                .zip(&kept_vals)
                                .filter(|(_, &t)| t >= 1.0 - ACT_TOL * scale)
                                .map(|(v, _)| &v.x),
                        )
                        .any(|q| (q - &x).norm() <= 1e-9 * xscale);
                    if already {
                        continue;
                    }
                    // full rescan of processed constraints: under degeneracy
                    // the crossing point may be tight for more than the
                    // inherited common set, and stale sets would hide edges
                    let mut active = vec![0u64; words];
                    for &s in &processed_sides {
                        let t = cons[s].dot(&x);
                        if (t - 1.0).abs() <= ACT_TOL * (1.0 + t.abs()) {
                            bit_set(&mut active, s);
                        }
                    }
                    new_verts.push(Vert { x, active });
                }
            }
            verts = kept;
            verts.extend(new_verts);
            if verts.len() > VERTEX_CAP {
                return Err(Error::CapExceeded(format!(
                    "vertex enumeration exceeded {} intermediate vertices",
                    VERTEX_CAP
                )));
            }
        }
    }

    // re-derive exact activity and drop near-duplicates
    let mut points: Vec<DVector<f64>> = verts.into_iter().map(|v| v.x).collect();
    points = dedupe_signed(points, 1e-9);
    Ok(points)
}

pub(crate) fn hpoly_to_vpoly(h: &HPolytope) -> Result<VPolytope> {
    let mut pts = vertex_enumeration(h.normals())?;
    if pts.len() <= 400 {
        pts = prune_generators(pts);
    }
    VPolytope::new_unpruned(pts)
}

pub(crate) fn vpoly_to_hpoly(v: &VPolytope) -> Result<HPolytope> {
    // facet normals of conv(+-G) are the vertices of {x : |<g, x>| <= 1}
    let mut pts = vertex_enumeration(v.generators())?;
    if pts.len() <= 400 {
        pts = prune_generators(pts);
    }
    HPolytope::new_unpruned(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn cube_vertices_from_slabs() {
        let h = HPolytope::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])])
            .unwrap();
        let verts = hpoly_to_vpoly(&h).unwrap();
        assert_eq!(verts.generators().len(), 4); // 8 corners, 4 up to sign
        for g in verts.generators() {
            assert_relative_eq!(g.amax(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(g.norm(), 3f64.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn octahedron_facets_from_generators() {
        let p = VPolytope::new(vec![
            v(&[1.0, 0.0, 0.0]),
            v(&[0.0, 1.0, 0.0]),
            v(&[0.0, 0.0, 1.0]),
        ])
        .unwrap();
        let h = vpoly_to_hpoly(&p).unwrap();
        assert_eq!(h.normals().len(), 4); // 8 facets, 4 up to sign
        for a in h.normals() {
            for c in a.iter() {
                assert_relative_eq!(c.abs(), 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hexagon_round_trip() {
        // B1 + 0.5 Binf in the plane: an octagon
        let gens = vec![
            v(&[1.5, 0.5]),
            v(&[0.5, 1.5]),
            v(&[1.5, -0.5]),
            v(&[0.5, -1.5]),
        ];
        let p = VPolytope::new(gens.clone()).unwrap();
        let h = vpoly_to_hpoly(&p).unwrap();
        assert_eq!(h.normals().len(), 4);
        let back = hpoly_to_vpoly(&h).unwrap();
        assert_eq!(back.generators().len(), 4);
        for g in gens {
            let (gauge, _) = back.gauge_witness(&g).unwrap();
            assert_relative_eq!(gauge, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn skewed_slab_vertices() {
        let h = HPolytope::new(vec![v(&[1.0, 0.2]), v(&[-0.3, 1.0])]).unwrap();
        let verts = vertex_enumeration(h.normals()).unwrap();
        assert_eq!(verts.len(), 2);
        for x in &verts {
            assert_relative_eq!(x.dot(&v(&[1.0, 0.2])).abs(), 1.0, epsilon = 1e-9);
            assert_relative_eq!(x.dot(&v(&[-0.3, 1.0])).abs(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_vertex_multiplicity_is_handled() {
        // square cut exactly through its corners: diamond constraints touch
        // the corners, producing degenerate (4-active) vertices in 2D
        let h = HPolytope::new_unpruned(vec![
            v(&[1.0, 0.0]),
            v(&[0.0, 1.0]),
            v(&[0.5, 0.5]),
            v(&[0.5, -0.5]),
        ])
        .unwrap();
        let verts = vertex_enumeration(h.normals()).unwrap();
        // still the square's corners
        assert_eq!(verts.len(), 2);
        for x in &verts {
            assert_relative_eq!(x.amax(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        let dim = 11;
        let normals: Vec<DVector<f64>> = (0..dim)
            .map(|i| {
                let mut a = DVector::zeros(dim);
                a[i] = 1.0;
                a
            })
            .collect();
        assert!(matches!(
            vertex_enumeration(&normals),
            Err(Error::CapExceeded(_))
        ));
    }
}
