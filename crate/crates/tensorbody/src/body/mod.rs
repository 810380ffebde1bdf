//! 0-symmetric convex bodies and their calculus.
//!
//! Concrete bodies are symmetric V-polytopes `conv(+-g_1, ..., +-g_m)`,
//! symmetric H-polytopes `{x : |<a_i, x>| <= 1}`, and ellipsoids
//! `{x : x^T M x <= 1}`. On top of those sit exact analytic composites:
//! projective and injective tensor products with arbitrary factor bodies,
//! Minkowski sums, convex hulls of unions, intersections, polars, and
//! invertible linear images. Composites keep exact support oracles; their
//! gauges are evaluated by a cutting-plane scheme against those oracles.

mod analytic;
mod concrete;
mod dd;
pub(crate) mod metrics;
mod mnp;
mod ops;

pub use concrete::{Ellipsoid, HPolytope, VPolytope};
pub use metrics::{hausdorff, nu, Hausdorff};
pub use mnp::distance_to_vpolytope;
pub use ops::{conv_union, convert_rep, intersect, linear_image, minkowski_sum, LinearMap, Rep};

use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::TensorShape;

/// Tolerance below which a generator or normal counts as redundant.
pub const PRUNE_TOL: f64 = 1e-9;

/// Representation of a 0-symmetric convex body.
#[derive(Debug, Clone)]
pub enum BodyRep {
    VPoly(VPolytope),
    HPoly(HPolytope),
    Ellipsoid(Ellipsoid),
    /// Projective tensor product of factor bodies (exact, analytic).
    PiProd(Vec<Body>),
    /// Injective tensor product of factor bodies (exact, analytic).
    EpsProd(Vec<Body>),
    /// Minkowski sum of the parts.
    Sum(Vec<Body>),
    /// Convex hull of the union of the parts.
    Hull(Vec<Body>),
    /// Intersection of the parts.
    Meet(Vec<Body>),
    /// Polar of the inner body.
    Polar(Box<Body>),
    /// Image under an invertible linear map (matrix and its inverse).
    Mapped {
        mat: DMatrix<f64>,
        inv: DMatrix<f64>,
        inner: Box<Body>,
    },
}

/// A 0-symmetric convex body, optionally tagged with a tensor shape.
#[derive(Debug)]
pub struct Body {
    rep: BodyRep,
    shape: Option<TensorShape>,
    vcache: OnceLock<Arc<VPolytope>>,
    hcache: OnceLock<Arc<HPolytope>>,
    /// Accumulated boundary points used to warm-start cutting-plane gauge
    /// evaluations of composite representations.
    cut_pool: Mutex<Vec<DVector<f64>>>,
    /// Lazily built polar product an injective product dualizes through.
    dual_prod: OnceLock<Arc<Body>>,
}

impl Clone for Body {
    fn clone(&self) -> Self {
        Body {
            rep: self.rep.clone(),
            shape: self.shape.clone(),
            vcache: self.vcache.clone(),
            hcache: self.hcache.clone(),
            cut_pool: Mutex::new(self.cut_pool.lock().map(|p| p.clone()).unwrap_or_default()),
            dual_prod: self.dual_prod.clone(),
        }
    }
}

impl Body {
    pub fn new(rep: BodyRep) -> Self {
        Body {
            rep,
            shape: None,
            vcache: OnceLock::new(),
            hcache: OnceLock::new(),
            cut_pool: Mutex::new(Vec::new()),
            dual_prod: OnceLock::new(),
        }
    }

    pub fn with_shape(mut self, shape: TensorShape) -> Result<Self> {
        if shape.total_dim() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "shape {} has total dimension {}, body has dimension {}",
                shape,
                shape.total_dim(),
                self.dim()
            )));
        }
        self.shape = Some(shape);
        Ok(self)
    }

    pub fn rep(&self) -> &BodyRep {
        &self.rep
    }

    pub fn shape(&self) -> Option<&TensorShape> {
        self.shape.as_ref()
    }

    /// Drops any cached conversions but keeps the representation.
    pub(crate) fn fresh(rep: BodyRep, shape: Option<TensorShape>) -> Self {
        Body {
            rep,
            shape,
            vcache: OnceLock::new(),
            hcache: OnceLock::new(),
            cut_pool: Mutex::new(Vec::new()),
            dual_prod: OnceLock::new(),
        }
    }

    pub(crate) fn cut_pool(&self) -> &Mutex<Vec<DVector<f64>>> {
        &self.cut_pool
    }

    /// Shared polar product for injective-product duality; built once so its
    /// warm-start pools survive across evaluations.
    pub(crate) fn dual_prod(&self, build: impl FnOnce() -> Result<Body>) -> Result<Arc<Body>> {
        if let Some(a) = self.dual_prod.get() {
            return Ok(a.clone());
        }
        let built = Arc::new(build()?);
        Ok(self.dual_prod.get_or_init(|| built).clone())
    }

    pub fn from_generators(gens: Vec<DVector<f64>>) -> Result<Self> {
        Ok(Body::new(BodyRep::VPoly(VPolytope::new(gens)?)))
    }

    pub fn from_normals(normals: Vec<DVector<f64>>) -> Result<Self> {
        Ok(Body::new(BodyRep::HPoly(HPolytope::new(normals)?)))
    }

    pub fn from_shape_matrix(m: DMatrix<f64>) -> Result<Self> {
        Ok(Body::new(BodyRep::Ellipsoid(Ellipsoid::new(m)?)))
    }

    /// Euclidean unit ball.
    pub fn ball(dim: usize) -> Self {
        Body::new(BodyRep::Ellipsoid(
            Ellipsoid::new(DMatrix::identity(dim, dim)).expect("identity is SPD"),
        ))
    }

    /// Unit ball of the l_p norm for p in {1, 2, inf}.
    ///
    /// `p = 1` and `p = inf` come back as V-polytopes (cross-polytope and
    /// sign-vector hull), `p = 2` as an ellipsoid.
    pub fn lp_ball(p: LpKind, dim: usize) -> Result<Self> {
        match p {
            LpKind::One => {
                let gens = (0..dim)
                    .map(|i| {
                        let mut v = DVector::zeros(dim);
                        v[i] = 1.0;
                        v
                    })
                    .collect();
                Body::from_generators(gens)
            }
            LpKind::Two => Ok(Body::ball(dim)),
            LpKind::Inf => {
                if dim > 12 {
                    return Err(Error::CapExceeded(format!(
                        "sign-vector hull in dimension {} is too large",
                        dim
                    )));
                }
                let mut gens = Vec::with_capacity(1usize << (dim - 1));
                for bits in 0..(1usize << (dim - 1)) {
                    let mut v = DVector::from_element(dim, 1.0);
                    for j in 1..dim {
                        if bits >> (j - 1) & 1 == 1 {
                            v[j] = -1.0;
                        }
                    }
                    gens.push(v);
                }
                Body::from_generators(gens)
            }
        }
    }

    /// Random symmetric polytope: `gens` generators drawn uniformly on the
    /// sphere and scaled by a uniform radius in `[0.5, 1.5]`.
    pub fn random_polytope(dim: usize, gens: usize, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _attempt in 0..32 {
            let g: Vec<DVector<f64>> = (0..gens.max(dim))
                .map(|_| {
                    let mut v = DVector::from_fn(dim, |_, _| {
                        let u1: f64 = rng.gen_range(1e-12..1.0);
                        let u2: f64 = rng.gen_range(0.0..1.0);
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                    });
                    let n = v.norm();
                    if n > 1e-9 {
                        v /= n;
                    }
                    v * rng.gen_range(0.5..1.5)
                })
                .collect();
            if let Ok(b) = Body::from_generators(g) {
                return Ok(b);
            }
        }
        Err(Error::Numerical("random polytope generation failed".into()))
    }

    pub fn dim(&self) -> usize {
        match &self.rep {
            BodyRep::VPoly(v) => v.dim(),
            BodyRep::HPoly(h) => h.dim(),
            BodyRep::Ellipsoid(e) => e.dim(),
            BodyRep::PiProd(fs) | BodyRep::EpsProd(fs) => {
                fs.iter().map(|f| f.dim()).product()
            }
            BodyRep::Sum(parts) | BodyRep::Hull(parts) | BodyRep::Meet(parts) => {
                parts[0].dim()
            }
            BodyRep::Polar(b) => b.dim(),
            BodyRep::Mapped { inner, .. } => inner.dim(),
        }
    }

    /// Minkowski gauge of the body at `x`.
    pub fn gauge(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.gauge_witness(x)?.0)
    }

    /// Gauge together with a dual witness `u` in the polar body satisfying
    /// `<x, u> = gauge(x)`; `u` is a subgradient of the gauge at `x`.
    pub fn gauge_witness(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        analytic::gauge_witness(self, x)
    }

    /// Support function of the body at `u`.
    pub fn support(&self, u: &DVector<f64>) -> Result<f64> {
        Ok(self.support_witness(u)?.0)
    }

    /// Support value together with a point of the body attaining it.
    pub fn support_witness(&self, u: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        analytic::support_witness(self, u)
    }

    /// Structural polar body. Exact for every representation.
    pub fn polar(&self) -> Result<Body> {
        ops::polar(self)
    }

    /// Scales the body by `lambda > 0`.
    pub fn scale(&self, lambda: f64) -> Result<Body> {
        ops::scale(self, lambda)
    }

    /// True when the representation is one of the three concrete kinds.
    pub fn is_concrete(&self) -> bool {
        matches!(
            self.rep,
            BodyRep::VPoly(_) | BodyRep::HPoly(_) | BodyRep::Ellipsoid(_)
        )
    }

    /// True when the body can be converted to an exact V/H-polytope pair.
    pub fn is_polytopal(&self) -> bool {
        matches!(self.rep, BodyRep::VPoly(_) | BodyRep::HPoly(_))
    }

    /// V-polytope form, computed (and cached) through facet/vertex
    /// enumeration when necessary. Errors for non-polytopal bodies.
    pub fn as_vpoly(&self) -> Result<Arc<VPolytope>> {
        if let Some(v) = self.vcache.get() {
            return Ok(v.clone());
        }
        let v = match &self.rep {
            BodyRep::VPoly(v) => v.clone(),
            BodyRep::HPoly(h) => dd::hpoly_to_vpoly(h)?,
            _ => {
                return Err(Error::UnsupportedRep(
                    "exact V-polytope form requires a polytopal body".into(),
                ))
            }
        };
        let arc = Arc::new(v);
        let _ = self.vcache.set(arc.clone());
        Ok(self.vcache.get().expect("just set").clone())
    }

    /// H-polytope form, cached, via facet enumeration when necessary.
    pub fn as_hpoly(&self) -> Result<Arc<HPolytope>> {
        if let Some(h) = self.hcache.get() {
            return Ok(h.clone());
        }
        let h = match &self.rep {
            BodyRep::HPoly(h) => h.clone(),
            BodyRep::VPoly(v) => dd::vpoly_to_hpoly(v)?,
            _ => {
                return Err(Error::UnsupportedRep(
                    "exact H-polytope form requires a polytopal body".into(),
                ))
            }
        };
        let arc = Arc::new(h);
        let _ = self.hcache.set(arc.clone());
        Ok(self.hcache.get().expect("just set").clone())
    }

    /// Circumradius upper bound (exact for concrete bodies and pi-products).
    pub fn circumradius_bound(&self) -> f64 {
        match &self.rep {
            BodyRep::VPoly(v) => v
                .generators()
                .iter()
                .map(|g| g.norm())
                .fold(0.0, f64::max),
            BodyRep::HPoly(h) => h.circumradius_bound(),
            BodyRep::Ellipsoid(e) => e.circumradius(),
            BodyRep::PiProd(fs) => fs.iter().map(|f| f.circumradius_bound()).product(),
            BodyRep::EpsProd(fs) => {
                let pi: f64 = fs.iter().map(|f| f.circumradius_bound()).product();
                let dims: Vec<usize> = fs.iter().map(|f| f.dim()).collect();
                let blow: usize = dims[..dims.len() - 1].iter().product();
                pi * blow as f64
            }
            BodyRep::Sum(parts) => parts.iter().map(|p| p.circumradius_bound()).sum(),
            BodyRep::Hull(parts) => parts
                .iter()
                .map(|p| p.circumradius_bound())
                .fold(0.0, f64::max),
            BodyRep::Meet(parts) => parts
                .iter()
                .map(|p| p.circumradius_bound())
                .fold(f64::INFINITY, f64::min),
            BodyRep::Polar(b) => match b.polar() {
                // circumradius of the polar is 1/inradius of the inner body;
                // fall back to probing supports when structure gives nothing.
                Ok(_) => {
                    let d = b.dim();
                    let mut r: f64 = 0.0;
                    for j in 0..d {
                        let mut u = DVector::zeros(d);
                        u[j] = 1.0;
                        if let Ok(h) = b.gauge(&u) {
                            r = r.max(h);
                        }
                    }
                    r * (d as f64).sqrt()
                }
                Err(_) => f64::INFINITY,
            },
            BodyRep::Mapped { mat, inner, .. } => {
                let op = mat.norm();
                op * inner.circumradius_bound()
            }
        }
    }
}

/// Which l_p ball to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpKind {
    One,
    Two,
    Inf,
}
