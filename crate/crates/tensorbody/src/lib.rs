//! Computational convex geometry of tensorial bodies.
//!
//! The crate works with 0-symmetric convex bodies given as symmetric
//! V-polytopes, H-polytopes, or ellipsoids, plus exact analytic composites of
//! those (tensor products, Minkowski sums, hulls, intersections, polars).
//! On top of the body calculus it provides projective, injective, and
//! Hilbertian tensor products, Lowner ellipsoids, tensorial certification and
//! retractions, homotopies between tensorial bodies, and a Banach-Mazur
//! distance estimator restricted to tensor-structured linear maps.

pub mod bm;
pub mod body;
pub mod calculus;
pub mod error;
pub mod linalg;
pub mod lowner;
pub mod par;
pub mod products;
pub mod sampling;
pub(crate) mod simplex;

pub use bm::{bm_estimate, orbit_invariance_check, BmEstimate, BmMode};
pub use body::{Body, BodyRep, Ellipsoid, HPolytope, VPolytope};
pub use error::{Error, Result};
pub use linalg::{kron_mat, kron_vec, FactorMap, TensorShape};
