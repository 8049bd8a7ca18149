//! Difference-of-convex decompositions of multivariate polynomials.
//!
//! A polynomial `f` is split as `f = g - h` with `g` and `h` certified convex
//! through algebraic certificates on the Hessian form `y^T H(x) y`:
//! diagonally dominant (LP), scaled diagonally dominant (SOCP) or positive
//! semidefinite (SDP) Gram matrices. The decompositions drive the
//! convex-concave procedure for nonconvex polynomial minimization.
//!
//! Module map:
//!
//! * [`poly`]: sparse polynomials, calculus, JSON wire format.
//! * [`conic`]: solver-agnostic cone programs and the Clarabel backend.
//! * [`certify`]: monomial bases, Gram matching, dsos/sdsos/sos certificates.
//! * [`sphere`]: exact sphere integrals and the average-trace functional.
//! * [`dcd`]: decomposition programs, dominance, interior constructions.
//! * [`ccp`]: the convex-concave procedure and its multi-decomposition variant.
//! * [`bench`]: experiment harness and reports.

// Links the system OpenBLAS used by the SDP backend.
extern crate openblas_src;

pub mod bench;
pub mod ccp;
pub mod certify;
pub mod conic;
pub mod dcd;
mod error;
pub mod linalg;
pub mod poly;
pub mod sphere;

pub use error::{Error, Result};
