//! Explicit normal-and-convenient domains (NCDs) in real affine space, the
//! non-singular real algebraic manifolds obtained by lifting them along
//! `f_j(x) = |y_j|^2`, and a sampling-based verifier for the level-set
//! structure of the height function `x1` on the lifted manifold.
//!
//! Pipeline: [`construct::build`] turns interval data `(t, labels)` into an
//! [`arrangement::Arrangement`]; [`lift::lift`] produces the defining
//! polynomials of the manifold; [`verify::run_suite`] checks every property
//! the construction promises.

pub mod arrangement;
pub mod construct;
pub mod error;
pub mod geom;
pub mod lift;
pub mod linalg;
pub mod plot;
pub mod poly;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use poly::{Polynomial, Rational};
