//! Exact-arithmetic toolkit for lift-and-project relaxations and extended
//! formulation lower bounds.
//!
//! * [`exactlp`]: rational LP, Fourier-Motzkin projection, redundancy removal.
//! * [`hull`]: integer-point enumeration, canonical product relaxations in
//!   vertex form, hull membership and conflicting-set tests.
//! * [`sa`]: Sherali-Adams lifting, projection and constraint counting.
//! * [`product`]: product sections, indicator and Fourier coefficients, and the
//!   translation of extended formulations to (mixed) product relaxations.
//! * [`cfl`]: the capacitated facility location instance family, its
//!   distributions, core vectors and every identity the lower bound relies on.
//! * [`corelab`]: cores, conflict hypergraphs and chromatic lower bounds.

pub mod cfl;
pub mod cli;
pub mod corelab;
mod error;
pub mod exactlp;
pub mod hull;
pub mod product;
pub mod sa;

pub use error::{Error, Result};
pub use exactlp::{HPolyhedron, LpResult, LpStatus, Rational, Relation, Row, Sense};
