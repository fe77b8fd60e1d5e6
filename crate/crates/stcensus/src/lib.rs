//! Frobenius-trace statistics for elliptic curves, K3 surfaces X_λ, and
//! double quadric surfaces over prime fields, with prime censuses compared
//! against the exact limiting laws (continuous densities plus atoms) of the
//! corresponding equidistribution statements.
//!
//! Layout:
//! - [`arith`]: rationals, sieving, quadratic characters, Kronecker symbols
//! - [`charsums`]: O(p²) character-sum oracle (finite-field hypergeometric)
//! - [`curves`]: curve models, O(p) trace sweeps, CM metadata, trace cache
//! - [`surfaces`]: normalized K3 and double-quadric traces
//! - [`measures`]: the limiting laws, their CDFs, and interval measures
//! - [`approx`]: Chebyshev U and Beurling–Selberg sandwich polynomials
//! - [`census`]: empirical censuses, discrepancy, envelope ratios, reports
//! - [`cli`]: command-line front end

pub mod approx;
pub mod arith;
pub mod census;
pub mod charsums;
pub mod cli;
pub mod curves;
pub mod error;
pub mod measures;
pub mod surfaces;

pub use error::{Error, Result};
