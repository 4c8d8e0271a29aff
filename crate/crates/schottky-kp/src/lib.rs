//! Numerics for Schottky-uniformized algebraic curves and their KP solutions.
//!
//! The crate builds genus-`g` Schottky groups from stable-graph moduli data,
//! evaluates abelian differentials of the three kinds as group series, computes
//! multiplicative periods and the period matrix, evaluates Riemann theta and
//! tau functions, verifies the KP equation and hierarchy residuals, and follows
//! degenerating families down to soliton tau functions, including real
//! (M-curve) data.
//!
//! Everything is plain double-precision arithmetic with explicit truncation
//! policies; all enumeration and reduction orders are fixed so repeated runs
//! are bit-identical.

// numeric-code idioms: index loops over small matrices, and `!(x > 0.0)`
// guards that must treat NaN as a failure
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod config;
pub mod degeneration;
pub mod differentials;
pub mod error;
pub mod graph;
pub mod group;
pub mod linalg;
pub mod moebius;
pub mod pdo;
pub mod periods;
pub mod soliton;
pub mod tau;
pub mod theta;
pub mod words;

mod poly3;
mod quad;
mod series;

#[cfg(test)]
pub(crate) mod testdata;

pub use error::{Error, Result};
pub use moebius::{MoebiusMap, SpherePoint};
pub use words::GroupWord;

/// Complex double used throughout.
pub type C64 = num_complex::Complex64;
