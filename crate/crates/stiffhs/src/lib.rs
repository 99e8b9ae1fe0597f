//! Simulator and verification harness for the stiff-pressure limit of the
//! porous medium equation with growth.
//!
//! The crate evolves `rho_t = lap(rho^m) + rho G(p)` with `p = m/(m-1)
//! rho^(m-1)` by a monotone conservative explicit scheme, solves the limiting
//! Hele-Shaw free boundary flow (quasi-static elliptic pressure coupled to
//! the front law `V = g |grad p|`) as a radial reference, and measures every
//! quantitative estimate the limit theory predicts: comparison and L1
//! contraction, time monotonicity of matched data, the Aronson-Benilan lower
//! bound, front acceleration by exterior density, nucleation at saturation,
//! and perimeter bounds on the positive set.

// Comparisons written as `!(x > 0.0)` deliberately reject NaN; the stencil
// code indexes several buffers in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod barrier;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod front;
pub mod grid;
pub mod harness;
pub mod model;
pub mod output;
pub mod pme;
pub mod scenario;

pub use error::{Error, Result};

/// Tool version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
