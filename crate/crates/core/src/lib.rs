//! Exact asymptotic expansions for lattice walks confined to the quadrant
//! (or an orthant) whose group is finite and whose orbit sum recovers the
//! generating function.
//!
//! The pipeline runs model → group → saddle → expansion, with the
//! polyharmonic module checking and decomposing the coefficient functions
//! and the oracle module providing brute-force ground truth.

pub mod corpus;
pub mod error;
pub mod exactalg;
pub mod expansion;
pub mod group;
pub mod io;
pub mod model;
pub mod oracle;
pub mod polyharmonic;
pub mod saddle;

pub use error::{Error, Result};
