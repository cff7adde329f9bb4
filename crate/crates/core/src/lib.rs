//! Elegant Bell inequality toolkit: constructions, seesaw optimization,
//! structural extraction of maximal violators, and the SWAP-isometry
//! self-test that separates statistically identical but inequivalent
//! strategies.

pub mod cli;
pub mod elegant;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod scenario;
pub mod selftest;
pub mod structure;

pub use error::{EbiError, Result};
