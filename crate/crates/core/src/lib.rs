//! Numerical algebraisation of quasi-exactly-solvable Schrödinger operators.

pub mod elliptic;
pub mod error;
pub mod jets;
pub mod linalg;
pub mod manybody;
pub mod polybasis;
pub mod refsolver;
pub mod report;
pub mod verify;
pub mod algebraise;
pub mod coupled;
pub mod lame;

pub use error::{QesError, Result};
