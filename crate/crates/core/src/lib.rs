pub mod bpr;
pub mod detect;
pub mod error;
pub mod games;
pub mod harness;
pub mod opponents;
pub mod policies;
pub mod prob;
pub mod rng;
pub mod tomop;

pub use error::{Error, Result};
