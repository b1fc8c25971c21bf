//! Testing dynamic random utility from panel choice data.

pub mod checks;
pub mod counterfactual;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod model;
pub mod rational;
pub mod repr;
pub mod sim;
pub mod solve;

pub use error::{DrumError, Result};
