//! Numerical kernels: nonnegative least squares and linear programming.

mod lp;
mod nnls;

pub use lp::{Cmp, Lp, LpOutcome, Sense};
pub use nnls::{Nnls, NnlsSolution};
