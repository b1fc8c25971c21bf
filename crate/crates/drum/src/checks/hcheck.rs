use crate::checks::CheckReport;
use crate::error::{DrumError, Result};
use crate::model::PathSpace;
use crate::repr::InequalityMatrix;

/// `min_i (H x)_i` over the rows of `h`.
pub fn check_h(x: &[f64], h: &InequalityMatrix, tol: f64) -> Result<CheckReport> {
    if x.len() != h.ncols() {
        return Err(DrumError::Schema(format!(
            "vector of length {} against {} columns",
            x.len(),
            h.ncols()
        )));
    }
    if h.nrows() == 0 {
        return Ok(CheckReport::vacuous("hrep"));
    }
    let (row, worst) = h.min_slack(x).expect("nonempty");
    Ok(CheckReport::new(
        "hrep",
        worst.min(0.0),
        (worst < 0.0).then(|| format!("row {}", row + 1)),
        tol,
    ))
}

/// Kronecker product of per-period inequality matrices, restricted to rows
/// supported on the observed menu paths.
pub fn dynamic_h(per_period: &[InequalityMatrix], space: &PathSpace) -> Result<InequalityMatrix> {
    let refs: Vec<&InequalityMatrix> = per_period.iter().collect();
    InequalityMatrix::kron_all(&refs)?.restrict(space)
}
