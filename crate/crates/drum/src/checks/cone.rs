use crate::checks::{CheckReport, Diagnostics};
use crate::error::{DrumError, Result};
use crate::model::StochasticChoiceFunction;
use crate::repr::TypeMatrix;
use crate::solve::Nnls;

/// Least-squares projection of a choice function onto the cone of types.
#[derive(Debug, Clone)]
pub struct ConeFit {
    /// Euclidean distance `||A nu - rho||`.
    pub distance: f64,
    pub nu: Vec<f64>,
    pub report: CheckReport,
}

/// Distance tolerance for declaring cone membership.
pub const CONE_TOL: f64 = 1e-8;

pub fn cone_membership(rho: &StochasticChoiceFunction, a: &TypeMatrix) -> Result<ConeFit> {
    if a.nrows() != rho.probs().len() {
        return Err(DrumError::Schema(
            "type matrix rows do not match the choice function".into(),
        ));
    }
    let solver = Nnls::new(a.to_dense());
    let sol = solver.solve(rho.probs())?;
    let fitted = a.apply(&sol.x);
    let distance = fitted
        .iter()
        .zip(rho.probs())
        .map(|(f, p)| (f - p).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut report = CheckReport::new("cone", -distance, None, CONE_TOL);
    if !report.passed {
        let (row, gap) = fitted
            .iter()
            .zip(rho.probs())
            .map(|(f, p)| (f - p).abs())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        report.location = Some(format!("largest residual {:.3e} at row {}", gap, row + 1));
    }
    report.diagnostics = Some(Diagnostics {
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
    });
    Ok(ConeFit {
        distance,
        nu: sol.x,
        report,
    })
}
