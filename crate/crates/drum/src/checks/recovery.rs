use nalgebra::DMatrix;

use crate::error::{DrumError, Result};
use crate::model::StochasticChoiceFunction;
use crate::rational::QMatrix;
use crate::repr::kron_apply;

/// Type matrix of two intersecting budgets with two patches each: rows
/// `x1|1, x2|1, x1|2, x2|2`, columns the types `(1,1), (1,2), (2,2)`.
pub fn simple_type_matrix() -> QMatrix {
    QMatrix::from_int_rows(&[vec![1, 1, 0], vec![0, 0, 1], vec![1, 0, 0], vec![0, 1, 1]])
}

/// Left inverse `(A'A)^{-1} A'` of the simple type matrix.
pub fn simple_recovery_matrix() -> QMatrix {
    let a = simple_type_matrix();
    let at = a.transpose();
    at.mul(&a).inverse().expect("full column rank").mul(&at)
}

/// Type weights recovered in closed form for the simple setup, with the
/// reconstruction residual `max |A nu - rho|`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniqueRecovery {
    pub nu: Vec<f64>,
    pub min_weight: f64,
    pub residual: f64,
}

pub fn unique_recovery(rho: &StochasticChoiceFunction) -> Result<UniqueRecovery> {
    let space = rho.space();
    if space.menu_sizes().iter().any(|s| s != &[2, 2]) {
        return Err(DrumError::Geometry(
            "closed-form recovery needs two budgets with two patches per period".into(),
        ));
    }
    if !space.is_full() {
        return Err(DrumError::Geometry(
            "closed-form recovery needs every menu path".into(),
        ));
    }
    let t = space.horizon();
    let h: DMatrix<f64> = simple_recovery_matrix().to_f64();
    let a: DMatrix<f64> = simple_type_matrix().to_f64();
    let nu = kron_apply(&vec![h; t], rho.probs());
    let back = kron_apply(&vec![a; t], &nu);
    let residual = back
        .iter()
        .zip(rho.probs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let min_weight = nu.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(UniqueRecovery {
        nu,
        min_weight,
        residual,
    })
}
