//! Deterministic consistency checks on a stochastic choice function.

mod adsrp;
mod bm_ext;
mod cone;
mod dmono;
mod hcheck;
mod hierarchy;
mod recovery;
mod sarpd;
pub(crate) mod stability;

use serde::Serialize;

pub use adsrp::{adsrp_audit, AdsrpWitness};
pub use bm_ext::{bm_extension_feasible, BmExtension};
pub use cone::{cone_membership, ConeFit, CONE_TOL};
pub use dmono::check_d_monotonicity;
pub(crate) use dmono::d_monotonicity_instances;
pub use hcheck::{check_h, dynamic_h};
pub use hierarchy::{default_levels, hierarchy_feasible, reduced_system, HierarchyResult};
pub use recovery::{simple_recovery_matrix, simple_type_matrix, unique_recovery, UniqueRecovery};
pub use sarpd::{check_sarpd, check_wasrp};
pub use stability::check_stability;

/// Default tolerance for checks on estimated probabilities.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Outcome of one check. `worst` is the most negative margin found (zero or
/// positive when nothing is violated).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub location: Option<String>,
    /// Nothing could be tested (e.g. no menu variation).
    pub vacuous: bool,
    pub diagnostics: Option<Diagnostics>,
}

impl CheckReport {
    pub fn new(name: &str, worst: f64, location: Option<String>, tol: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: worst >= -tol,
            worst,
            location,
            vacuous: false,
            diagnostics: None,
        }
    }

    pub fn vacuous(name: &str) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: true,
            worst: 0.0,
            location: None,
            vacuous: true,
            diagnostics: None,
        }
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = match (self.passed, self.vacuous) {
            (true, true) => "pass (vacuous)",
            (true, false) => "pass",
            (false, _) => "FAIL",
        };
        write!(
            f,
            "{:<12} {:<15} worst {:+.3e}",
            self.name, status, self.worst
        )?;
        if let Some(loc) = &self.location {
            write!(f, " at {}", loc)?;
        }
        Ok(())
    }
}
