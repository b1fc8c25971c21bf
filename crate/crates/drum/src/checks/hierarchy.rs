use num_traits::{ToPrimitive, Zero};

use crate::checks::stability::check_stability;
use crate::error::{DrumError, Result};
use crate::model::StochasticChoiceFunction;
use crate::repr::{
    projection_ops, reduce_h, reduce_star, reduced_rows, InequalityMatrix, ProjectionOperator,
    RowKind, TypeMatrix,
};
use crate::solve::{Cmp, Lp, LpOutcome, Sense};

/// Outcome of the level-`k` feasibility program.
#[derive(Debug, Clone)]
pub struct HierarchyResult {
    pub feasible: bool,
    pub stable: bool,
    pub levels: Vec<usize>,
    /// Virtual choice vector on the reduced rows of the extended window.
    pub z: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// `(1, 2, ..., 2)`.
pub fn default_levels(horizon: usize) -> Vec<usize> {
    (0..horizon).map(|t| if t == 0 { 1 } else { 2 }).collect()
}

/// Reduced inequality systems and the projection operator for `levels`.
pub fn reduced_system(
    rho: &StochasticChoiceFunction,
    statics: &[TypeMatrix],
    static_h: &[InequalityMatrix],
    levels: &[usize],
) -> Result<(
    Vec<crate::repr::Reduced>,
    Vec<InequalityMatrix>,
    ProjectionOperator,
    Vec<String>,
)> {
    let space = rho.space();
    let horizon = space.horizon();
    if statics.len() != horizon || static_h.len() != horizon || levels.len() != horizon {
        return Err(DrumError::Parameter(
            "one type matrix, inequality matrix and level per period".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut reduced = Vec::with_capacity(horizon);
    let mut hstars = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let red = reduce_star(&space.menu_sizes()[t], &statics[t])?;
        let rank = red.a_star.to_dense().rank(1e-9);
        if rank < red.dim() {
            warnings.push(format!(
                "period {}: reduced type matrix has rank {} < {} rows; the level-k conditions are necessary only",
                t + 1,
                rank,
                red.dim()
            ));
        }
        hstars.push(reduce_h(&static_h[t], &red)?);
        reduced.push(red);
    }
    let proj = projection_ops(&hstars, levels)?;
    Ok((reduced, hstars, proj, warnings))
}

/// Is there a virtual choice vector `z` on the `levels`-extended window with
/// `Gamma z = rho*` on the observed reduced rows and every Kronecker row of
/// the reduced inequality systems nonnegative at `z`?
pub fn hierarchy_feasible(
    rho: &StochasticChoiceFunction,
    statics: &[TypeMatrix],
    static_h: &[InequalityMatrix],
    levels: &[usize],
    tol: f64,
) -> Result<HierarchyResult> {
    let stable = check_stability(rho, tol).passed;
    if !stable {
        return Ok(HierarchyResult {
            feasible: false,
            stable,
            levels: levels.to_vec(),
            z: None,
            warnings: Vec::new(),
        });
    }
    let (reduced, hstars, proj, warnings) = reduced_system(rho, statics, static_h, levels)?;
    let mut factors: Vec<&InequalityMatrix> = Vec::new();
    for (t, h) in hstars.iter().enumerate() {
        for _ in 0..levels[t] {
            factors.push(h);
        }
    }
    let big_h = InequalityMatrix::kron_all(&factors)?;
    let dim = proj.gamma.ncols();
    debug_assert_eq!(big_h.ncols(), dim);

    let mut lp = Lp::new(Sense::Minimize);
    let z = lp.add_vars(dim, 0.0, f64::INFINITY);
    for (r, idx) in reduced_rows(rho.space(), &reduced) {
        let terms: Vec<(usize, f64)> = proj
            .gamma
            .row(idx)
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(c, v)| (z.start + c, v.to_f64().unwrap_or(f64::NAN)))
            .collect();
        lp.add_row(terms, Cmp::Eq, rho.probs()[r]);
    }
    for r in 0..big_h.nrows() {
        if big_h.kind(r) == RowKind::Nonnegativity {
            continue;
        }
        let terms: Vec<(usize, f64)> = big_h
            .row_f64(r)
            .into_iter()
            .map(|(c, v)| (z.start + c, v))
            .collect();
        lp.add_row(terms, Cmp::Ge, 0.0);
    }
    let (feasible, witness) = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => (true, Some(x[z].to_vec())),
        _ => (false, None),
    };
    Ok(HierarchyResult {
        feasible,
        stable,
        levels: levels.to_vec(),
        z: witness,
        warnings,
    })
}
