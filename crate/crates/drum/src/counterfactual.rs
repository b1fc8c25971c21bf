//! Bounds on functionals of demand at an unobserved next period.

use std::sync::Arc;

use serde::Serialize;

use crate::checks::stability::stability_groups;
use crate::checks::{
    check_d_monotonicity, check_stability, cone_membership, d_monotonicity_instances, CONE_TOL,
};
use crate::error::{DrumError, Result};
use crate::geometry::{compute_patches, Budget, DemandGeometry};
use crate::model::{ChoiceUniverse, PathSpace, StochasticChoiceFunction};
use crate::repr::{DrumModel, TypeMatrix};
use crate::solve::{Cmp, Lp, LpOutcome, Sense};

/// A functional of period `T+1` demand on one counterfactual budget.
#[derive(Debug, Clone)]
pub struct CounterfactualProblem {
    /// Observed choice function over periods `1..=T`.
    pub rho: StochasticChoiceFunction,
    pub geometry: DemandGeometry,
    /// Budgets of period `T+1`.
    pub new_budgets: Vec<Budget>,
    /// Budget of period `T+1` on which the functional is evaluated.
    pub target: usize,
    /// Per regular patch of the target budget, the infimum and supremum of
    /// the function on the patch.
    pub g_lower: Vec<f64>,
    pub g_upper: Vec<f64>,
    /// Observed `(menu path, choice path)` to condition on.
    pub condition: Option<(Vec<usize>, Vec<usize>)>,
    /// Replace `rho` by its projection on the model cone before bounding.
    pub project: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundsMethod {
    /// Stability and D-monotonicity rows on the extended choice function.
    Inequalities,
    /// Nonnegative combinations of extended type columns.
    Types,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub method: BoundsMethod,
    /// Extended choice functions attaining the bounds, on the full path space
    /// of periods `1..=T+1`.
    pub lower_witness: Vec<f64>,
    pub upper_witness: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Everything the two formulations share.
struct Extended {
    rho: StochasticChoiceFunction,
    universe: ChoiceUniverse,
    geometry: DemandGeometry,
    space: Arc<PathSpace>,
    /// `(coefficient rows, rhs)` pinning the extension to the observed data.
    pins: Vec<(Vec<usize>, f64)>,
    /// Objective rows with the lower and upper coefficients.
    objective: Vec<(usize, f64, f64)>,
    scale: f64,
    warnings: Vec<String>,
}

impl CounterfactualProblem {
    fn validate(&self) -> Result<()> {
        if self.geometry.horizon() != self.rho.space().horizon() {
            return Err(DrumError::Geometry(
                "choice function and geometry disagree on periods".into(),
            ));
        }
        if self.target >= self.new_budgets.len() {
            return Err(DrumError::Parameter(format!(
                "target budget {} does not exist",
                self.target + 1
            )));
        }
        if self.g_lower.len() != self.g_upper.len() {
            return Err(DrumError::Parameter(
                "lower and upper functional values differ in length".into(),
            ));
        }
        if let Some(k) = self
            .g_lower
            .iter()
            .zip(&self.g_upper)
            .position(|(l, u)| l > u || !l.is_finite() || !u.is_finite())
        {
            return Err(DrumError::Parameter(format!(
                "functional bounds on patch {} are not an interval",
                k + 1
            )));
        }
        Ok(())
    }

    fn extend(&self) -> Result<Extended> {
        self.validate()?;
        let horizon = self.geometry.horizon();
        let mut budgets = self.new_budgets.clone();
        for (k, b) in budgets.iter_mut().enumerate() {
            b.period = horizon;
            b.index = k;
        }
        let mut periods = self.geometry.periods.clone();
        periods.push(compute_patches(&budgets)?);
        let geometry = DemandGeometry::new(periods);
        let regular = geometry.periods[horizon].regular_count(self.target);
        if self.g_lower.len() != regular {
            return Err(DrumError::Parameter(format!(
                "target budget has {} patches, functional has {} values",
                regular,
                self.g_lower.len()
            )));
        }
        let universe = geometry.universe()?;
        let space = Arc::new(PathSpace::full(universe.menu_sizes())?);
        let mut warnings = Vec::new();

        let rho = if self.project {
            let model = DrumModel::demand(self.geometry.clone())?;
            let a = model.dynamic(self.rho.space())?;
            let fit = cone_membership(&self.rho, &a)?;
            if fit.distance > CONE_TOL {
                warnings.push(format!(
                    "data projected onto the model cone (distance {:.3e})",
                    fit.distance
                ));
            }
            let mut fitted = a.apply(&fit.nu);
            for rows in self.rho.space().rows_by_path() {
                let s: f64 = rows.iter().map(|&r| fitted[r]).sum();
                if s > 0.0 {
                    rows.iter().for_each(|&r| fitted[r] /= s);
                }
            }
            StochasticChoiceFunction::new_unchecked(self.rho.space().clone(), fitted)
        } else {
            self.rho.clone()
        };

        let observed = rho.space();
        let new_menus = universe.period(horizon).menus.len();
        let mut pins = Vec::with_capacity(observed.len() * new_menus);
        for r in 0..observed.len() {
            let (mp, cp) = observed.row(r);
            for j in 0..new_menus {
                let mut m = mp.clone();
                m.push(j);
                let rows = (0..universe.period(horizon).menus[j].items.len())
                    .map(|i| {
                        let mut c = cp.clone();
                        c.push(i);
                        space.index_of(&m, &c).expect("full space")
                    })
                    .collect();
                pins.push((rows, rho.probs()[r]));
            }
        }

        let (base, scale) = match &self.condition {
            Some((mp, cp)) => {
                let r = observed.index_of(mp, cp).ok_or_else(|| {
                    DrumError::Parameter("conditioning path is not observed".into())
                })?;
                let mass = rho.probs()[r];
                if mass <= 0.0 {
                    return Err(DrumError::Undefined(
                        "conditioning choice path has zero probability".into(),
                    ));
                }
                (vec![(mp.clone(), cp.clone())], mass)
            }
            None => {
                let mp = observed.menu_paths()[0].clone();
                let sizes: Vec<usize> = (0..horizon)
                    .map(|t| observed.menu_sizes()[t][mp[t]])
                    .collect();
                let base = crate::model::cartesian(&sizes)
                    .into_iter()
                    .map(|cp| (mp.clone(), cp))
                    .collect();
                (base, 1.0)
            }
        };
        let mut objective = Vec::new();
        for (mp, cp) in &base {
            let mut m = mp.clone();
            m.push(self.target);
            for i in 0..regular {
                let mut c = cp.clone();
                c.push(i);
                let k = space.index_of(&m, &c).expect("full space");
                objective.push((k, self.g_lower[i], self.g_upper[i]));
            }
        }
        Ok(Extended {
            rho,
            universe,
            geometry,
            space,
            pins,
            objective,
            scale,
            warnings,
        })
    }
}

fn is_simple(geometry: &DemandGeometry) -> bool {
    geometry.periods.iter().all(|arr| {
        arr.budgets.len() == 2
            && arr.budgets.iter().all(|b| b.goods() == 2)
            && (0..2).all(|j| arr.regular_count(j) == 2)
    })
}

fn solve_pair(
    build: impl Fn(Sense) -> Result<(Lp, Vec<usize>)> + Sync,
) -> Result<[(f64, Vec<f64>); 2]> {
    let run = |sense: Sense| -> Result<(f64, Vec<f64>)> {
        let (lp, _) = build(sense)?;
        match lp.solve()? {
            LpOutcome::Optimal { x, objective } => Ok((objective, x)),
            LpOutcome::Infeasible => Err(DrumError::ModelRejected(
                "no model-consistent extension of the observed data".into(),
            )),
            LpOutcome::Unbounded => Err(DrumError::Solver("bounds program unbounded".into())),
        }
    };
    #[cfg(feature = "parallel")]
    let (lo, hi) = rayon::join(|| run(Sense::Minimize), || run(Sense::Maximize));
    #[cfg(not(feature = "parallel"))]
    let (lo, hi) = (run(Sense::Minimize), run(Sense::Maximize));
    Ok([lo?, hi?])
}

fn objective_coef(ext: &Extended, sense: Sense) -> Vec<(usize, f64)> {
    ext.objective
        .iter()
        .map(|&(k, lo, hi)| {
            (
                k,
                if sense == Sense::Minimize { lo } else { hi } / ext.scale,
            )
        })
        .collect()
}

/// Bounds from the inequality description of the extended choice function:
/// marginalization to the data, simplex rows, stability and D-monotonicity.
/// Exact in the simple setup; elsewhere the V-side formulation is used.
pub fn bound_functional(problem: &CounterfactualProblem) -> Result<BoundsReport> {
    let ext = problem.extend()?;
    if !is_simple(&ext.geometry) {
        let mut report = bounds_from_types(ext)?;
        report.warnings.push(
            "geometry outside the simple setup: bounds computed from type columns only".into(),
        );
        return Ok(report);
    }
    let tol = 1e-7;
    if !check_stability(&ext.rho, tol).passed
        || !check_d_monotonicity(&ext.rho, &problem.geometry.universe()?, tol).passed
    {
        return Err(DrumError::ModelRejected(
            "observed data fail stability or D-monotonicity".into(),
        ));
    }
    let space = ext.space.clone();
    let groups = stability_groups(&space);
    let dmono = d_monotonicity_instances(&space, &ext.universe);
    let build = |sense: Sense| -> Result<(Lp, Vec<usize>)> {
        let mut lp = Lp::new(sense);
        let vars: Vec<usize> = (0..space.len())
            .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
            .collect();
        for (k, c) in objective_coef(&ext, sense) {
            lp.set_objective(vars[k], c);
        }
        for (rows, rhs) in &ext.pins {
            lp.add_row(
                rows.iter().map(|&r| (vars[r], 1.0)).collect(),
                Cmp::Eq,
                *rhs,
            );
        }
        for rows in space.rows_by_path() {
            lp.add_row(rows.iter().map(|&r| (vars[r], 1.0)).collect(), Cmp::Eq, 1.0);
        }
        for group in &groups {
            let base: Vec<(usize, f64)> = group[0].iter().map(|&r| (vars[r], -1.0)).collect();
            for other in &group[1..] {
                let mut terms = base.clone();
                terms.extend(other.iter().map(|&r| (vars[r], 1.0)));
                lp.add_row(terms, Cmp::Eq, 0.0);
            }
        }
        for inst in &dmono {
            lp.add_row(
                inst.terms.iter().map(|&(r, s)| (vars[r], s)).collect(),
                Cmp::Ge,
                0.0,
            );
        }
        Ok((lp, vars))
    };
    let [(lower, lw), (upper, uw)] = solve_pair(build)?;
    Ok(BoundsReport {
        lower,
        upper,
        method: BoundsMethod::Inequalities,
        lower_witness: lw,
        upper_witness: uw,
        warnings: ext.warnings,
    })
}

/// Type matrix of the model over periods `1..=T+1`, on the full path space.
pub fn kron_counterfactual_cone(problem: &CounterfactualProblem) -> Result<TypeMatrix> {
    let ext = problem.extend()?;
    DrumModel::demand(ext.geometry)?.dynamic(&ext.space)
}

/// Bounds over `rho^c = A nu`, `nu >= 0`, with the same marginalization rows.
pub fn bound_functional_types(problem: &CounterfactualProblem) -> Result<BoundsReport> {
    let ext = problem.extend()?;
    bounds_from_types(ext)
}

fn bounds_from_types(ext: Extended) -> Result<BoundsReport> {
    let a = DrumModel::demand(ext.geometry.clone())?.dynamic(&ext.space)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); a.nrows()];
    for (c, col) in a.columns().iter().enumerate() {
        for &r in col {
            members[r].push(c);
        }
    }
    let build = |sense: Sense| -> Result<(Lp, Vec<usize>)> {
        let mut lp = Lp::new(sense);
        let nu: Vec<usize> = (0..a.ncols())
            .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
            .collect();
        let mut obj = vec![0.0; a.ncols()];
        for (k, c) in objective_coef(&ext, sense) {
            for &col in &members[k] {
                obj[col] += c;
            }
        }
        for (v, c) in nu.iter().zip(obj) {
            lp.set_objective(*v, c);
        }
        for (rows, rhs) in &ext.pins {
            let mut coef = vec![0.0; a.ncols()];
            for &r in rows {
                for &col in &members[r] {
                    coef[col] += 1.0;
                }
            }
            lp.add_row(
                nu.iter().zip(coef).map(|(&v, c)| (v, c)).collect(),
                Cmp::Eq,
                *rhs,
            );
        }
        lp.add_row(nu.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, 1.0);
        Ok((lp, nu))
    };
    let [(lower, lw), (upper, uw)] = solve_pair(build)?;
    Ok(BoundsReport {
        lower,
        upper,
        method: BoundsMethod::Types,
        lower_witness: a.apply(&lw),
        upper_witness: a.apply(&uw),
        warnings: ext.warnings,
    })
}

/// The choice function over the last `keep` periods, marginalizing earlier
/// periods at their first observed menus. Requires a stable `rho`.
pub fn drop_leading_periods(
    rho: &StochasticChoiceFunction,
    keep: usize,
) -> Result<StochasticChoiceFunction> {
    let space = rho.space();
    let horizon = space.horizon();
    if keep == 0 || keep > horizon {
        return Err(DrumError::Parameter(format!(
            "cannot keep {} of {} periods",
            keep, horizon
        )));
    }
    let drop = horizon - keep;
    let sizes = space.menu_sizes()[drop..].to_vec();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut source: Vec<Vec<usize>> = Vec::new();
    for mp in space.menu_paths() {
        let tail = mp[drop..].to_vec();
        if !paths.contains(&tail) {
            paths.push(tail);
            source.push(mp.clone());
        }
    }
    let out_space = Arc::new(PathSpace::new(sizes, paths)?);
    let mut probs = vec![0.0; out_space.len()];
    for r in 0..space.len() {
        let (mp, cp) = space.row(r);
        let tail = &mp[drop..];
        let m = out_space.path_index(tail).expect("tail observed");
        if source[m] != *mp {
            continue;
        }
        let k = out_space.index_of(tail, &cp[drop..]).expect("tail row");
        probs[k] += rho.probs()[r];
    }
    Ok(StochasticChoiceFunction::new_unchecked(out_space, probs))
}
