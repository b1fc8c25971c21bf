use crate::checks::stability::plus1;
use crate::checks::CheckReport;
use crate::error::{DrumError, Result};
use crate::geometry::{Arrangement, DemandGeometry, Side};
use crate::model::StochasticChoiceFunction;

const GEOM_TOL: f64 = 1e-10;

/// Whether the choice paths' patch sequence contains a revealed preference
/// cycle with at least one strict link.
pub(crate) fn cyclic_path(geometry: &DemandGeometry, menus: &[usize], choices: &[usize]) -> bool {
    let n = menus.len();
    let patch = |t: usize| &geometry.periods[t].patches[menus[t]][choices[t]];
    let budget = |t: usize| &geometry.periods[t].budgets[menus[t]];
    // weak[t][s]: the period-t choice is revealed at least as good as the period-s choice
    let mut weak = vec![vec![false; n]; n];
    let mut strict = vec![vec![false; n]; n];
    for t in 0..n {
        for s in 0..n {
            if s == t {
                continue;
            }
            let b = budget(t);
            let p = patch(s);
            if p.vertices.iter().all(|v| b.slack(v) <= GEOM_TOL) {
                weak[t][s] = true;
                strict[t][s] = b.slack(&p.representative) < -GEOM_TOL;
            }
        }
    }
    let mut reach = weak.clone();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).any(|t| (0..n).any(|s| strict[t][s] && (reach[s][t])))
}

/// Total probability on choice paths containing a revealed preference cycle,
/// for the hypothesis of preferences constant over time.
pub fn check_sarpd(
    rho: &StochasticChoiceFunction,
    geometry: &DemandGeometry,
    tol: f64,
) -> Result<CheckReport> {
    let space = rho.space();
    if space.horizon() != geometry.horizon() {
        return Err(DrumError::Geometry(
            "choice function and geometry disagree on periods".into(),
        ));
    }
    let mut worst_path = 0.0f64;
    let mut location = None;
    let mut per_path = vec![0.0; space.menu_paths().len()];
    for r in 0..space.len() {
        let (mp, cp) = space.row(r);
        if cyclic_path(geometry, mp, cp) {
            let m = space.row_path_index(r);
            per_path[m] += rho.probs()[r];
            if per_path[m] > worst_path {
                worst_path = per_path[m];
                location = Some(format!("menu path {:?}", plus1(mp)));
            }
        }
    }
    Ok(CheckReport::new("sarpd", -worst_path, location, tol))
}

/// Static weak axiom on one period: for every pair of budgets, the mass on
/// patches of each lying below the other sums to at most one.
pub fn check_wasrp(
    distributions: &[Option<Vec<f64>>],
    arrangement: &Arrangement,
    tol: f64,
) -> Result<CheckReport> {
    if distributions.len() != arrangement.budgets.len() {
        return Err(DrumError::Geometry(
            "one distribution per budget required".into(),
        ));
    }
    let below = |j: usize, k: usize, d: &[f64]| -> f64 {
        arrangement
            .regular(j)
            .filter(|p| p.signs[k] == Side::Below)
            .map(|p| d[p.index])
            .sum()
    };
    let mut worst = f64::INFINITY;
    let mut location = None;
    for j in 0..distributions.len() {
        for k in j + 1..distributions.len() {
            let (Some(dj), Some(dk)) = (&distributions[j], &distributions[k]) else {
                continue;
            };
            let margin = 1.0 - below(j, k, dj) - below(k, j, dk);
            if margin < worst {
                worst = margin;
                location = Some(format!("budgets {} and {}", j + 1, k + 1));
            }
        }
    }
    if worst.is_infinite() {
        return Ok(CheckReport::vacuous("wasrp"));
    }
    Ok(CheckReport::new(
        "wasrp",
        worst.min(0.0),
        if worst < 0.0 { location } else { None },
        tol,
    ))
}
