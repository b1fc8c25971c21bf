use std::collections::BTreeMap;

use crate::checks::CheckReport;
use crate::model::{PathSpace, StochasticChoiceFunction};

/// For every period, the mass of each menu summed over its items must not
/// depend on the menu once the other periods' menus and choices are fixed.
pub fn check_stability(rho: &StochasticChoiceFunction, tol: f64) -> CheckReport {
    let space = rho.space();
    if space.horizon() < 2 {
        return CheckReport::vacuous("stability");
    }
    let probs = rho.probs();
    let mut worst = 0.0f64;
    let mut location = None;
    let mut tested = false;
    for t in 0..space.horizon() {
        // (menus off t, choices off t) -> menu at t -> mass
        let mut groups: BTreeMap<(Vec<usize>, Vec<usize>), BTreeMap<usize, f64>> = BTreeMap::new();
        for (r, &p) in probs.iter().enumerate() {
            let (mp, cp) = space.row(r);
            let mut m = mp.clone();
            let mut c = cp.clone();
            let j = m.remove(t);
            c.remove(t);
            *groups.entry((m, c)).or_default().entry(j).or_default() += p;
        }
        for ((m, c), sums) in &groups {
            if sums.len() < 2 {
                continue;
            }
            tested = true;
            let hi = sums.values().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = sums.values().cloned().fold(f64::INFINITY, f64::min);
            if -(hi - lo) < worst {
                worst = -(hi - lo);
                location = Some(format!(
                    "period {} with other menus {:?} and choices {:?}",
                    t + 1,
                    plus1(m),
                    plus1(c)
                ));
            }
        }
    }
    if !tested {
        return CheckReport::vacuous("stability");
    }
    CheckReport::new("stability", worst, location, tol)
}

/// Rows grouped for the stability equalities: for every period and every
/// combination of other-period menus and choices, the rows of each menu at
/// that period (only groups with at least two menus).
pub(crate) fn stability_groups(space: &PathSpace) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for t in 0..space.horizon() {
        let mut groups: BTreeMap<(Vec<usize>, Vec<usize>), BTreeMap<usize, Vec<usize>>> =
            BTreeMap::new();
        for r in 0..space.len() {
            let (mp, cp) = space.row(r);
            let mut m = mp.clone();
            let mut c = cp.clone();
            let j = m.remove(t);
            c.remove(t);
            groups
                .entry((m, c))
                .or_default()
                .entry(j)
                .or_default()
                .push(r);
        }
        out.extend(
            groups
                .into_values()
                .filter(|g| g.len() > 1)
                .map(|g| g.into_values().collect()),
        );
    }
    out
}

pub(crate) fn plus1(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn single_period_is_vacuous() {
        let space = Arc::new(PathSpace::full(vec![vec![2, 2]]).unwrap());
        let rho = StochasticChoiceFunction::new(space, vec![0.5, 0.5, 0.1, 0.9]).unwrap();
        let rep = check_stability(&rho, 1e-9);
        assert!(rep.passed && rep.vacuous);
    }

    #[test]
    fn detects_unequal_sums() {
        let space = Arc::new(PathSpace::full(vec![vec![2], vec![2, 2]]).unwrap());
        // period-1 choice 1 has mass 0.5 under menu path (1,1) and 0.7 under (1,2)
        let rho = StochasticChoiceFunction::new(
            space,
            vec![0.25, 0.25, 0.35, 0.35, 0.25, 0.25, 0.15, 0.15],
        )
        .unwrap();
        let rep = check_stability(&rho, 1e-9);
        assert!(!rep.passed);
        assert!((rep.worst + 0.2).abs() < 1e-12);
    }
}
