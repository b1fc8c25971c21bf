use std::sync::Arc;

use crate::checks::stability::stability_groups;
use crate::error::{DrumError, Result};
use crate::model::{
    all_subsets, ChoiceUniverse, Menu, PathSpace, Period, StochasticChoiceFunction,
};
use crate::repr::{bm_matrix, InequalityMatrix};
use crate::solve::{Cmp, Lp, LpOutcome, Sense};

const MAX_VARIABLES: usize = 20_000;

/// Result of extending a choice function to every menu.
#[derive(Debug, Clone)]
pub struct BmExtension {
    pub feasible: bool,
    /// The universe with every nonempty subset as a menu.
    pub universe: ChoiceUniverse,
    pub witness: Option<StochasticChoiceFunction>,
}

fn full_variation_of(period: &Period) -> Period {
    let n = period.alternatives.len();
    let menus = all_subsets(n)
        .into_iter()
        .map(|items| Menu {
            id: items
                .iter()
                .map(|&i| period.alternatives[i].as_str())
                .collect::<Vec<_>>()
                .join("+"),
            items,
        })
        .collect();
    Period::new(period.label.clone(), period.alternatives.clone(), menus)
        .with_order(period.order.clone())
}

/// Look for a choice function on every menu path of the full-variation
/// universe that agrees with `rho` on observed paths, puts no mass on
/// alternatives dominated within their menu, satisfies the alternating-sum
/// inequalities (their Kronecker product when there are several periods)
/// and, with several periods, stability.
pub fn bm_extension_feasible(
    rho: &StochasticChoiceFunction,
    universe: &ChoiceUniverse,
) -> Result<BmExtension> {
    let space = rho.space();
    if space.menu_sizes() != universe.menu_sizes().as_slice() {
        return Err(DrumError::Schema(
            "choice function does not match the universe".into(),
        ));
    }
    let periods: Vec<Period> = universe.periods().iter().map(full_variation_of).collect();
    let virtual_universe = ChoiceUniverse::new(periods)?;
    let vspace = Arc::new(PathSpace::full(virtual_universe.menu_sizes())?);
    if vspace.len() > MAX_VARIABLES {
        return Err(DrumError::Size(format!(
            "extension needs {} unknowns",
            vspace.len()
        )));
    }
    let horizon = universe.horizon();

    // observed (menu, item) -> virtual (menu, item)
    let menu_map: Vec<Vec<(usize, Vec<usize>)>> = (0..horizon)
        .map(|t| {
            let vp = virtual_universe.period(t);
            universe
                .period(t)
                .menus
                .iter()
                .map(|m| {
                    let mut set = m.items.clone();
                    set.sort_unstable();
                    let j = vp
                        .menus
                        .iter()
                        .position(|v| v.items == set)
                        .expect("every subset is a menu");
                    let items = m
                        .items
                        .iter()
                        .map(|a| vp.menus[j].items.iter().position(|b| b == a).unwrap())
                        .collect();
                    (j, items)
                })
                .collect()
        })
        .collect();

    let mut lp = Lp::new(Sense::Minimize);
    let mut dominated = vec![false; vspace.len()];
    let dominance: Vec<Vec<(usize, usize)>> = virtual_universe
        .periods()
        .iter()
        .map(Period::element_pairs)
        .collect();
    for r in 0..vspace.len() {
        let (mp, cp) = vspace.row(r);
        dominated[r] = (0..horizon).any(|t| {
            let menu = &virtual_universe.period(t).menus[mp[t]];
            let x = menu.items[cp[t]];
            dominance[t]
                .iter()
                .any(|&(b, w)| w == x && menu.items.contains(&b))
        });
    }
    let vars: Vec<usize> = dominated
        .iter()
        .map(|&d| lp.add_var(0.0, 0.0, if d { 0.0 } else { f64::INFINITY }))
        .collect();
    for rows in vspace.rows_by_path() {
        lp.add_row(rows.iter().map(|&r| (vars[r], 1.0)).collect(), Cmp::Eq, 1.0);
    }
    for r in 0..space.len() {
        let (mp, cp) = space.row(r);
        let vm: Vec<usize> = (0..horizon).map(|t| menu_map[t][mp[t]].0).collect();
        let vc: Vec<usize> = (0..horizon).map(|t| menu_map[t][mp[t]].1[cp[t]]).collect();
        let k = vspace.index_of(&vm, &vc).expect("virtual row exists");
        lp.add_row(vec![(vars[k], 1.0)], Cmp::Eq, rho.probs()[r]);
    }
    let factors: Vec<InequalityMatrix> = virtual_universe
        .periods()
        .iter()
        .map(bm_matrix)
        .collect::<Result<_>>()?;
    let refs: Vec<&InequalityMatrix> = factors.iter().collect();
    let h = InequalityMatrix::kron_all(&refs)?;
    for r in 0..h.nrows() {
        let terms: Vec<(usize, f64)> = h
            .row_f64(r)
            .into_iter()
            .map(|(c, v)| (vars[c], v))
            .collect();
        if terms.len() > 1 {
            lp.add_row(terms, Cmp::Ge, 0.0);
        }
    }
    if horizon > 1 {
        for group in stability_groups(&vspace) {
            let base: Vec<(usize, f64)> = group[0].iter().map(|&r| (vars[r], -1.0)).collect();
            for other in &group[1..] {
                let mut terms = base.clone();
                terms.extend(other.iter().map(|&r| (vars[r], 1.0)));
                lp.add_row(terms, Cmp::Eq, 0.0);
            }
        }
    }
    let (feasible, witness) = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let probs: Vec<f64> = vars.iter().map(|&v| x[v].max(0.0)).collect();
            (
                true,
                Some(StochasticChoiceFunction::new_unchecked(vspace, probs)),
            )
        }
        _ => (false, None),
    };
    Ok(BmExtension {
        feasible,
        universe: virtual_universe,
        witness,
    })
}
