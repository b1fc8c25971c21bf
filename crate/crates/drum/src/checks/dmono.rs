use crate::checks::stability::plus1;
use crate::checks::CheckReport;
use crate::model::{ChoiceUniverse, PathSpace, StochasticChoiceFunction};

/// Per period, for every `(menu, item)`: the `(menu, item)` positions holding
/// an alternative that dominates it under the transitive primitive order.
fn replacements(universe: &ChoiceUniverse, t: usize) -> Vec<Vec<Vec<(usize, usize)>>> {
    let period = universe.period(t);
    let n = period.alternatives.len();
    let mut better = vec![vec![false; n]; n];
    for (b, w) in period.element_pairs() {
        better[b][w] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if better[i][k] {
                for j in 0..n {
                    if better[k][j] {
                        better[i][j] = true;
                    }
                }
            }
        }
    }
    period
        .menus
        .iter()
        .map(|menu| {
            menu.items
                .iter()
                .map(|&w| {
                    let mut out = Vec::new();
                    for (j, m) in period.menus.iter().enumerate() {
                        for (i, &b) in m.items.iter().enumerate() {
                            if better[b][w] {
                                out.push((j, i));
                            }
                        }
                    }
                    out
                })
                .collect()
        })
        .collect()
}

/// One alternating-sum inequality: `sum sign * rho(row) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DmonoInstance {
    pub base: usize,
    /// `(period, menu, item)` replacing the base choice.
    pub replaced: Vec<(usize, usize, usize)>,
    pub terms: Vec<(usize, f64)>,
}

/// Every D-monotonicity instance whose terms all lie in `space`.
pub(crate) fn d_monotonicity_instances(
    space: &PathSpace,
    universe: &ChoiceUniverse,
) -> Vec<DmonoInstance> {
    let horizon = space.horizon();
    let reps: Vec<_> = (0..horizon).map(|t| replacements(universe, t)).collect();
    let mut out = Vec::new();
    for r in 0..space.len() {
        let (mp, cp) = space.row(r);
        let options: Vec<&Vec<(usize, usize)>> =
            (0..horizon).map(|t| &reps[t][mp[t]][cp[t]]).collect();
        // each period: 0 = untouched, k = k-th replacement
        let mut choice = vec![0usize; horizon];
        loop {
            let mut t = 0;
            while t < horizon {
                choice[t] += 1;
                if choice[t] <= options[t].len() {
                    break;
                }
                choice[t] = 0;
                t += 1;
            }
            if t == horizon {
                break;
            }
            let active: Vec<usize> = (0..horizon).filter(|&t| choice[t] > 0).collect();
            let mut terms = Vec::with_capacity(1 << active.len());
            for mask in 0..(1usize << active.len()) {
                let mut m = mp.clone();
                let mut c = cp.clone();
                for (bit, &t) in active.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        let (j, i) = options[t][choice[t] - 1];
                        m[t] = j;
                        c[t] = i;
                    }
                }
                let Some(k) = space.index_of(&m, &c) else {
                    terms.clear();
                    break;
                };
                let sign = if (active.len() - mask.count_ones() as usize) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                terms.push((k, sign));
            }
            if terms.is_empty() {
                continue;
            }
            let replaced = active
                .iter()
                .map(|&t| {
                    let (j, i) = options[t][choice[t] - 1];
                    (t, j, i)
                })
                .collect();
            out.push(DmonoInstance {
                base: r,
                replaced,
                terms,
            });
        }
    }
    out
}

/// Iterated differences of `rho` along dominant replacements over every
/// increasing subsequence of periods. Instances touching an unobserved menu
/// path are skipped.
pub fn check_d_monotonicity(
    rho: &StochasticChoiceFunction,
    universe: &ChoiceUniverse,
    tol: f64,
) -> CheckReport {
    let space = rho.space();
    let probs = rho.probs();
    let instances = d_monotonicity_instances(space, universe);
    if instances.is_empty() {
        return CheckReport::vacuous("dmono");
    }
    let mut worst = 0.0f64;
    let mut location = None;
    for inst in &instances {
        let total: f64 = inst.terms.iter().map(|&(k, s)| s * probs[k]).sum();
        if total < worst {
            worst = total;
            let (mp, cp) = space.row(inst.base);
            let repl: Vec<String> = inst
                .replaced
                .iter()
                .map(|(t, j, i)| format!("t{}:({},{})", t + 1, j + 1, i + 1))
                .collect();
            location = Some(format!(
                "base menus {:?} choices {:?} replaced by {}",
                plus1(mp),
                plus1(cp),
                repl.join(" ")
            ));
        }
    }
    CheckReport::new("dmono", worst, location, tol)
}
