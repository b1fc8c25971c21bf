use crate::error::{DrumError, Result};
use crate::geometry::budget::Budget;
use crate::geometry::patches::{compute_patches, Arrangement, Side};
use crate::model::{cartesian, ChoiceUniverse, Menu, Period};

/// All choices of one regular patch per budget that contain no revealed
/// preference cycle, in lexicographic order of the patch tuple.
///
/// The chosen bundle on budget `j` is revealed strictly preferred to the
/// bundle chosen on `k` when the latter lies below budget `j`; bundles on the
/// same budget are only weakly related, so only strict cycles disqualify.
pub fn enumerate_demand_types(arr: &Arrangement) -> Vec<Vec<usize>> {
    let n = arr.budgets.len();
    let counts: Vec<usize> = (0..n).map(|j| arr.regular_count(j)).collect();
    cartesian(&counts)
        .into_iter()
        .filter(|tuple| {
            let mut adj = vec![Vec::new(); n];
            for j in 0..n {
                for k in 0..n {
                    if j != k && arr.patches[k][tuple[k]].signs[j] == Side::Below {
                        adj[j].push(k);
                    }
                }
            }
            !strict_cycle(&adj)
        })
        .collect()
}

fn strict_cycle(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let mut state = vec![0u8; n];
    fn visit(v: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for &w in &adj[v] {
            if state[w] == 1 || (state[w] == 0 && visit(w, adj, state)) {
                return true;
            }
        }
        state[v] = 2;
        false
    }
    (0..n).any(|v| state[v] == 0 && visit(v, adj, &mut state))
}

/// Per-period budget arrangements of a demand panel.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandGeometry {
    pub periods: Vec<Arrangement>,
}

impl DemandGeometry {
    pub fn new(periods: Vec<Arrangement>) -> Self {
        DemandGeometry { periods }
    }

    /// Group budgets by period (0-based) and compute each arrangement.
    pub fn from_budgets(budgets: &[Budget]) -> Result<Self> {
        let horizon = budgets.iter().map(|b| b.period + 1).max().unwrap_or(0);
        if horizon == 0 {
            return Err(DrumError::Schema("no budgets".into()));
        }
        let mut periods = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut bs: Vec<Budget> = budgets.iter().filter(|b| b.period == t).cloned().collect();
            if bs.is_empty() {
                return Err(DrumError::Schema(format!(
                    "period {} has no budgets",
                    t + 1
                )));
            }
            bs.sort_by_key(|b| b.index);
            if bs.iter().enumerate().any(|(k, b)| b.index != k) {
                return Err(DrumError::Schema(format!(
                    "budget ids of period {} are not 1..J",
                    t + 1
                )));
            }
            periods.push(compute_patches(&bs)?);
        }
        Ok(DemandGeometry { periods })
    }

    /// The simple setup repeated over `t` periods.
    pub fn simple(t: usize) -> Self {
        DemandGeometry {
            periods: vec![Arrangement::simple(); t],
        }
    }

    pub fn horizon(&self) -> usize {
        self.periods.len()
    }

    /// Choice universe whose alternatives are regular patches and whose
    /// menus are budgets; dominance pairs become the primitive order.
    pub fn universe(&self) -> Result<ChoiceUniverse> {
        let periods = self
            .periods
            .iter()
            .enumerate()
            .map(|(t, arr)| {
                let mut alternatives = Vec::new();
                let mut offsets = Vec::new();
                let mut menus = Vec::new();
                for j in 0..arr.budgets.len() {
                    offsets.push(alternatives.len());
                    let start = alternatives.len();
                    let items: Vec<usize> = (start..start + arr.regular_count(j)).collect();
                    for p in arr.regular(j) {
                        alternatives.push(p.label());
                    }
                    menus.push(Menu {
                        id: format!("B{}", j + 1),
                        items,
                    });
                }
                let order = arr
                    .dominance
                    .iter()
                    .map(|&((a, i), (b, k))| (vec![offsets[a] + i], vec![offsets[b] + k]))
                    .collect();
                Period::new((t + 1).to_string(), alternatives, menus).with_order(order)
            })
            .collect();
        ChoiceUniverse::new(periods)
    }

    pub fn static_types(&self, t: usize) -> Vec<Vec<usize>> {
        enumerate_demand_types(&self.periods[t])
    }
}
