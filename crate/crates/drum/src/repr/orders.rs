use std::collections::HashMap;

use crate::error::{DrumError, Result};
use crate::model::{ChoiceUniverse, Period};
use crate::solve::{Cmp, Lp, LpOutcome, Sense};

/// A strict ranking of a period's alternatives, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearOrder {
    pub period: usize,
    pub ranking: Vec<usize>,
}

impl LinearOrder {
    /// Best alternative of each menu, as an item position within the menu.
    pub fn choices(&self, period: &Period) -> Vec<usize> {
        let mut rank = vec![0; self.ranking.len()];
        for (pos, &a) in self.ranking.iter().enumerate() {
            rank[a] = pos;
        }
        period
            .menus
            .iter()
            .map(|m| {
                m.items
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &a)| rank[a])
                    .map(|(i, _)| i)
                    .expect("menus are nonempty")
            })
            .collect()
    }

    pub fn prefers(&self, a: usize, b: usize) -> bool {
        let pa = self.ranking.iter().position(|&x| x == a);
        let pb = self.ranking.iter().position(|&x| x == b);
        matches!((pa, pb), (Some(x), Some(y)) if x < y)
    }
}

/// Lotteries over a common prize set, keyed by alternative id.
#[derive(Debug, Clone, PartialEq)]
pub struct LotteryTable {
    pub lotteries: HashMap<String, Vec<f64>>,
}

impl LotteryTable {
    pub fn new(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let width = entries.first().map_or(0, |e| e.1.len());
        for (id, p) in &entries {
            if p.len() != width {
                return Err(DrumError::Schema(format!(
                    "lottery {} has {} prizes, expected {}",
                    id,
                    p.len(),
                    width
                )));
            }
            let s: f64 = p.iter().sum();
            if p.iter().any(|&v| v < 0.0) || (s - 1.0).abs() > 1e-9 {
                return Err(DrumError::Schema(format!(
                    "lottery {} is not a probability vector",
                    id
                )));
            }
        }
        Ok(LotteryTable {
            lotteries: entries.into_iter().collect(),
        })
    }

    /// Whether some prize utility ranks the lotteries strictly as given.
    pub fn admits(&self, period: &Period, ranking: &[usize]) -> Result<bool> {
        let vecs: Vec<&Vec<f64>> = ranking
            .iter()
            .map(|&a| {
                self.lotteries.get(&period.alternatives[a]).ok_or_else(|| {
                    DrumError::Schema(format!("no lottery for {}", period.alternatives[a]))
                })
            })
            .collect::<Result<_>>()?;
        let m = vecs.first().map_or(0, |v| v.len());
        let mut lp = Lp::new(Sense::Maximize);
        let u: Vec<usize> = (0..m).map(|_| lp.add_var(0.0, -1.0, 1.0)).collect();
        let margin = lp.add_var(1.0, 0.0, 1.0);
        for w in vecs.windows(2) {
            let mut terms: Vec<(usize, f64)> = u
                .iter()
                .enumerate()
                .map(|(k, &v)| (v, w[0][k] - w[1][k]))
                .collect();
            terms.push((margin, -1.0));
            lp.add_row(terms, Cmp::Ge, 0.0);
        }
        Ok(matches!(lp.solve()?, LpOutcome::Optimal { objective, .. } if objective > 1e-9))
    }
}

/// Every linear order extending the period's primitive order, in
/// lexicographic order of the ranking; optionally only those representable
/// by expected utility over the lottery table.
pub fn enumerate_orders(
    universe: &ChoiceUniverse,
    t: usize,
    eu: Option<&LotteryTable>,
) -> Result<Vec<LinearOrder>> {
    let period = universe.period(t);
    let n = period.alternatives.len();
    if n > 10 {
        return Err(DrumError::Size(format!(
            "{} alternatives give {}! orders",
            n, n
        )));
    }
    let pairs = period.element_pairs();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let mut pos = vec![0; n];
        for (k, &a) in perm.iter().enumerate() {
            pos[a] = k;
        }
        if pairs.iter().all(|&(b, w)| pos[b] < pos[w]) {
            let keep = match eu {
                Some(table) => table.admits(period, &perm)?,
                None => true,
            };
            if keep {
                out.push(LinearOrder {
                    period: t,
                    ranking: perm.clone(),
                });
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Menu;

    fn three() -> ChoiceUniverse {
        ChoiceUniverse::binary_menus(&["x", "y", "z"], 1).unwrap()
    }

    #[test]
    fn six_orders_without_constraints() {
        let o = enumerate_orders(&three(), 0, None).unwrap();
        assert_eq!(o.len(), 6);
        assert_eq!(o[0].ranking, vec![0, 1, 2]);
        assert_eq!(o[5].ranking, vec![2, 1, 0]);
    }

    #[test]
    fn declared_pair_halves_orders() {
        let p = three()
            .period(0)
            .clone()
            .with_order(vec![(vec![0], vec![1])]);
        let u = ChoiceUniverse::new(vec![p]).unwrap();
        assert_eq!(enumerate_orders(&u, 0, None).unwrap().len(), 3);
    }

    #[test]
    fn best_element_choice() {
        let u = three();
        let o = LinearOrder {
            period: 0,
            ranking: vec![1, 2, 0],
        };
        assert_eq!(o.choices(u.period(0)), vec![1, 1, 0]);
    }

    #[test]
    fn eu_filter_keeps_mixture_in_middle() {
        let p = Period::new(
            "1",
            vec!["l1".into(), "l2".into(), "l3".into()],
            vec![Menu {
                id: "all".into(),
                items: vec![0, 1, 2],
            }],
        );
        let u = ChoiceUniverse::new(vec![p]).unwrap();
        let table = LotteryTable::new(vec![
            ("l1".into(), vec![0.5, 0.0, 0.0, 0.5]),
            ("l2".into(), vec![0.0, 0.5, 0.5, 0.0]),
            ("l3".into(), vec![0.25, 0.25, 0.25, 0.25]),
        ])
        .unwrap();
        let orders = enumerate_orders(&u, 0, Some(&table)).unwrap();
        let rankings: Vec<_> = orders.iter().map(|o| o.ranking.clone()).collect();
        assert_eq!(rankings, vec![vec![0, 2, 1], vec![1, 2, 0]]);
    }
}
