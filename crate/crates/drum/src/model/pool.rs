use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{DrumError, Result};
use crate::geometry::{compute_patches, Arrangement, Budget, DemandGeometry, Side};
use crate::model::rho::{PathSpace, StochasticChoiceFunction};

/// A demand observation located on a budget, used to split patch mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledPoint {
    pub period: usize,
    pub budget: usize,
    pub point: Vec<f64>,
}

/// How mass on a per-period patch is split across the finer pooled patches.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolAllocation {
    /// Fail if any patch with positive mass overlaps several pooled patches.
    Unambiguous,
    /// `(period, budget, patch)` to `(pooled patch, share)` pairs.
    Rule(BTreeMap<(usize, usize, usize), Vec<(usize, f64)>>),
    /// Classify point data directly on the pooled arrangement.
    Points(Vec<PooledPoint>),
}

/// Cross-sections of all periods treated as one static arrangement.
#[derive(Debug, Clone)]
pub struct PooledChoice {
    pub arrangement: Arrangement,
    /// Period budgets `(t, j)` mapped onto each pooled budget.
    pub sources: Vec<Vec<(usize, usize)>>,
    pub rho: StochasticChoiceFunction,
}

impl PooledChoice {
    pub fn geometry(&self) -> DemandGeometry {
        DemandGeometry::new(vec![self.arrangement.clone()])
    }
}

/// Pool the per-period marginals onto the arrangement of every distinct
/// budget of the panel.
pub fn pool(
    rho: &StochasticChoiceFunction,
    geometry: &DemandGeometry,
    allocation: &PoolAllocation,
) -> Result<PooledChoice> {
    let horizon = geometry.horizon();
    if rho.space().horizon() != horizon {
        return Err(DrumError::Geometry(
            "choice function and geometry disagree on periods".into(),
        ));
    }
    let mut budgets: Vec<Budget> = Vec::new();
    let mut sources: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut target = vec![Vec::new(); horizon];
    for (t, arr) in geometry.periods.iter().enumerate() {
        for (j, b) in arr.budgets.iter().enumerate() {
            let k = match budgets.iter().position(|p| p.same_hyperplane(b)) {
                Some(k) => k,
                None => {
                    budgets.push(Budget {
                        period: 0,
                        index: budgets.len(),
                        ..b.clone()
                    });
                    sources.push(Vec::new());
                    budgets.len() - 1
                }
            };
            sources[k].push((t, j));
            target[t].push(k);
        }
    }
    let pooled = compute_patches(&budgets)?;
    let sizes: Vec<usize> = (0..budgets.len())
        .map(|k| pooled.regular_count(k))
        .collect();
    let space = Arc::new(PathSpace::full(vec![sizes.clone()])?);
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, s| Some(std::mem::replace(acc, *acc + s)))
        .collect();
    let mut mass = vec![0.0; space.len()];
    let mut weight = vec![0.0; budgets.len()];

    if let PoolAllocation::Points(points) = allocation {
        for p in points {
            let k = *target
                .get(p.period)
                .and_then(|v| v.get(p.budget))
                .ok_or_else(|| {
                    DrumError::Schema(format!("point references unknown budget {}", p.budget + 1))
                })?;
            let i = pooled
                .classify(k, &p.point)
                .filter(|&i| i < sizes[k])
                .ok_or_else(|| {
                    DrumError::Record(format!(
                        "point {:?} is not inside a regular pooled patch",
                        p.point
                    ))
                })?;
            mass[offsets[k] + i] += 1.0;
            weight[k] += 1.0;
        }
    } else {
        let marg = period_marginals(rho, geometry);
        for (t, arr) in geometry.periods.iter().enumerate() {
            for j in 0..arr.budgets.len() {
                let (w, shares) = &marg[t][j];
                if *w == 0.0 {
                    continue;
                }
                let k = target[t][j];
                weight[k] += w;
                for (i, &share) in shares.iter().enumerate() {
                    let overlaps = overlapping(&pooled, k, &arr.patches[j][i].signs, &target[t]);
                    let split: Vec<(usize, f64)> = match allocation {
                        _ if overlaps.len() == 1 => vec![(overlaps[0], 1.0)],
                        PoolAllocation::Rule(rule) => {
                            rule.get(&(t, j, i)).cloned().ok_or_else(|| {
                                DrumError::Parameter(format!(
                                    "no allocation for patch {} of budget {} in period {}",
                                    i + 1,
                                    j + 1,
                                    t + 1
                                ))
                            })?
                        }
                        _ if share == 0.0 => Vec::new(),
                        _ => {
                            return Err(DrumError::Parameter(format!(
                                "patch {} of budget {} in period {} spans {} pooled patches",
                                i + 1,
                                j + 1,
                                t + 1,
                                overlaps.len()
                            )))
                        }
                    };
                    let total: f64 = split.iter().map(|s| s.1).sum();
                    if !split.is_empty() && (total - 1.0).abs() > 1e-9 {
                        return Err(DrumError::Parameter(format!(
                            "allocation shares of patch {} sum to {}",
                            i + 1,
                            total
                        )));
                    }
                    for (p, s) in split {
                        if !overlaps.contains(&p) {
                            return Err(DrumError::Parameter(format!(
                                "pooled patch {} does not overlap patch {}",
                                p + 1,
                                i + 1
                            )));
                        }
                        mass[offsets[k] + p] += w * share * s;
                    }
                }
            }
        }
    }
    for (k, &w) in weight.iter().enumerate() {
        if w == 0.0 {
            return Err(DrumError::Record(format!(
                "pooled budget {} has no observations",
                k + 1
            )));
        }
        for v in &mut mass[offsets[k]..offsets[k] + sizes[k]] {
            *v /= w;
        }
    }
    let rho = StochasticChoiceFunction::new(space, mass)?;
    Ok(PooledChoice {
        arrangement: pooled,
        sources,
        rho,
    })
}

/// Regular pooled patches of budget `k` whose signs match `signs` on the
/// budgets of the source period.
fn overlapping(
    pooled: &Arrangement,
    k: usize,
    signs: &[Side],
    period_targets: &[usize],
) -> Vec<usize> {
    pooled
        .regular(k)
        .filter(|p| {
            period_targets
                .iter()
                .zip(signs)
                .all(|(&b, s)| b == k || p.signs[b] == *s)
        })
        .map(|p| p.index)
        .collect()
}

/// Per period and budget: total path weight and the marginal over patches.
fn period_marginals(
    rho: &StochasticChoiceFunction,
    geometry: &DemandGeometry,
) -> Vec<Vec<(f64, Vec<f64>)>> {
    let space = rho.space();
    let path_weight: Vec<f64> = match rho.path_sizes() {
        Some(n) => n.iter().map(|&v| v as f64).collect(),
        None => vec![1.0; space.menu_paths().len()],
    };
    let mut out: Vec<Vec<(f64, Vec<f64>)>> = geometry
        .periods
        .iter()
        .map(|a| {
            (0..a.budgets.len())
                .map(|j| (0.0, vec![0.0; a.regular_count(j)]))
                .collect()
        })
        .collect();
    for (m, mp) in space.menu_paths().iter().enumerate() {
        for (t, &j) in mp.iter().enumerate() {
            out[t][j].0 += path_weight[m];
        }
    }
    for (r, &p) in rho.probs().iter().enumerate() {
        let (mp, cp) = space.row(r);
        let w = path_weight[space.row_path_index(r)];
        for t in 0..mp.len() {
            out[t][mp[t]].1[cp[t]] += w * p;
        }
    }
    for per in &mut out {
        for (w, v) in per.iter_mut() {
            if *w > 0.0 {
                v.iter_mut().for_each(|x| *x /= *w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_period_geometry() -> DemandGeometry {
        let b = |t, j, p: [f64; 2]| Budget {
            period: t,
            index: j,
            prices: p.to_vec(),
            expenditure: 1.0,
        };
        DemandGeometry::from_budgets(&[
            b(0, 0, [2.0, 1.0]),
            b(0, 1, [1.0, 2.0]),
            b(1, 0, [2.0, 1.0]),
            b(1, 1, [1.0, 1.5]),
        ])
        .unwrap()
    }

    #[test]
    fn single_period_is_identity() {
        let g = DemandGeometry::simple(1);
        let rho = StochasticChoiceFunction::from_entries(
            vec![vec![2, 2]],
            &[
                (vec![0], vec![0], 0.3),
                (vec![0], vec![1], 0.7),
                (vec![1], vec![0], 0.6),
                (vec![1], vec![1], 0.4),
            ],
        )
        .unwrap();
        let p = pool(&rho, &g, &PoolAllocation::Unambiguous).unwrap();
        assert_eq!(p.rho.probs(), rho.probs());
    }

    #[test]
    fn ambiguous_split_needs_rule() {
        let g = two_period_geometry();
        let space = Arc::new(
            PathSpace::full(
                g.periods
                    .iter()
                    .map(|a| (0..2).map(|j| a.regular_count(j)).collect())
                    .collect(),
            )
            .unwrap(),
        );
        let n = space.len();
        let mut prob = vec![0.0; n];
        for rows in space.rows_by_path() {
            for &r in &rows {
                prob[r] = 1.0 / rows.len() as f64;
            }
        }
        let rho = StochasticChoiceFunction::new(space, prob).unwrap();
        assert!(matches!(
            pool(&rho, &g, &PoolAllocation::Unambiguous),
            Err(DrumError::Parameter(_))
        ));
    }

    #[test]
    fn points_classified_on_pooled_cells() {
        let g = two_period_geometry();
        let space = Arc::new(
            PathSpace::full(
                g.periods
                    .iter()
                    .map(|a| (0..2).map(|j| a.regular_count(j)).collect())
                    .collect(),
            )
            .unwrap(),
        );
        let rho = StochasticChoiceFunction::new_unchecked(space.clone(), vec![0.0; space.len()]);
        let pts = vec![
            PooledPoint {
                period: 0,
                budget: 0,
                point: vec![0.45, 0.1],
            },
            PooledPoint {
                period: 0,
                budget: 1,
                point: vec![0.1, 0.45],
            },
            PooledPoint {
                period: 1,
                budget: 1,
                point: vec![0.5, 1.0 / 3.0],
            },
        ];
        let p = pool(&rho, &g, &PoolAllocation::Points(pts)).unwrap();
        assert_eq!(p.sources[0], vec![(0, 0), (1, 0)]);
        assert_eq!(p.arrangement.budgets.len(), 3);
    }
}
