use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{DrumError, Result};
use crate::geometry::budget::Budget;
use crate::solve::{Cmp, Lp, LpOutcome, Sense};

const MARGIN_TOL: f64 = 1e-9;
const VERTEX_TOL: f64 = 1e-9;

/// Position of a point relative to another budget hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Below,
    On,
    Above,
}

impl Side {
    pub fn of(slack: f64, tol: f64) -> Side {
        if slack < -tol {
            Side::Below
        } else if slack > tol {
            Side::Above
        } else {
            Side::On
        }
    }
}

/// A cell of one budget hyperplane cut by the other budgets of its period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub budget: usize,
    pub index: usize,
    /// Side of every budget of the arrangement; the owner's own entry is `On`.
    pub signs: Vec<Side>,
    pub representative: Vec<f64>,
    /// Vertices of the closure of the cell.
    pub vertices: Vec<Vec<f64>>,
    pub is_intersection: bool,
}

impl Patch {
    pub fn label(&self) -> String {
        format!("x{}|{}", self.index + 1, self.budget + 1)
    }
}

/// Patches of a set of budgets together with the strict dominance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrangement {
    pub budgets: Vec<Budget>,
    /// Per budget: regular patches in canonical order, then intersection patches.
    pub patches: Vec<Vec<Patch>>,
    /// `(dominant, dominated)` as `(budget, patch)` pairs over regular patches.
    pub dominance: Vec<((usize, usize), (usize, usize))>,
}

impl Arrangement {
    /// The two-budget arrangement with prices (2,1) and (1,2) at unit expenditure.
    pub fn simple() -> Self {
        let budgets = vec![
            Budget {
                period: 0,
                index: 0,
                prices: vec![2.0, 1.0],
                expenditure: 1.0,
            },
            Budget {
                period: 0,
                index: 1,
                prices: vec![1.0, 2.0],
                expenditure: 1.0,
            },
        ];
        compute_patches(&budgets).expect("simple arrangement is regular")
    }

    /// Three goods, three budgets with every pairwise intersection present.
    /// Patches 2 and 3 of the third budget are swapped to the catalog labels.
    pub fn demand3x3() -> Self {
        let budgets = vec![
            Budget {
                period: 0,
                index: 0,
                prices: vec![4.0, 1.0, 1.0],
                expenditure: 1.0,
            },
            Budget {
                period: 0,
                index: 1,
                prices: vec![1.0, 4.0, 1.0],
                expenditure: 1.0,
            },
            Budget {
                period: 0,
                index: 2,
                prices: vec![1.0, 1.0, 4.0],
                expenditure: 1.0,
            },
        ];
        compute_patches(&budgets)
            .and_then(|a| a.relabeled(2, &[0, 2, 1, 3]))
            .expect("catalog arrangement is regular")
    }

    pub fn regular(&self, j: usize) -> impl Iterator<Item = &Patch> {
        self.patches[j].iter().filter(|p| !p.is_intersection)
    }

    pub fn regular_count(&self, j: usize) -> usize {
        self.regular(j).count()
    }

    pub fn dominates(&self, better: (usize, usize), worse: (usize, usize)) -> bool {
        self.dominance.contains(&(better, worse))
    }

    /// Patch of budget `j` containing `y`, matched by sign vector.
    pub fn classify(&self, j: usize, y: &[f64]) -> Option<usize> {
        let signs: Vec<Side> = self
            .budgets
            .iter()
            .enumerate()
            .map(|(k, b)| {
                if k == j {
                    Side::On
                } else {
                    Side::of(b.slack(y), 1e-12)
                }
            })
            .collect();
        self.patches[j].iter().position(|p| p.signs == signs)
    }

    /// Reorder the regular patches of budget `j`: new patch `k` is old patch `order[k]`.
    pub fn relabeled(mut self, j: usize, order: &[usize]) -> Result<Self> {
        let n = self.regular_count(j);
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(DrumError::Parameter(format!(
                "relabel of budget {} is not a permutation",
                j + 1
            )));
        }
        let old = self.patches[j].clone();
        let mut inverse = vec![0; n];
        for (new, &o) in order.iter().enumerate() {
            inverse[o] = new;
            self.patches[j][new] = Patch {
                index: new,
                ..old[o].clone()
            };
        }
        let remap = |(b, i): (usize, usize)| {
            if b == j && i < n {
                (b, inverse[i])
            } else {
                (b, i)
            }
        };
        self.dominance = self
            .dominance
            .iter()
            .map(|&(a, b)| (remap(a), remap(b)))
            .collect();
        self.dominance.sort();
        Ok(self)
    }
}

/// Enumerate the patches of each budget by sign vector, certify each with a
/// strict-margin feasibility program and derive the dominance order.
pub fn compute_patches(budgets: &[Budget]) -> Result<Arrangement> {
    if budgets.is_empty() {
        return Err(DrumError::Schema("no budgets".into()));
    }
    for b in budgets {
        b.validate()?;
    }
    let k = budgets[0].goods();
    if budgets.iter().any(|b| b.goods() != k) {
        return Err(DrumError::Schema(
            "budgets disagree on the number of goods".into(),
        ));
    }
    for a in 0..budgets.len() {
        for b in a + 1..budgets.len() {
            if budgets[a].same_hyperplane(&budgets[b]) {
                return Err(DrumError::DegenerateArrangement(format!(
                    "budgets {} and {} coincide",
                    a + 1,
                    b + 1
                )));
            }
        }
    }
    let n = budgets.len();
    let mut patches = Vec::with_capacity(n);
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&o| o != j).collect();
        let mut regular = Vec::new();
        let mut crossing = Vec::new();
        for code in 0..3usize.pow(others.len() as u32) {
            let mut signs = vec![Side::On; n];
            let mut c = code;
            for &o in &others {
                signs[o] = match c % 3 {
                    0 => Side::Above,
                    1 => Side::Below,
                    _ => Side::On,
                };
                c /= 3;
            }
            let Some(rep) = margin_point(budgets, j, &signs)? else {
                continue;
            };
            let vertices = cell_vertices(budgets, j, &signs);
            let is_intersection = others.iter().any(|&o| signs[o] == Side::On);
            let patch = Patch {
                budget: j,
                index: 0,
                signs,
                representative: rep,
                vertices,
                is_intersection,
            };
            if is_intersection {
                crossing.push((code, patch));
            } else {
                regular.push(patch);
            }
        }
        if regular.is_empty() {
            return Err(DrumError::DegenerateArrangement(format!(
                "budget {} has no regular patch",
                j + 1
            )));
        }
        if k == 2 {
            regular.sort_by(|a, b| a.representative[0].total_cmp(&b.representative[0]));
        } else {
            let key = |p: &Patch| -> usize {
                others
                    .iter()
                    .enumerate()
                    .map(|(bit, &o)| usize::from(p.signs[o] == Side::Below) << bit)
                    .sum()
            };
            regular.sort_by_key(key);
        }
        crossing.sort_by_key(|(code, _)| *code);
        let mut all: Vec<Patch> = regular;
        all.extend(crossing.into_iter().map(|(_, p)| p));
        for (i, p) in all.iter_mut().enumerate() {
            p.index = i;
        }
        patches.push(all);
    }
    let mut arrangement = Arrangement {
        budgets: budgets.to_vec(),
        patches,
        dominance: Vec::new(),
    };
    arrangement.dominance = dominance_pairs(&arrangement)?;
    Ok(arrangement)
}

fn margin_point(budgets: &[Budget], j: usize, signs: &[Side]) -> Result<Option<Vec<f64>>> {
    let k = budgets[j].goods();
    let mut lp = Lp::new(Sense::Maximize);
    let y: Vec<usize> = (0..k)
        .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
        .collect();
    let delta = lp.add_var(1.0, 0.0, 1.0);
    let row = |b: &Budget| -> Vec<(usize, f64)> {
        y.iter().zip(&b.prices).map(|(&v, &p)| (v, p)).collect()
    };
    lp.add_row(row(&budgets[j]), Cmp::Eq, budgets[j].expenditure);
    for (o, b) in budgets.iter().enumerate() {
        if o == j {
            continue;
        }
        let mut terms = row(b);
        match signs[o] {
            Side::On => lp.add_row(terms, Cmp::Eq, b.expenditure),
            Side::Below => {
                terms.push((delta, 1.0));
                lp.add_row(terms, Cmp::Le, b.expenditure);
            }
            Side::Above => {
                terms.push((delta, -1.0));
                lp.add_row(terms, Cmp::Ge, b.expenditure);
            }
        }
    }
    for &v in &y {
        lp.add_row(vec![(v, 1.0), (delta, -1.0)], Cmp::Ge, 0.0);
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, objective } if objective > MARGIN_TOL => {
            Ok(Some(y.iter().map(|&v| x[v]).collect()))
        }
        _ => Ok(None),
    }
}

/// Vertices of the closed cell `{y >= 0 on budget j, closed sign constraints}`.
fn cell_vertices(budgets: &[Budget], j: usize, signs: &[Side]) -> Vec<Vec<f64>> {
    let k = budgets[j].goods();
    // candidate tight constraints: other budgets then coordinate planes
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (o, b) in budgets.iter().enumerate() {
        if o != j {
            planes.push((b.prices.clone(), b.expenditure));
        }
    }
    for c in 0..k {
        let mut e = vec![0.0; k];
        e[c] = 1.0;
        planes.push((e, 0.0));
    }
    let inside = |y: &[f64]| -> bool {
        y.iter().all(|&v| v >= -VERTEX_TOL)
            && budgets.iter().enumerate().all(|(o, b)| {
                let s = b.slack(y);
                match if o == j { Side::On } else { signs[o] } {
                    Side::Below => s <= VERTEX_TOL,
                    Side::Above => s >= -VERTEX_TOL,
                    Side::On => s.abs() <= VERTEX_TOL,
                }
            })
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for combo in combinations(planes.len(), k - 1) {
        let mut m = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for c in 0..k {
            m[(0, c)] = budgets[j].prices[c];
        }
        rhs[0] = budgets[j].expenditure;
        for (r, &pi) in combo.iter().enumerate() {
            for c in 0..k {
                m[(r + 1, c)] = planes[pi].0[c];
            }
            rhs[r + 1] = planes[pi].1;
        }
        let Some(sol) = m.lu().solve(&rhs) else {
            continue;
        };
        let y: Vec<f64> = sol
            .iter()
            .map(|&v| if v.abs() < 1e-14 { 0.0 } else { v })
            .collect();
        if y.iter().all(|v| v.is_finite()) && inside(&y) && !out.iter().any(|p| dist(p, &y) < 1e-9)
        {
            out.push(y);
        }
    }
    out.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, n, r, &mut cur, &mut out);
    out
}

/// `better` dominates `worse` when every point of `worse` is weakly below some
/// point of `better`'s closure (checked at the vertices of `worse`, which
/// suffices by convexity) and strictly so at its representative.
fn dominance_pairs(arr: &Arrangement) -> Result<Vec<((usize, usize), (usize, usize))>> {
    let mut pairs = Vec::new();
    for (a, pa) in arr.patches.iter().enumerate() {
        for better in pa.iter().filter(|p| !p.is_intersection) {
            for (b, pb) in arr.patches.iter().enumerate() {
                if a == b {
                    continue;
                }
                for worse in pb.iter().filter(|p| !p.is_intersection) {
                    if worse.signs[a] != Side::Below {
                        continue;
                    }
                    let mut ok = true;
                    for v in &worse.vertices {
                        if upper_margin(arr, better, v)? < -1e-10 {
                            ok = false;
                            break;
                        }
                    }
                    if ok && upper_margin(arr, better, &worse.representative)? > MARGIN_TOL {
                        pairs.push(((a, better.index), (b, worse.index)));
                    }
                }
            }
        }
    }
    pairs.sort();
    Ok(pairs)
}

/// Largest `d` with some `z` in the closure of `patch` satisfying `z >= y + d`.
fn upper_margin(arr: &Arrangement, patch: &Patch, y: &[f64]) -> Result<f64> {
    let j = patch.budget;
    let k = y.len();
    let mut lp = Lp::new(Sense::Maximize);
    let z: Vec<usize> = (0..k)
        .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
        .collect();
    let d = lp.add_var(1.0, -1.0, 1.0);
    let row = |b: &Budget| -> Vec<(usize, f64)> {
        z.iter().zip(&b.prices).map(|(&v, &p)| (v, p)).collect()
    };
    lp.add_row(row(&arr.budgets[j]), Cmp::Eq, arr.budgets[j].expenditure);
    for (o, b) in arr.budgets.iter().enumerate() {
        if o == j {
            continue;
        }
        match patch.signs[o] {
            Side::Below => lp.add_row(row(b), Cmp::Le, b.expenditure),
            Side::Above => lp.add_row(row(b), Cmp::Ge, b.expenditure),
            Side::On => lp.add_row(row(b), Cmp::Eq, b.expenditure),
        }
    }
    for c in 0..k {
        lp.add_row(vec![(z[c], 1.0), (d, -1.0)], Cmp::Ge, y[c]);
    }
    match lp.solve()? {
        LpOutcome::Optimal { objective, .. } => Ok(objective),
        _ => Ok(f64::NEG_INFINITY),
    }
}
