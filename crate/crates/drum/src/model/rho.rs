use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{schema, DrumError, Result};
use crate::model::universe::cartesian;

pub type MenuPath = Vec<usize>;
pub type ChoicePath = Vec<usize>;

/// Index space of a dynamic stochastic choice function: observed menu paths
/// and their choice paths, laid out in Kronecker order of the static rows
/// (period 1 slowest, then menu index, then item index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpace {
    menu_sizes: Vec<Vec<usize>>,
    menu_paths: Vec<MenuPath>,
    rows: Vec<(usize, ChoicePath)>,
    lookup: HashMap<(MenuPath, ChoicePath), usize>,
    path_lookup: HashMap<MenuPath, usize>,
}

impl PathSpace {
    pub fn new(menu_sizes: Vec<Vec<usize>>, mut menu_paths: Vec<MenuPath>) -> Result<Self> {
        let t_len = menu_sizes.len();
        if t_len == 0 {
            return Err(schema("path space needs at least one period"));
        }
        menu_paths.sort();
        menu_paths.dedup();
        if menu_paths.is_empty() {
            return Err(schema("no observed menu paths"));
        }
        for mp in &menu_paths {
            if mp.len() != t_len
                || mp
                    .iter()
                    .enumerate()
                    .any(|(t, &j)| j >= menu_sizes[t].len())
            {
                return Err(schema(format!(
                    "menu path {:?} does not fit the universe",
                    mp
                )));
            }
        }
        let offsets = static_offsets(&menu_sizes);
        let strides = strides(&menu_sizes);
        let mut keyed = Vec::new();
        for (m, mp) in menu_paths.iter().enumerate() {
            let sizes: Vec<usize> = mp
                .iter()
                .enumerate()
                .map(|(t, &j)| menu_sizes[t][j])
                .collect();
            for cp in cartesian(&sizes) {
                let full: usize = (0..t_len)
                    .map(|t| (offsets[t][mp[t]] + cp[t]) * strides[t])
                    .sum();
                keyed.push((full, m, cp));
            }
        }
        keyed.sort_by_key(|k| k.0);
        let rows: Vec<(usize, ChoicePath)> = keyed.into_iter().map(|(_, m, cp)| (m, cp)).collect();
        let lookup = rows
            .iter()
            .enumerate()
            .map(|(r, (m, cp))| ((menu_paths[*m].clone(), cp.clone()), r))
            .collect();
        let path_lookup = menu_paths
            .iter()
            .enumerate()
            .map(|(m, mp)| (mp.clone(), m))
            .collect();
        Ok(PathSpace {
            menu_sizes,
            menu_paths,
            rows,
            lookup,
            path_lookup,
        })
    }

    /// Every menu path observed.
    pub fn full(menu_sizes: Vec<Vec<usize>>) -> Result<Self> {
        let counts: Vec<usize> = menu_sizes.iter().map(|s| s.len()).collect();
        let paths = cartesian(&counts);
        Self::new(menu_sizes, paths)
    }

    pub fn horizon(&self) -> usize {
        self.menu_sizes.len()
    }

    pub fn menu_sizes(&self) -> &[Vec<usize>] {
        &self.menu_sizes
    }

    pub fn menu_paths(&self) -> &[MenuPath] {
        &self.menu_paths
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, r: usize) -> (&MenuPath, &ChoicePath) {
        let (m, cp) = &self.rows[r];
        (&self.menu_paths[*m], cp)
    }

    pub fn row_path_index(&self, r: usize) -> usize {
        self.rows[r].0
    }

    pub fn index_of(&self, menu_path: &[usize], choice_path: &[usize]) -> Option<usize> {
        self.lookup
            .get(&(menu_path.to_vec(), choice_path.to_vec()))
            .copied()
    }

    pub fn path_index(&self, menu_path: &[usize]) -> Option<usize> {
        self.path_lookup.get(menu_path).copied()
    }

    /// Rows belonging to each observed menu path.
    pub fn rows_by_path(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.menu_paths.len()];
        for (r, (m, _)) in self.rows.iter().enumerate() {
            out[*m].push(r);
        }
        out
    }

    /// Position of static row `(j, i)` of period `t`.
    pub fn static_row(&self, t: usize, j: usize, i: usize) -> usize {
        self.menu_sizes[t][..j].iter().sum::<usize>() + i
    }

    /// Position of each row inside the unrestricted Kronecker product.
    pub fn full_row_index(&self, r: usize) -> usize {
        let (mp, cp) = self.row(r);
        let st = strides(&self.menu_sizes);
        (0..self.horizon())
            .map(|t| self.static_row(t, mp[t], cp[t]) * st[t])
            .sum()
    }

    pub fn is_full(&self) -> bool {
        let total: usize = self.menu_sizes.iter().map(|s| s.len()).product();
        total == self.menu_paths.len()
    }
}

fn static_offsets(menu_sizes: &[Vec<usize>]) -> Vec<Vec<usize>> {
    menu_sizes
        .iter()
        .map(|sizes| {
            let mut acc = 0;
            sizes
                .iter()
                .map(|s| {
                    let o = acc;
                    acc += s;
                    o
                })
                .collect()
        })
        .collect()
}

fn strides(menu_sizes: &[Vec<usize>]) -> Vec<usize> {
    let rows: Vec<usize> = menu_sizes.iter().map(|s| s.iter().sum()).collect();
    let mut st = vec![1; rows.len()];
    for t in (0..rows.len().saturating_sub(1)).rev() {
        st[t] = st[t + 1] * rows[t + 1];
    }
    st
}

/// Probabilities of choice paths for each observed menu path.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticChoiceFunction {
    space: Arc<PathSpace>,
    prob: Vec<f64>,
    counts: Option<Vec<u64>>,
}

impl StochasticChoiceFunction {
    pub fn new(space: Arc<PathSpace>, prob: Vec<f64>) -> Result<Self> {
        let rho = StochasticChoiceFunction {
            space,
            prob,
            counts: None,
        };
        rho.validate(1e-9)?;
        Ok(rho)
    }

    /// Build without validation (for intermediate or perturbed vectors).
    pub fn new_unchecked(space: Arc<PathSpace>, prob: Vec<f64>) -> Self {
        assert_eq!(
            space.len(),
            prob.len(),
            "probability vector does not match the path space"
        );
        StochasticChoiceFunction {
            space,
            prob,
            counts: None,
        }
    }

    pub fn from_counts(space: Arc<PathSpace>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != space.len() {
            return Err(schema("count vector does not match the path space"));
        }
        let mut prob = vec![0.0; counts.len()];
        for (m, rows) in space.rows_by_path().iter().enumerate() {
            let total: u64 = rows.iter().map(|&r| counts[r]).sum();
            if total == 0 {
                return Err(DrumError::Record(format!(
                    "menu path {:?} has no observations",
                    space.menu_paths()[m]
                )));
            }
            for &r in rows {
                prob[r] = counts[r] as f64 / total as f64;
            }
        }
        Ok(StochasticChoiceFunction {
            space,
            prob,
            counts: Some(counts),
        })
    }

    /// Entries given as `(menu path, choice path, probability)`; every menu
    /// path mentioned is observed and unmentioned choice paths get zero.
    pub fn from_entries(
        menu_sizes: Vec<Vec<usize>>,
        entries: &[(MenuPath, ChoicePath, f64)],
    ) -> Result<Self> {
        let paths: Vec<MenuPath> = entries.iter().map(|e| e.0.clone()).collect();
        let space = Arc::new(PathSpace::new(menu_sizes, paths)?);
        let mut prob = vec![0.0; space.len()];
        for (mp, cp, p) in entries {
            let r = space
                .index_of(mp, cp)
                .ok_or_else(|| schema(format!("choice path {:?} not in menu path {:?}", cp, mp)))?;
            prob[r] = *p;
        }
        Self::new(space, prob)
    }

    pub fn space(&self) -> &Arc<PathSpace> {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.prob
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn with_counts(mut self, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), self.prob.len());
        self.counts = Some(counts);
        self
    }

    pub fn get(&self, menu_path: &[usize], choice_path: &[usize]) -> Option<f64> {
        self.space
            .index_of(menu_path, choice_path)
            .map(|r| self.prob[r])
    }

    /// Sample size of each observed menu path, if counts are known.
    pub fn path_sizes(&self) -> Option<Vec<u64>> {
        let counts = self.counts.as_ref()?;
        Some(
            self.space
                .rows_by_path()
                .iter()
                .map(|rows| rows.iter().map(|&r| counts[r]).sum())
                .collect(),
        )
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.prob.len() != self.space.len() {
            return Err(schema("probability vector does not match the path space"));
        }
        if let Some((r, p)) = self
            .prob
            .iter()
            .enumerate()
            .find(|(_, &p)| !(-tol..=1.0 + tol).contains(&p))
        {
            return Err(schema(format!(
                "probability {} at row {} outside [0,1]",
                p, r
            )));
        }
        for (m, rows) in self.space.rows_by_path().iter().enumerate() {
            let s: f64 = rows.iter().map(|&r| self.prob[r]).sum();
            if (s - 1.0).abs() > tol {
                return Err(schema(format!(
                    "probabilities of menu path {:?} sum to {}",
                    self.space.menu_paths()[m],
                    s
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_row_order() {
        // two periods, two budgets with two patches each
        let space = PathSpace::full(vec![vec![2, 2], vec![2, 2]]).unwrap();
        assert_eq!(space.len(), 16);
        // first rows: (x11, x11), (x11, x21), (x11, x12), (x11, x22)
        assert_eq!(space.row(0), (&vec![0, 0], &vec![0, 0]));
        assert_eq!(space.row(1), (&vec![0, 0], &vec![0, 1]));
        assert_eq!(space.row(2), (&vec![0, 1], &vec![0, 0]));
        assert_eq!(space.row(4), (&vec![0, 0], &vec![1, 0]));
        for r in 0..16 {
            assert_eq!(space.full_row_index(r), r);
        }
    }

    #[test]
    fn restricted_rows_keep_order() {
        let space =
            PathSpace::new(vec![vec![2, 2], vec![2, 2]], vec![vec![1, 0], vec![0, 1]]).unwrap();
        let full: Vec<usize> = (0..space.len()).map(|r| space.full_row_index(r)).collect();
        let mut sorted = full.clone();
        sorted.sort_unstable();
        assert_eq!(full, sorted);
    }

    #[test]
    fn counts_normalise_per_path() {
        let space = Arc::new(PathSpace::full(vec![vec![2]]).unwrap());
        let rho = StochasticChoiceFunction::from_counts(space, vec![2, 2]).unwrap();
        assert_eq!(rho.probs(), &[0.5, 0.5]);
    }
}
