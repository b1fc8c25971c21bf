use nalgebra::DMatrix;

use crate::error::{DrumError, Result};
use crate::model::{cartesian, ChoiceUniverse, PathSpace};
use crate::rational::{qi, QMatrix};

/// Largest number of entries a dense view of a type matrix may have.
pub const MAX_ENTRIES: usize = 100_000_000;

/// 0/1 matrix whose columns are deterministic choice types; stored as the
/// row indices of the ones in each column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMatrix {
    nrows: usize,
    columns: Vec<Vec<usize>>,
    /// For each column, the static column chosen in every period.
    keys: Vec<Vec<usize>>,
}

impl TypeMatrix {
    pub fn new(nrows: usize, columns: Vec<Vec<usize>>, keys: Vec<Vec<usize>>) -> Self {
        assert_eq!(columns.len(), keys.len());
        TypeMatrix {
            nrows,
            columns,
            keys,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: usize) -> &[usize] {
        &self.columns[c]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    pub fn key(&self, c: usize) -> &[usize] {
        &self.keys[c]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.columns[c].binary_search(&r).is_ok()
    }

    /// `A nu`.
    pub fn apply(&self, nu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (col, &w) in self.columns.iter().zip(nu) {
            for &r in col {
                out[r] += w;
            }
        }
        out
    }

    /// `A' y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&r| y[r]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols());
        for (c, col) in self.columns.iter().enumerate() {
            for &r in col {
                m[(r, c)] = 1.0;
            }
        }
        m
    }

    pub fn to_qmatrix(&self) -> QMatrix {
        let mut m = QMatrix::zeros(self.nrows, self.ncols());
        for (c, col) in self.columns.iter().enumerate() {
            for &r in col {
                m[(r, c)] = qi(1);
            }
        }
        m
    }

    pub fn select_rows(&self, rows: &[usize]) -> TypeMatrix {
        let mut pos = vec![usize::MAX; self.nrows];
        for (k, &r) in rows.iter().enumerate() {
            pos[r] = k;
        }
        let columns = self
            .columns
            .iter()
            .map(|col| {
                let mut v: Vec<usize> = col
                    .iter()
                    .filter(|&&r| pos[r] != usize::MAX)
                    .map(|&r| pos[r])
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        TypeMatrix {
            nrows: rows.len(),
            columns,
            keys: self.keys.clone(),
        }
    }
}

/// Static type matrix of period `t`: one column per choice function (the
/// chosen item position in every menu); duplicate columns are merged.
pub fn build_static_a(
    universe: &ChoiceUniverse,
    t: usize,
    choice_functions: &[Vec<usize>],
) -> Result<TypeMatrix> {
    let period = universe.period(t);
    let sizes = period.menu_sizes();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &s in &sizes {
        offsets.push(acc);
        acc += s;
    }
    let mut columns: Vec<Vec<usize>> = Vec::new();
    let mut keys = Vec::new();
    for (k, f) in choice_functions.iter().enumerate() {
        if f.len() != sizes.len() || f.iter().zip(&sizes).any(|(&i, &s)| i >= s) {
            return Err(DrumError::Parameter(format!(
                "choice function {} does not fit period {}",
                k + 1,
                t + 1
            )));
        }
        let col: Vec<usize> = f.iter().enumerate().map(|(j, &i)| offsets[j] + i).collect();
        if !columns.contains(&col) {
            columns.push(col);
            keys.push(vec![k]);
        }
    }
    Ok(TypeMatrix {
        nrows: acc,
        columns,
        keys,
    })
}

/// Dynamic type matrix restricted to the observed menu paths: every profile
/// of static columns, period 1 varying slowest.
pub fn kron_dynamic(statics: &[TypeMatrix], space: &PathSpace) -> Result<TypeMatrix> {
    if statics.len() != space.horizon() {
        return Err(DrumError::Parameter(
            "one static type matrix per period is required".into(),
        ));
    }
    let counts: Vec<usize> = statics.iter().map(TypeMatrix::ncols).collect();
    let ncols: usize = counts
        .iter()
        .try_fold(1usize, |a, &c| a.checked_mul(c))
        .unwrap_or(usize::MAX);
    if ncols.saturating_mul(space.len()) > MAX_ENTRIES {
        return Err(DrumError::Size(format!(
            "{} x {} dynamic type matrix",
            space.len(),
            ncols
        )));
    }
    // chosen item of static column c on menu j, per period
    let chosen: Vec<Vec<Vec<usize>>> = statics
        .iter()
        .enumerate()
        .map(|(t, a)| {
            let sizes = &space.menu_sizes()[t];
            a.columns
                .iter()
                .map(|col| {
                    let mut pick = vec![0; sizes.len()];
                    for &r in col {
                        let (j, i) = locate(sizes, r);
                        pick[j] = i;
                    }
                    pick
                })
                .collect()
        })
        .collect();
    let mut columns = Vec::with_capacity(ncols);
    let mut keys = Vec::with_capacity(ncols);
    let mut cp = vec![0; statics.len()];
    for profile in cartesian(&counts) {
        let mut col = Vec::with_capacity(space.menu_paths().len());
        for mp in space.menu_paths() {
            for (t, &j) in mp.iter().enumerate() {
                cp[t] = chosen[t][profile[t]][j];
            }
            col.push(
                space
                    .index_of(mp, &cp)
                    .expect("choice path belongs to its menu path"),
            );
        }
        col.sort_unstable();
        columns.push(col);
        keys.push(profile);
    }
    Ok(TypeMatrix {
        nrows: space.len(),
        columns,
        keys,
    })
}

fn locate(sizes: &[usize], mut r: usize) -> (usize, usize) {
    for (j, &s) in sizes.iter().enumerate() {
        if r < s {
            return (j, r);
        }
        r -= s;
    }
    panic!("static row out of range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicate_columns() {
        let u = ChoiceUniverse::binary_menus(&["x", "y", "z"], 1).unwrap();
        let a = build_static_a(&u, 0, &[vec![0, 0, 0], vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        assert_eq!(a.ncols(), 2);
        assert_eq!(a.column(1), &[1, 3, 5]);
    }

    #[test]
    fn dynamic_columns_are_kronecker_products() {
        let u = ChoiceUniverse::binary_menus(&["x", "y", "z"], 1).unwrap();
        let a = build_static_a(&u, 0, &[vec![0, 0, 0], vec![1, 0, 1]]).unwrap();
        let space = PathSpace::full(vec![vec![2, 2, 2], vec![2, 2, 2]]).unwrap();
        let d = kron_dynamic(&[a.clone(), a.clone()], &space).unwrap();
        let full = a.to_qmatrix().kron(&a.to_qmatrix());
        assert_eq!(d.to_qmatrix(), full);
    }
}
