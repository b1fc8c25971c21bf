use crate::error::{DrumError, Result};
use crate::model::PathSpace;
use crate::rational::{qi, QMatrix, Q};
use crate::repr::ineq::{InequalityMatrix, RowKind};
use crate::repr::type_matrix::TypeMatrix;

/// A static type matrix with the last row of every menu but the first
/// removed; removed rows are recovered as `G` times the kept rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduced {
    pub keep: Vec<usize>,
    pub removed: Vec<usize>,
    pub a_star: TypeMatrix,
    pub a_minus: TypeMatrix,
    /// `removed x keep`.
    pub g: QMatrix,
}

impl Reduced {
    pub fn dim(&self) -> usize {
        self.keep.len()
    }

    /// Position of a static row among the kept rows.
    pub fn kept_position(&self, static_row: usize) -> Option<usize> {
        self.keep.iter().position(|&r| r == static_row)
    }
}

pub fn reduce_star(menu_sizes: &[usize], a: &TypeMatrix) -> Result<Reduced> {
    let total: usize = menu_sizes.iter().sum();
    if total != a.nrows() {
        return Err(DrumError::Parameter(
            "menu sizes do not match the type matrix".into(),
        ));
    }
    let mut offsets = Vec::with_capacity(menu_sizes.len());
    let mut acc = 0;
    for &s in menu_sizes {
        offsets.push(acc);
        acc += s;
    }
    let removed: Vec<usize> = (1..menu_sizes.len())
        .map(|j| offsets[j] + menu_sizes[j] - 1)
        .collect();
    let keep: Vec<usize> = (0..total).filter(|r| !removed.contains(r)).collect();
    let mut g = QMatrix::zeros(removed.len(), keep.len());
    for (k, j) in (1..menu_sizes.len()).enumerate() {
        for i in 0..menu_sizes[0] {
            g[(k, i)] = qi(1);
        }
        for i in 0..menu_sizes[j] - 1 {
            let pos = keep
                .iter()
                .position(|&r| r == offsets[j] + i)
                .expect("kept row");
            g[(k, pos)] = qi(-1);
        }
    }
    Ok(Reduced {
        a_star: a.select_rows(&keep),
        a_minus: a.select_rows(&removed),
        keep,
        removed,
        g,
    })
}

/// Inequalities on the kept rows: facet and equality rows with removed
/// coordinates substituted, duplicates dropped, then nonnegativity of the
/// kept rows.
pub fn reduce_h(h: &InequalityMatrix, reduced: &Reduced) -> Result<InequalityMatrix> {
    let total = reduced.keep.len() + reduced.removed.len();
    if h.ncols() != total {
        return Err(DrumError::Parameter(
            "inequality matrix does not match the static rows".into(),
        ));
    }
    let mut out = InequalityMatrix::new(reduced.keep.len());
    for r in 0..h.nrows() {
        let kind = h.kind(r);
        if kind == RowKind::Nonnegativity {
            continue;
        }
        let dense = h.dense_row(r);
        let mut row: Vec<Q> = reduced.keep.iter().map(|&c| dense[c]).collect();
        for (k, &c) in reduced.removed.iter().enumerate() {
            if dense[c] != qi(0) {
                for (p, v) in row.iter_mut().enumerate() {
                    *v += dense[c] * reduced.g[(k, p)];
                }
            }
        }
        out.push_dense(&row, kind);
    }
    out.push_identity();
    out.dedup();
    Ok(out)
}

/// Rows of the path space whose choice path avoids removed rows in every
/// period, paired with their index in the reduced Kronecker space.
pub fn reduced_rows(space: &PathSpace, reduced: &[Reduced]) -> Vec<(usize, usize)> {
    let dims: Vec<usize> = reduced.iter().map(Reduced::dim).collect();
    let mut strides = vec![1; dims.len()];
    for t in (0..dims.len().saturating_sub(1)).rev() {
        strides[t] = strides[t + 1] * dims[t + 1];
    }
    let mut out = Vec::new();
    'rows: for r in 0..space.len() {
        let (mp, cp) = space.row(r);
        let mut idx = 0;
        for t in 0..mp.len() {
            match reduced[t].kept_position(space.static_row(t, mp[t], cp[t])) {
                Some(p) => idx += p * strides[t],
                None => continue 'rows,
            }
        }
        out.push((r, idx));
    }
    out
}
