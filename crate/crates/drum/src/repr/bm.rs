use nalgebra::DMatrix;

use crate::error::{DrumError, Result};
use crate::model::{ChoiceUniverse, Period, StochasticChoiceFunction};
use crate::rational::qi;
use crate::repr::ineq::{InequalityMatrix, RowKind};

/// Square matrix of alternating sums over supersets: the row for `(x, B)`
/// has `(-1)^{|B' \ B|}` in column `(x, B')` for every menu `B'` containing `B`.
/// Requires every nonempty subset of alternatives as a menu.
pub fn bm_matrix(period: &Period) -> Result<InequalityMatrix> {
    let n = period.alternatives.len();
    if n > 12 {
        return Err(DrumError::Size(format!(
            "{} alternatives give 2^{} menus",
            n, n
        )));
    }
    let masks: Vec<u32> = period
        .menus
        .iter()
        .map(|m| m.items.iter().fold(0u32, |acc, &i| acc | 1 << i))
        .collect();
    let mut sorted = masks.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != (1usize << n) - 1 || sorted.len() != masks.len() {
        return Err(DrumError::Parameter(
            "every nonempty subset must be a menu".into(),
        ));
    }
    let mut offsets = Vec::with_capacity(masks.len());
    let mut acc = 0;
    for m in &period.menus {
        offsets.push(acc);
        acc += m.items.len();
    }
    let mut h = InequalityMatrix::new(acc);
    for (j, menu) in period.menus.iter().enumerate() {
        for &x in &menu.items {
            let mut row = Vec::new();
            for (k, other) in period.menus.iter().enumerate() {
                if masks[k] & masks[j] == masks[j] {
                    let extra = (masks[k] & !masks[j]).count_ones();
                    let pos = other
                        .items
                        .iter()
                        .position(|&y| y == x)
                        .expect("superset contains x");
                    row.push((offsets[k] + pos, qi(if extra % 2 == 0 { 1 } else { -1 })));
                }
            }
            h.push(row, RowKind::Facet);
        }
    }
    Ok(h)
}

/// Apply `M_1 (x) ... (x) M_T` to a vector laid out in Kronecker order.
pub fn kron_apply(mats: &[DMatrix<f64>], v: &[f64]) -> Vec<f64> {
    let cols: usize = mats.iter().map(|m| m.ncols()).product();
    assert_eq!(cols, v.len(), "vector length");
    let mut cur = v.to_vec();
    let mut dims: Vec<usize> = mats.iter().map(|m| m.ncols()).collect();
    for t in (0..mats.len()).rev() {
        let left: usize = dims[..t].iter().product();
        let right: usize = dims[t + 1..].iter().product();
        let (rows, inner) = (mats[t].nrows(), dims[t]);
        let mut next = vec![0.0; left * rows * right];
        for l in 0..left {
            for r in 0..rows {
                for k in 0..inner {
                    let a = mats[t][(r, k)];
                    if a == 0.0 {
                        continue;
                    }
                    let src = (l * inner + k) * right;
                    let dst = (l * rows + r) * right;
                    for s in 0..right {
                        next[dst + s] += a * cur[src + s];
                    }
                }
            }
        }
        dims[t] = rows;
        cur = next;
    }
    cur
}

/// Recursive alternating-sum values of a choice function observed on every
/// menu path of a full-variation universe, in row order.
pub fn drum_bm_values(
    rho: &StochasticChoiceFunction,
    universe: &ChoiceUniverse,
) -> Result<Vec<f64>> {
    if !rho.space().is_full() {
        return Err(DrumError::Parameter(
            "every menu path must be observed".into(),
        ));
    }
    let mats = universe
        .periods()
        .iter()
        .map(|p| bm_matrix(p).map(|h| h.to_dense().to_f64()))
        .collect::<Result<Vec<_>>>()?;
    Ok(kron_apply(&mats, rho.probs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_alternatives() {
        let u = ChoiceUniverse::full_variation(&["a", "b"], 1).unwrap();
        let h = bm_matrix(u.period(0)).unwrap();
        // menus {a}, {b}, {a,b}
        let expect = crate::rational::QMatrix::from_int_rows(&[
            vec![1, 0, -1, 0],
            vec![0, 1, 0, -1],
            vec![0, 0, 1, 0],
            vec![0, 0, 0, 1],
        ]);
        assert_eq!(h.to_dense(), expect);
    }

    #[test]
    fn kron_apply_matches_dense() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let v = [1.0, 2.0, 3.0, 4.0];
        let dense = a.kronecker(&b);
        let want = &dense * nalgebra::DVector::from_row_slice(&v);
        assert_eq!(kron_apply(&[a, b], &v), want.as_slice());
    }
}
