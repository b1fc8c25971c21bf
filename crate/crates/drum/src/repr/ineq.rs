use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DrumError, Result};
use crate::model::PathSpace;
use crate::rational::{qi, QMatrix, Q};

/// Role of a row of an inequality matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowKind {
    Facet,
    Nonnegativity,
    /// One half of an equality written as two opposite inequalities.
    Equality,
}

/// Sparse rational matrix `H` read as the system `H x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, Q)>>,
    kinds: Vec<RowKind>,
}

impl InequalityMatrix {
    pub fn new(ncols: usize) -> Self {
        InequalityMatrix {
            ncols,
            rows: Vec::new(),
            kinds: Vec::new(),
        }
    }

    pub fn from_dense(m: &QMatrix, kind: RowKind) -> Self {
        let mut h = Self::new(m.ncols());
        for r in 0..m.nrows() {
            h.push_dense(m.row(r), kind);
        }
        h
    }

    pub fn from_int_rows(ncols: usize, rows: &[Vec<i64>], kind: RowKind) -> Self {
        let mut h = Self::new(ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "row width");
            let dense: Vec<Q> = r.iter().map(|&v| qi(v)).collect();
            h.push_dense(&dense, kind);
        }
        h
    }

    pub fn push(&mut self, mut row: Vec<(usize, Q)>, kind: RowKind) {
        row.retain(|(_, v)| !v.is_zero());
        row.sort_by_key(|e| e.0);
        self.rows.push(row);
        self.kinds.push(kind);
    }

    pub fn push_dense(&mut self, row: &[Q], kind: RowKind) {
        self.push(row.iter().enumerate().map(|(c, &v)| (c, v)).collect(), kind);
    }

    pub fn push_identity(&mut self) {
        for c in 0..self.ncols {
            self.push(vec![(c, qi(1))], RowKind::Nonnegativity);
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[(usize, Q)] {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[Vec<(usize, Q)>] {
        &self.rows
    }

    pub fn kind(&self, r: usize) -> RowKind {
        self.kinds[r]
    }

    pub fn kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    /// Rows of the given kinds only.
    pub fn filter(&self, keep: impl Fn(RowKind) -> bool) -> Self {
        let mut h = Self::new(self.ncols);
        for (row, &k) in self.rows.iter().zip(&self.kinds) {
            if keep(k) {
                h.rows.push(row.clone());
                h.kinds.push(k);
            }
        }
        h
    }

    pub fn dense_row(&self, r: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.ncols];
        for &(c, x) in &self.rows[r] {
            v[c] = x;
        }
        v
    }

    pub fn to_dense(&self) -> QMatrix {
        let rows: Vec<Vec<Q>> = (0..self.nrows()).map(|r| self.dense_row(r)).collect();
        if rows.is_empty() {
            QMatrix::zeros(0, self.ncols)
        } else {
            QMatrix::from_rows(&rows)
        }
    }

    pub fn row_f64(&self, r: usize) -> Vec<(usize, f64)> {
        self.rows[r]
            .iter()
            .map(|&(c, v)| (c, v.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    /// `H x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "vector length");
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(c, v)| v.to_f64().unwrap_or(f64::NAN) * x[c])
                    .sum()
            })
            .collect()
    }

    /// Smallest entry of `H x` and its row.
    pub fn min_slack(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.evaluate(x)
            .into_iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Kronecker product; a row is nonnegativity only when both factors are.
    pub fn kron(&self, other: &InequalityMatrix) -> Result<Self> {
        let ncols = self
            .ncols
            .checked_mul(other.ncols)
            .ok_or_else(|| DrumError::Size("kronecker width".into()))?;
        let nrows = self.nrows().saturating_mul(other.nrows());
        if nrows.saturating_mul(ncols) > super::type_matrix::MAX_ENTRIES * 10 {
            return Err(DrumError::Size(format!(
                "{} x {} inequality matrix",
                nrows, ncols
            )));
        }
        let mut h = Self::new(ncols);
        for (ra, &ka) in self.rows.iter().zip(&self.kinds) {
            for (rb, &kb) in other.rows.iter().zip(&other.kinds) {
                let mut row = Vec::with_capacity(ra.len() * rb.len());
                for &(ca, va) in ra {
                    for &(cb, vb) in rb {
                        row.push((ca * other.ncols + cb, va * vb));
                    }
                }
                let kind = match (ka, kb) {
                    (RowKind::Nonnegativity, RowKind::Nonnegativity) => RowKind::Nonnegativity,
                    _ => RowKind::Facet,
                };
                h.rows.push(row);
                h.kinds.push(kind);
            }
        }
        Ok(h)
    }

    pub fn kron_all(factors: &[&InequalityMatrix]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| DrumError::Parameter("no factors".into()))?;
        rest.iter().try_fold((*first).clone(), |acc, f| acc.kron(f))
    }

    /// Rows over the full Kronecker space whose support lies in the observed
    /// rows, re-indexed to the path space.
    pub fn restrict(&self, space: &PathSpace) -> Result<Self> {
        let full: usize = space
            .menu_sizes()
            .iter()
            .map(|s| s.iter().sum::<usize>())
            .product();
        if full != self.ncols {
            return Err(DrumError::Parameter(format!(
                "matrix has {} columns, path space spans {}",
                self.ncols, full
            )));
        }
        let mut pos = vec![usize::MAX; full];
        for r in 0..space.len() {
            pos[space.full_row_index(r)] = r;
        }
        let mut h = Self::new(space.len());
        for (row, &k) in self.rows.iter().zip(&self.kinds) {
            if row.iter().all(|&(c, _)| pos[c] != usize::MAX) {
                h.rows.push(row.iter().map(|&(c, v)| (pos[c], v)).collect());
                h.kinds.push(k);
            }
        }
        Ok(h)
    }

    /// Remove repeated rows (keeping the first) and all-zero rows.
    pub fn dedup(&mut self) {
        let mut seen = std::collections::HashSet::new();
        let mut rows = Vec::new();
        let mut kinds = Vec::new();
        for (row, k) in self.rows.drain(..).zip(self.kinds.drain(..)) {
            if !row.is_empty() && seen.insert(row.clone()) {
                rows.push(row);
                kinds.push(k);
            }
        }
        self.rows = rows;
        self.kinds = kinds;
    }
}

/// Known inequality representations of static models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Catalog {
    /// Binary menus over `n <= 5` alternatives: triangle conditions.
    Binary(usize),
    /// Two goods, two intersecting budgets.
    Simple,
    /// Three goods, three budgets with all pairwise intersections. These rows
    /// hold on every type column but do not cut out the cone exactly: the
    /// point with patches 3, 2, 2 chosen on budgets 1, 2, 3 satisfies them.
    /// `convert_v_to_h` gives the exact system.
    Demand3x3,
}

/// Inequality representation of a catalogued static model, in the static
/// row order of the matching universe, nonnegativity rows last.
pub fn catalog_h(which: Catalog) -> Result<InequalityMatrix> {
    match which {
        Catalog::Binary(n) => triangle_h(n),
        Catalog::Simple => {
            let mut h = InequalityMatrix::from_int_rows(4, &[vec![1, 0, -1, 0]], RowKind::Facet);
            for c in [0, 1, 2] {
                h.push(vec![(c, qi(1))], RowKind::Nonnegativity);
            }
            Ok(h)
        }
        Catalog::Demand3x3 => {
            let rows = vec![
                vec![0, 0, 0, -1, 0, 0, 0, -1, 1, 1, 1, 0],
                vec![0, 0, 0, -1, 1, 0, 0, 0, 1, 0, 0, 0],
                vec![1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1],
                vec![1, 0, 0, 0, 0, 0, 0, -1, 1, 0, 0, 0],
                vec![0, -1, 0, -1, 1, 0, 1, 0, 0, 0, 0, 0],
                vec![0, 0, 0, 0, 1, 1, 0, 0, 0, -1, 0, -1],
                vec![0, 0, -1, -1, 0, 0, 0, 0, 1, 1, 0, 0],
            ];
            let mut h = InequalityMatrix::from_int_rows(12, &rows, RowKind::Facet);
            h.push_identity();
            Ok(h)
        }
    }
}

fn triangle_h(n: usize) -> Result<InequalityMatrix> {
    if !(2..=5).contains(&n) {
        return Err(DrumError::Parameter(format!(
            "triangle conditions characterize binary menus only for 2 to 5 alternatives, got {}",
            n
        )));
    }
    // menus are the pairs (a, b), a < b, in lexicographic order; items [a, b]
    let mut menu = vec![vec![0; n]; n];
    let mut k = 0;
    for a in 0..n {
        for b in a + 1..n {
            menu[a][b] = k;
            menu[b][a] = k;
            k += 1;
        }
    }
    let row = |a: usize, b: usize| 2 * menu[a][b] + usize::from(a > b);
    let mut h = InequalityMatrix::new(2 * k);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a == b || b == c || a == c {
                    continue;
                }
                h.push(
                    vec![(row(a, b), qi(1)), (row(b, c), qi(1)), (row(a, c), qi(-1))],
                    RowKind::Facet,
                );
            }
        }
    }
    h.push_identity();
    Ok(h)
}
