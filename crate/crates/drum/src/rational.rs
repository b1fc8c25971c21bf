//! Small dense matrices over exact rationals.

use std::fmt;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Q = Rational64;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        QMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        let rows: Vec<Vec<Q>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| qi(v)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Q] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<Q>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn kron(&self, other: &QMatrix) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self[(r, c)];
                if v.is_zero() {
                    continue;
                }
                for s in 0..other.rows {
                    for d in 0..other.cols {
                        out[(r * other.rows + s, c * other.cols + d)] = v * other[(s, d)];
                    }
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &QMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let v = self[(r, k)];
                if v.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += v * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Q) -> Self {
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &QMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let rows: Vec<Vec<Q>> = idx.iter().map(|&r| self.row(r).to_vec()).collect();
        let mut m = Self::from_rows(&rows);
        m.cols = self.cols;
        m
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (k, &c) in idx.iter().enumerate() {
                m[(r, k)] = self[(r, c)];
            }
        }
        m
    }

    pub fn mul_vec_f64(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, x)| a.to_f64().unwrap_or(0.0) * x)
                    .sum()
            })
            .collect()
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| {
            self[(r, c)].to_f64().unwrap_or(f64::NAN)
        })
    }

    /// Exact inverse by Gauss-Jordan elimination; `None` if singular.
    pub fn inverse(&self) -> Option<QMatrix> {
        assert_eq!(self.rows, self.cols, "square matrix required");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            for c in 0..n {
                a.data.swap(col * n + c, p * n + c);
                inv.data.swap(col * n + c, p * n + c);
            }
            let f = a[(col, col)].recip();
            for c in 0..n {
                a[(col, c)] *= f;
                inv[(col, c)] *= f;
            }
            for r in 0..n {
                let g = a[(r, col)];
                if r != col && !g.is_zero() {
                    for c in 0..n {
                        let (x, y) = (a[(col, c)], inv[(col, c)]);
                        a[(r, c)] -= g * x;
                        inv[(r, c)] -= g * y;
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|v| v.is_integer())
    }

    pub fn max_abs(&self) -> Q {
        self.data
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Q::zero)
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (r, c): (usize, usize)) -> &Q {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Q {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}
