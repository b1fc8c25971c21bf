use nalgebra::{DMatrix, DVector};

use crate::error::{DrumError, Result};

/// Lawson–Hanson active-set solver for `min ||A x - b||^2, x >= lower`.
///
/// The Gram matrix is formed once so repeated solves against the same `A`
/// (bootstrap draws) only pay for `A^T b` and the active-set iterations.
#[derive(Debug, Clone)]
pub struct Nnls {
    a: DMatrix<f64>,
    gram: DMatrix<f64>,
    col_sums: DVector<f64>,
    max_iter: usize,
}

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    /// Squared residual norm `||A x - b||^2`.
    pub objective: f64,
    pub iterations: usize,
    /// Largest violation of the KKT conditions at the returned point.
    pub kkt_residual: f64,
    /// Indices strictly above the lower bound.
    pub passive: Vec<usize>,
}

impl Nnls {
    pub fn new(a: DMatrix<f64>) -> Self {
        let gram = a.transpose() * &a;
        let col_sums = a.row_sum().transpose();
        let max_iter = 30 * (a.ncols() + 10);
        Nnls {
            a,
            gram,
            col_sums,
            max_iter,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn solve(&self, b: &[f64]) -> Result<NnlsSolution> {
        self.solve_bounded(b, 0.0, None)
    }

    /// Solve with every coordinate bounded below by `lower`, optionally warm
    /// started from a previous passive set.
    pub fn solve_bounded(
        &self,
        b: &[f64],
        lower: f64,
        warm: Option<&[usize]>,
    ) -> Result<NnlsSolution> {
        let m = self.a.nrows();
        let n = self.a.ncols();
        if b.len() != m {
            return Err(DrumError::Parameter(format!(
                "right-hand side has length {}, matrix has {} rows",
                b.len(),
                m
            )));
        }
        let bv = DVector::from_column_slice(b);
        // shift x = lower + y, y >= 0
        let mut c = self.a.transpose() * &bv;
        if lower != 0.0 {
            c -= &self.gram * DVector::from_element(n, lower);
        }
        let scale = self
            .gram
            .iter()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()))
            .max(c.amax());
        let tol = 1e-13 * scale;

        let mut x = DVector::<f64>::zeros(n);
        let mut passive = vec![false; n];
        let mut blocked = vec![false; n];
        let mut iterations = 0usize;

        if let Some(start) = warm {
            let mut set: Vec<usize> = start.iter().copied().filter(|&j| j < n).collect();
            set.sort_unstable();
            set.dedup();
            while !set.is_empty() {
                match self.sub_solve(&set, &c) {
                    Some(z) if z.iter().all(|&v| v > 0.0) => {
                        for (k, &j) in set.iter().enumerate() {
                            x[j] = z[k];
                            passive[j] = true;
                        }
                        break;
                    }
                    Some(z) => {
                        set = set
                            .iter()
                            .zip(z.iter())
                            .filter(|(_, &v)| v > 0.0)
                            .map(|(&j, _)| j)
                            .collect();
                    }
                    None => set.clear(),
                }
                iterations += 1;
            }
        }

        loop {
            let w = &c - &self.gram * &x;
            let mut best = None;
            let mut best_val = tol;
            for j in 0..n {
                if !passive[j] && !blocked[j] && w[j] > best_val {
                    best_val = w[j];
                    best = Some(j);
                }
            }
            let Some(enter) = best else { break };
            iterations += 1;
            if iterations > self.max_iter {
                let kkt = self.kkt(&x, &c, &passive);
                return Err(DrumError::Solver(format!(
                    "NNLS did not converge in {} iterations (KKT residual {:.3e})",
                    self.max_iter, kkt
                )));
            }
            passive[enter] = true;
            loop {
                let set: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
                let Some(z) = self.sub_solve(&set, &c) else {
                    passive[enter] = false;
                    blocked[enter] = true;
                    break;
                };
                if z.iter().all(|&v| v > 0.0) {
                    for (k, &j) in set.iter().enumerate() {
                        x[j] = z[k];
                    }
                    blocked.iter_mut().for_each(|b| *b = false);
                    break;
                }
                let mut alpha = f64::INFINITY;
                let mut hit = set[0];
                for (k, &j) in set.iter().enumerate() {
                    if z[k] <= 0.0 {
                        let step = x[j] / (x[j] - z[k]);
                        if step < alpha {
                            alpha = step;
                            hit = j;
                        }
                    }
                }
                for (k, &j) in set.iter().enumerate() {
                    x[j] += alpha * (z[k] - x[j]);
                    if j == hit || x[j] <= 1e-15 {
                        x[j] = 0.0;
                        passive[j] = false;
                    }
                }
                iterations += 1;
                if iterations > self.max_iter {
                    return Err(DrumError::Solver(format!(
                        "NNLS inner loop did not converge in {} iterations",
                        self.max_iter
                    )));
                }
            }
        }

        let kkt_residual = self.kkt(&x, &c, &passive);
        let mut sol = x;
        if lower != 0.0 {
            sol.add_scalar_mut(lower);
        }
        let resid = &self.a * &sol - &bv;
        Ok(NnlsSolution {
            objective: resid.norm_squared(),
            passive: (0..n).filter(|&j| passive[j]).collect(),
            x: sol.iter().copied().collect(),
            iterations,
            kkt_residual,
        })
    }

    /// Sum over rows of each column, cached for callers that renormalise.
    pub fn column_sums(&self) -> &DVector<f64> {
        &self.col_sums
    }

    fn sub_solve(&self, set: &[usize], c: &DVector<f64>) -> Option<DVector<f64>> {
        let k = set.len();
        if k == 0 {
            return Some(DVector::zeros(0));
        }
        let g = DMatrix::from_fn(k, k, |r, s| self.gram[(set[r], set[s])]);
        let rhs = DVector::from_fn(k, |r, _| c[set[r]]);
        let chol = g.cholesky()?;
        let z = chol.solve(&rhs);
        // reject numerically dependent column sets
        let diag_min = (0..k)
            .map(|i| chol.l_dirty()[(i, i)])
            .fold(f64::INFINITY, f64::min);
        let diag_max = (0..k).map(|i| chol.l_dirty()[(i, i)]).fold(0.0, f64::max);
        if diag_min <= 1e-9 * diag_max.max(1e-300) {
            return None;
        }
        Some(z)
    }

    fn kkt(&self, x: &DVector<f64>, c: &DVector<f64>, passive: &[bool]) -> f64 {
        let w = c - &self.gram * x;
        let mut worst = 0.0_f64;
        for j in 0..x.len() {
            if passive[j] {
                worst = worst.max(w[j].abs());
            } else {
                worst = worst.max(w[j].max(0.0));
            }
        }
        worst
    }
}
