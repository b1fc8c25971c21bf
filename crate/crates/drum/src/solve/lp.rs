use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{DrumError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

/// Sparse linear program, solved by `minilp`.
#[derive(Debug, Clone)]
pub struct Lp {
    sense: Sense,
    vars: Vec<(f64, f64, f64)>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

impl Lp {
    pub fn new(sense: Sense) -> Self {
        Lp {
            sense,
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, objective: f64, lo: f64, hi: f64) -> usize {
        self.vars.push((objective, lo, hi));
        self.vars.len() - 1
    }

    pub fn add_vars(&mut self, n: usize, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.vars.len();
        for _ in 0..n {
            self.add_var(0.0, lo, hi);
        }
        start..self.vars.len()
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.vars[var].0 = coef;
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        let terms: Vec<_> = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        self.rows.push((terms, cmp, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let dir = match self.sense {
            Sense::Minimize => OptimizationDirection::Minimize,
            Sense::Maximize => OptimizationDirection::Maximize,
        };
        let mut problem = Problem::new(dir);
        let handles: Vec<_> = self
            .vars
            .iter()
            .map(|&(c, lo, hi)| problem.add_var(c, (lo, hi)))
            .collect();
        for (terms, cmp, rhs) in &self.rows {
            if terms.is_empty() {
                let ok = match cmp {
                    Cmp::Le => 0.0 <= *rhs + 1e-12,
                    Cmp::Ge => 0.0 >= *rhs - 1e-12,
                    Cmp::Eq => rhs.abs() <= 1e-12,
                };
                if !ok {
                    return Ok(LpOutcome::Infeasible);
                }
                continue;
            }
            let expr: Vec<_> = terms.iter().map(|&(v, c)| (handles[v], c)).collect();
            let op = match cmp {
                Cmp::Le => ComparisonOp::Le,
                Cmp::Ge => ComparisonOp::Ge,
                Cmp::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr.as_slice(), op, *rhs);
        }
        match problem.solve() {
            Ok(sol) => Ok(LpOutcome::Optimal {
                x: handles.iter().map(|&h| sol[h]).collect(),
                objective: sol.objective(),
            }),
            Err(minilp::Error::Infeasible) => Ok(LpOutcome::Infeasible),
            Err(minilp::Error::Unbounded) => Ok(LpOutcome::Unbounded),
        }
    }

    /// Solve and insist on an optimum.
    pub fn optimum(&self) -> Result<(Vec<f64>, f64)> {
        match self.solve()? {
            LpOutcome::Optimal { x, objective } => Ok((x, objective)),
            LpOutcome::Infeasible => Err(DrumError::Solver("linear program infeasible".into())),
            LpOutcome::Unbounded => Err(DrumError::Solver("linear program unbounded".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        let mut lp = Lp::new(Sense::Maximize);
        let x = lp.add_var(1.0, 0.0, f64::INFINITY);
        let y = lp.add_var(1.0, 0.0, f64::INFINITY);
        lp.add_row(vec![(x, 1.0), (y, 2.0)], Cmp::Le, 4.0);
        lp.add_row(vec![(x, 3.0), (y, 1.0)], Cmp::Le, 6.0);
        let (sol, obj) = lp.optimum().unwrap();
        assert!((obj - 2.8).abs() < 1e-9);
        assert!((sol[x] - 1.6).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = Lp::new(Sense::Minimize);
        let x = lp.add_var(0.0, 0.0, 1.0);
        lp.add_row(vec![(x, 1.0)], Cmp::Ge, 2.0);
        assert!(!lp.solve().unwrap().is_feasible());
    }
}
