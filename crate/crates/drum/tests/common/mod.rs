//! Independent oracles for integration tests: an exact rational simplex and
//! small helpers. Nothing here calls the library's solvers.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

pub type R = BigRational;

pub fn r(n: i64) -> R {
    R::from_integer(BigInt::from(n))
}

pub fn rf(x: f64) -> R {
    R::from_float(x).expect("finite")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Exact {
    Infeasible,
    Unbounded,
    Optimal(R, Vec<R>),
}

/// `min c.x` subject to `a x = b`, `x >= 0`, by the two-phase simplex
/// with Bland's rule.
pub fn simplex_min(c: &[R], a: &[Vec<R>], b: &[R]) -> Exact {
    let m = a.len();
    let n = c.len();
    // tableau rows: [x (n) | artificials (m) | rhs]
    let width = n + m + 1;
    let mut t: Vec<Vec<R>> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row = vec![R::zero(); width];
        for j in 0..n {
            row[j] = if flip {
                -a[i][j].clone()
            } else {
                a[i][j].clone()
            };
        }
        row[n + i] = R::one();
        row[width - 1] = if flip { -b[i].clone() } else { b[i].clone() };
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let phase1: Vec<R> = (0..n + m)
        .map(|j| if j >= n { R::one() } else { R::zero() })
        .collect();
    if run(&mut t, &mut basis, &phase1, n + m).is_err() {
        unreachable!("phase one is bounded");
    }
    let infeas: R = basis
        .iter()
        .zip(&t)
        .filter(|(&j, _)| j >= n)
        .map(|(_, row)| row[width - 1].clone())
        .sum();
    if infeas.is_positive() {
        return Exact::Infeasible;
    }
    // drive artificials out of the basis where possible
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !t[i][j].is_zero()) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(R::zero(), m));
    // artificials may not re-enter
    match run(&mut t, &mut basis, &cost, n) {
        Err(()) => Exact::Unbounded,
        Ok(()) => {
            let mut x = vec![R::zero(); n];
            for (i, &j) in basis.iter().enumerate() {
                if j < n {
                    x[j] = t[i][width - 1].clone();
                }
            }
            let v = x.iter().zip(c).map(|(a, b)| a * b).sum();
            Exact::Optimal(v, x)
        }
    }
}

fn pivot(t: &mut [Vec<R>], basis: &mut [usize], i: usize, j: usize) {
    let p = t[i][j].clone();
    for v in t[i].iter_mut() {
        *v = &*v / &p;
    }
    let prow = t[i].clone();
    for (k, row) in t.iter_mut().enumerate() {
        if k != i && !row[j].is_zero() {
            let f = row[j].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= &f * pv;
            }
        }
    }
    basis[i] = j;
}

/// Minimize `cost` over the current tableau; columns `>= allowed` never enter.
fn run(t: &mut [Vec<R>], basis: &mut [usize], cost: &[R], allowed: usize) -> Result<(), ()> {
    let width = t.first().map_or(0, |r| r.len());
    loop {
        // reduced costs
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let mut d = cost[j].clone();
            for (i, &bj) in basis.iter().enumerate() {
                d -= &cost[bj] * &t[i][j];
            }
            d.is_negative()
        });
        let Some(j) = entering else { return Ok(()) };
        let mut best: Option<(R, usize)> = None;
        for i in 0..t.len() {
            if t[i][j].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][j];
                let better = match &best {
                    None => true,
                    Some((b, bi)) => ratio < *b || (ratio == *b && basis[i] < basis[*bi]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let Some((_, i)) = best else { return Err(()) };
        pivot(t, basis, i, j);
    }
}

/// Is `rho` a nonnegative combination of the 0/1 columns (given by their
/// support rows)?
pub fn in_cone_exact(nrows: usize, columns: &[Vec<usize>], rho: &[R]) -> bool {
    let mut a = vec![vec![R::zero(); columns.len()]; nrows];
    for (c, col) in columns.iter().enumerate() {
        for &row in col {
            a[row][c] = R::one();
        }
    }
    !matches!(
        simplex_min(&vec![R::zero(); columns.len()], &a, rho),
        Exact::Infeasible
    )
}

/// `A nu` in exact arithmetic for 0/1 columns.
pub fn apply_exact(nrows: usize, columns: &[Vec<usize>], nu: &[R]) -> Vec<R> {
    let mut out = vec![R::zero(); nrows];
    for (col, w) in columns.iter().zip(nu) {
        for &row in col {
            out[row] += w;
        }
    }
    out
}

/// A random point of the simplex with denominators bounded by `scale * n`.
pub fn rational_simplex_point<G: Rng>(rng: &mut G, n: usize, scale: i64) -> Vec<R> {
    let k: Vec<i64> = (0..n).map(|_| rng.random_range(1..=scale)).collect();
    let total: i64 = k.iter().sum();
    k.into_iter()
        .map(|x| R::new(BigInt::from(x), BigInt::from(total)))
        .collect()
}

pub fn to_f64(x: &R) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().expect("representable")
}

/// Uniform draw from the probability simplex of dimension `n`.
pub fn simplex_point<G: Rng>(rng: &mut G, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
