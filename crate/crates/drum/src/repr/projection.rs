use num_traits::Zero;

use crate::error::{DrumError, Result};
use crate::rational::{qi, QMatrix, Q};
use crate::repr::ineq::InequalityMatrix;

/// Average of the rows of an inequality matrix.
pub fn phi_star(h: &InequalityMatrix) -> Vec<Q> {
    let mut v = vec![Q::zero(); h.ncols()];
    for row in h.rows() {
        for &(c, x) in row {
            v[c] += x;
        }
    }
    let n = qi(h.nrows() as i64);
    v.into_iter().map(|x| x / n).collect()
}

/// `(1/k) sum_j phi'^{(x)(j-1)} (x) I (x) phi'^{(x)(k-j)}`.
pub fn gamma_k(phi: &[Q], k: usize) -> Result<QMatrix> {
    if k == 0 {
        return Err(DrumError::Parameter(
            "hierarchy level must be at least 1".into(),
        ));
    }
    let d = phi.len();
    let row = QMatrix::from_rows(&[phi.to_vec()]);
    let id = QMatrix::identity(d);
    let mut total: Option<QMatrix> = None;
    for j in 0..k {
        let mut term = QMatrix::identity(1);
        for p in 0..k {
            term = term.kron(if p == j { &id } else { &row });
        }
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term),
        });
    }
    Ok(total.expect("k >= 1").scale(Q::new(1, k as i64)))
}

/// The map from the virtual panel with `levels[t]` copies of each later
/// period back to the observed one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOperator {
    pub phis: Vec<Vec<Q>>,
    pub levels: Vec<usize>,
    pub gamma: QMatrix,
}

pub fn projection_ops(
    h_stars: &[InequalityMatrix],
    levels: &[usize],
) -> Result<ProjectionOperator> {
    if h_stars.len() != levels.len() || levels.is_empty() {
        return Err(DrumError::Parameter(
            "one level per period is required".into(),
        ));
    }
    if levels[0] != 1 {
        return Err(DrumError::Parameter(
            "the first period is never replicated".into(),
        ));
    }
    let cols: f64 = h_stars
        .iter()
        .zip(levels)
        .map(|(h, &k)| (h.ncols() as f64).powi(k as i32))
        .product();
    let rows: usize = h_stars.iter().map(InequalityMatrix::ncols).product();
    if cols * rows as f64 > 5e7 {
        return Err(DrumError::Size(format!(
            "projection operator of {} x {:.0}",
            rows, cols
        )));
    }
    let phis: Vec<Vec<Q>> = h_stars.iter().map(phi_star).collect();
    let mut gamma = QMatrix::identity(h_stars[0].ncols());
    for t in 1..levels.len() {
        gamma = gamma.kron(&gamma_k(&phis[t], levels[t])?);
    }
    Ok(ProjectionOperator {
        phis,
        levels: levels.to_vec(),
        gamma,
    })
}
