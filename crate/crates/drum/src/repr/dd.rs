use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{DrumError, Result};
use crate::rational::{QMatrix, Q};
use crate::repr::ineq::{InequalityMatrix, RowKind};

/// Most generators accepted by the double description conversion.
pub const MAX_GENERATORS: usize = 200;

fn big(q: &Q) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

/// Row-reduce a copy of `rows`; returns the indices of a maximal set of
/// linearly independent rows, chosen greedily in order.
pub(crate) fn independent_rows(rows: &[Vec<BigRational>]) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<BigRational>)> = Vec::new();
    let mut picked = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut v = r.clone();
        for (p, b) in &basis {
            if !v[*p].is_zero() {
                let f = &v[*p] / &b[*p];
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= &f * y;
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            basis.push((p, v));
            picked.push(i);
        }
    }
    picked
}

/// Basis of `{x : M x = 0}` for a dense rational `M` with `ncols` columns.
pub(crate) fn null_space(m: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut a: Vec<Vec<BigRational>> = m.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for x in a[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..a.len() {
            if r != row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[row].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

/// Scale a rational vector to the primitive integer vector in its direction.
fn primitive(v: &[BigRational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * BigRational::from_integer(l.clone())).to_integer())
        .collect();
    normalize(ints)
}

fn normalize(v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        v
    } else {
        v.into_iter().map(|x| x / &g).collect()
    }
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Facets of the cone generated by the columns of `generators`.
///
/// Facets are computed inside the linear span of the generators and written
/// on a maximal independent subset of rows; with `within_span == false` the
/// equalities cutting out the span are appended as opposite row pairs.
pub fn convert_v_to_h(generators: &QMatrix, within_span: bool) -> Result<InequalityMatrix> {
    let d = generators.nrows();
    let n = generators.ncols();
    if n > MAX_GENERATORS {
        return Err(DrumError::Size(format!(
            "{} generators exceed the conversion limit of {}",
            n, MAX_GENERATORS
        )));
    }
    let rows: Vec<Vec<BigRational>> = (0..d)
        .map(|r| generators.row(r).iter().map(big).collect())
        .collect();
    let basis = independent_rows(&rows);
    let r = basis.len();
    let mut out = InequalityMatrix::new(d);
    if r > 0 {
        // each generator in the coordinates of the basis rows, as a dual constraint
        let constraints: Vec<Vec<BigInt>> = (0..n)
            .map(|c| {
                primitive(
                    &basis
                        .iter()
                        .map(|&b| rows[b][c].clone())
                        .collect::<Vec<_>>(),
                )
            })
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        let mut facets = extreme_rays(&constraints, r)?;
        facets.sort();
        for f in facets {
            let mut dense = vec![Q::zero(); d];
            for (k, &b) in basis.iter().enumerate() {
                dense[b] = to_q(&f[k])?;
            }
            out.push_dense(&dense, RowKind::Facet);
        }
    }
    if !within_span {
        let transposed: Vec<Vec<BigRational>> = (0..n)
            .map(|c| rows.iter().map(|row| row[c].clone()).collect())
            .collect();
        for e in null_space(&transposed, d) {
            let e = primitive(&e);
            let pos: Vec<Q> = e.iter().map(to_q).collect::<Result<_>>()?;
            let neg: Vec<Q> = pos.iter().map(|v| -*v).collect();
            out.push_dense(&pos, RowKind::Equality);
            out.push_dense(&neg, RowKind::Equality);
        }
    }
    Ok(out)
}

fn to_q(x: &BigInt) -> Result<Q> {
    i64::try_from(x)
        .map(Q::from_integer)
        .map_err(|_| DrumError::Size("facet coefficient exceeds 64 bits".into()))
}

/// Extreme rays of the pointed cone `{h : m h >= 0}` in dimension `dim`
/// (the rows of `m` span the space), by double description.
fn extreme_rays(m: &[Vec<BigInt>], dim: usize) -> Result<Vec<Vec<BigInt>>> {
    let as_q: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    let start = independent_rows(&as_q);
    if start.len() != dim {
        return Err(DrumError::Solver(
            "generators do not span their coordinate space".into(),
        ));
    }
    let inv = invert(&start.iter().map(|&i| as_q[i].clone()).collect::<Vec<_>>());
    let words = m.len().div_ceil(64);
    let mut rays: Vec<(Vec<BigInt>, Vec<u64>)> = (0..dim)
        .map(|k| {
            let col: Vec<BigRational> = (0..dim).map(|r| inv[r][k].clone()).collect();
            let mut zero = vec![0u64; words];
            for (kk, &i) in start.iter().enumerate() {
                if kk != k {
                    zero[i / 64] |= 1 << (i % 64);
                }
            }
            (primitive(&col), zero)
        })
        .collect();
    for (i, row) in m.iter().enumerate() {
        if start.contains(&i) {
            continue;
        }
        let vals: Vec<BigInt> = rays.iter().map(|(v, _)| dot(row, v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].is_negative()).collect();
        if neg.is_empty() {
            for (k, v) in vals.iter().enumerate() {
                if v.is_zero() {
                    rays[k].1[i / 64] |= 1 << (i % 64);
                }
            }
            continue;
        }
        let mut created = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common: Vec<u64> = rays[p]
                    .1
                    .iter()
                    .zip(&rays[q].1)
                    .map(|(a, b)| a & b)
                    .collect();
                let size: u32 = common.iter().map(|w| w.count_ones()).sum();
                if (size as usize) + 2 < dim {
                    continue;
                }
                let blocked = rays.iter().enumerate().any(|(k, (_, z))| {
                    k != p && k != q && common.iter().zip(z).all(|(c, w)| c & w == *c)
                });
                if blocked {
                    continue;
                }
                let v: Vec<BigInt> = rays[q]
                    .0
                    .iter()
                    .zip(&rays[p].0)
                    .map(|(a, b)| &vals[p] * a - &vals[q] * b)
                    .collect();
                let mut zero = common;
                zero[i / 64] |= 1 << (i % 64);
                created.push((normalize(v), zero));
            }
        }
        let mut next: Vec<(Vec<BigInt>, Vec<u64>)> = Vec::new();
        for (k, ray) in rays.into_iter().enumerate() {
            if vals[k].is_positive() {
                next.push(ray);
            } else if vals[k].is_zero() {
                let (v, mut z) = ray;
                z[i / 64] |= 1 << (i % 64);
                next.push((v, z));
            }
        }
        next.extend(created);
        rays = next;
    }
    let mut out: Vec<Vec<BigInt>> = rays.into_iter().map(|(v, _)| v).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

fn invert(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .expect("nonsingular");
        m.swap(col, p);
        let inv = m[col][col].recip();
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pr = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(&pr) {
                    *x -= &f * y;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    #[test]
    fn simplicial_cone_facets() {
        let a =
            QMatrix::from_int_rows(&[vec![1, 1, 0], vec![0, 0, 1], vec![1, 0, 0], vec![0, 1, 1]]);
        let h = convert_v_to_h(&a, true).unwrap();
        assert_eq!(h.nrows(), 3);
        for r in 0..h.nrows() {
            let vals: Vec<Q> = (0..3)
                .map(|c| {
                    h.row(r)
                        .iter()
                        .map(|&(i, v)| v * a[(i, c)])
                        .fold(Q::zero(), |x, y| x + y)
                })
                .collect();
            assert!(vals.iter().all(|v| *v >= qi(0)));
            assert_eq!(vals.iter().filter(|v| v.is_zero()).count(), 2);
        }
    }

    #[test]
    fn square_pyramid_has_four_facets() {
        let a = QMatrix::from_int_rows(&[vec![1, -1, 1, -1], vec![1, 1, -1, -1], vec![1, 1, 1, 1]]);
        let h = convert_v_to_h(&a, false).unwrap();
        assert_eq!(h.nrows(), 4);
    }

    #[test]
    fn span_equalities_appended() {
        let a = QMatrix::from_int_rows(&[vec![1, 0], vec![0, 1], vec![1, 1]]);
        let h = convert_v_to_h(&a, false).unwrap();
        assert_eq!(
            h.kinds()
                .iter()
                .filter(|&&k| k == RowKind::Equality)
                .count(),
            2
        );
    }
}
