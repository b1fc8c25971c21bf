use crate::error::{DrumError, Result};
use crate::model::StochasticChoiceFunction;
use crate::repr::TypeMatrix;

/// Best sequence of rows found: a positive `gap` disproves the model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdsrpWitness {
    /// `sum_k rho(row_k) - max_type sum_k a(type, row_k)`.
    pub gap: f64,
    pub sequence: Vec<usize>,
}

struct Scorer<'a> {
    probs: &'a [f64],
    /// Types choosing each row.
    members: Vec<Vec<usize>>,
    ncols: usize,
}

impl Scorer<'_> {
    fn gap(&self, seq: &[usize]) -> f64 {
        let mut hits = vec![0u32; self.ncols];
        let mut mass = 0.0;
        for &r in seq {
            mass += self.probs[r];
            for &c in &self.members[r] {
                hits[c] += 1;
            }
        }
        mass - f64::from(hits.into_iter().max().unwrap_or(0))
    }
}

/// Greedy growth followed by single-position swaps, from every starting row.
/// Only sequences up to `max_len` are searched, so a nonpositive gap proves
/// nothing.
pub fn adsrp_audit(
    rho: &StochasticChoiceFunction,
    a: &TypeMatrix,
    max_len: usize,
) -> Result<AdsrpWitness> {
    let n = rho.probs().len();
    if a.nrows() != n {
        return Err(DrumError::Schema(
            "type matrix rows do not match the choice function".into(),
        ));
    }
    if max_len == 0 {
        return Err(DrumError::Parameter(
            "sequence length must be positive".into(),
        ));
    }
    let mut members = vec![Vec::new(); n];
    for (c, col) in a.columns().iter().enumerate() {
        for &r in col {
            members[r].push(c);
        }
    }
    let scorer = Scorer {
        probs: rho.probs(),
        members,
        ncols: a.ncols(),
    };
    let mut best = AdsrpWitness {
        gap: f64::NEG_INFINITY,
        sequence: Vec::new(),
    };
    for start in 0..n {
        let mut seq = vec![start];
        let mut local = (scorer.gap(&seq), seq.clone());
        while seq.len() < max_len {
            let (r, g) = (0..n)
                .map(|r| {
                    seq.push(r);
                    let g = scorer.gap(&seq);
                    seq.pop();
                    (r, g)
                })
                .max_by(|x, y| x.1.total_cmp(&y.1))
                .expect("rows exist");
            seq.push(r);
            if g > local.0 + 1e-15 {
                local = (g, seq.clone());
            }
        }
        let (mut gap, mut seq) = local;
        let mut improved = true;
        while improved {
            improved = false;
            for pos in 0..seq.len() {
                for r in 0..n {
                    let old = seq[pos];
                    if r == old {
                        continue;
                    }
                    seq[pos] = r;
                    let g = scorer.gap(&seq);
                    if g > gap + 1e-12 {
                        gap = g;
                        improved = true;
                    } else {
                        seq[pos] = old;
                    }
                }
            }
        }
        if gap > best.gap {
            best = AdsrpWitness { gap, sequence: seq };
        }
    }
    Ok(best)
}
