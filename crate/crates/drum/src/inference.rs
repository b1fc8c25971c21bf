//! Cone-projection test statistic with a tightened, recentred bootstrap.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{DrumError, Result};
use crate::model::{ChoiceUniverse, StochasticChoiceFunction};
use crate::repr::{DrumModel, LotteryTable, TypeMatrix};
use crate::solve::Nnls;

/// Smallest cell variance used by inverse-variance weighting.
pub const VAR_FLOOR: f64 = 1e-6;

/// Weighting of the quadratic form in the statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Weighting {
    Identity,
    /// Inverse of the estimated cell variances (floored).
    InverseVariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub bootstrap_reps: usize,
    /// Tightening parameter; `None` uses `sqrt(log n / n)` at the smallest
    /// menu-path sample size `n`.
    pub tau: Option<f64>,
    pub seed: u64,
    pub weighting: Weighting,
    /// Worker threads for the bootstrap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            bootstrap_reps: 199,
            tau: None,
            seed: 0,
            weighting: Weighting::Identity,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub bootstrap_reps: usize,
    pub tau: f64,
    /// Smallest menu-path sample size, the scaling of the statistic.
    pub sample_size: u64,
    pub bootstrap: Vec<f64>,
    /// Unrestricted projection weights.
    pub nu: Vec<f64>,
    /// Tightened fitted choice vector used to recentre the bootstrap.
    pub eta_tau: Vec<f64>,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// ChaCha stream `stream` of `seed`: independent, reproducible per replication.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw by sequential conditional binomials.
pub fn multinomial<R: rand::Rng>(rng: &mut R, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            out[k] = left;
            break;
        }
        let share = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, share)
            .expect("valid binomial")
            .sample(rng);
        out[k] = draw;
        left -= draw;
        mass -= p;
    }
    out
}

struct Projector {
    solver: Nnls,
    row_scale: Vec<f64>,
}

impl Projector {
    fn new(a: &TypeMatrix, row_scale: Vec<f64>) -> Self {
        let mut dense = a.to_dense();
        for (r, s) in row_scale.iter().enumerate() {
            dense.row_mut(r).scale_mut(*s);
        }
        Projector {
            solver: Nnls::new(dense),
            row_scale,
        }
    }

    fn scaled(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.row_scale).map(|(x, s)| x * s).collect()
    }

    fn project(
        &self,
        v: &[f64],
        lower: f64,
        warm: Option<&[usize]>,
    ) -> Result<crate::solve::NnlsSolution> {
        self.solver.solve_bounded(&self.scaled(v), lower, warm)
    }
}

/// Test whether the population choice function lies in the cone spanned by
/// the columns of `a` (restricted to the observed rows of `rho`).
pub fn run_test(
    rho: &StochasticChoiceFunction,
    a: &TypeMatrix,
    config: &TestConfig,
) -> Result<TestReport> {
    let space = rho.space().clone();
    if a.nrows() != space.len() {
        return Err(DrumError::Schema(
            "type matrix rows do not match the choice function".into(),
        ));
    }
    let sizes = rho
        .path_sizes()
        .ok_or_else(|| DrumError::Parameter("the test needs sample counts".into()))?;
    let n_min = *sizes.iter().min().expect("paths exist");
    if n_min < 2 {
        return Err(DrumError::Parameter(
            "every menu path needs at least two observations".into(),
        ));
    }
    if config.bootstrap_reps == 0 {
        return Err(DrumError::Parameter(
            "at least one bootstrap replication".into(),
        ));
    }
    let n = n_min as f64;
    let tau = config.tau.unwrap_or_else(|| (n.ln() / n).sqrt());
    if !(0.0..1.0).contains(&tau) {
        return Err(DrumError::Parameter(format!(
            "tightening parameter {} outside [0, 1)",
            tau
        )));
    }
    let probs = rho.probs().to_vec();
    let rows_by_path = space.rows_by_path();
    let row_scale: Vec<f64> = match config.weighting {
        Weighting::Identity => vec![1.0; probs.len()],
        Weighting::InverseVariance => (0..probs.len())
            .map(|r| {
                let m = space.row_path_index(r);
                let var = probs[r] * (1.0 - probs[r]) / sizes[m] as f64;
                1.0 / var.max(VAR_FLOOR).sqrt()
            })
            .collect(),
    };
    let proj = Projector::new(a, row_scale);

    let fit = proj.project(&probs, 0.0, None)?;
    let statistic = n * fit.objective;
    let lower = tau / a.ncols() as f64;
    let tight = proj.project(&probs, lower, Some(&fit.passive))?;
    let mut eta = a.apply(&tight.x);
    for rows in &rows_by_path {
        let s: f64 = rows.iter().map(|&r| eta[r]).sum();
        if s > 0.0 {
            rows.iter().for_each(|&r| eta[r] /= s);
        }
    }

    let draw = |rep: usize| -> Result<f64> {
        let mut rng = stream_rng(config.seed, rep as u64 + 1);
        let mut star = vec![0.0; probs.len()];
        for (m, rows) in rows_by_path.iter().enumerate() {
            let p: Vec<f64> = rows.iter().map(|&r| probs[r]).collect();
            let k = multinomial(&mut rng, sizes[m], &p);
            for (i, &r) in rows.iter().enumerate() {
                star[r] = k[i] as f64 / sizes[m] as f64 - probs[r] + eta[r];
            }
        }
        Ok(n * proj.project(&star, lower, Some(&tight.passive))?.objective)
    };
    let bootstrap = run_reps(config.bootstrap_reps, config.threads, draw)?;
    let exceed = bootstrap.iter().filter(|&&j| j >= statistic).count();
    let p_value = (1 + exceed) as f64 / (config.bootstrap_reps + 1) as f64;
    Ok(TestReport {
        statistic,
        p_value,
        bootstrap_reps: config.bootstrap_reps,
        tau,
        sample_size: n_min,
        bootstrap,
        nu: fit.x,
        eta_tau: eta,
    })
}

#[cfg(feature = "parallel")]
fn run_reps<F>(reps: usize, threads: Option<usize>, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    let work = || {
        (0..reps)
            .into_par_iter()
            .map(&f)
            .collect::<Result<Vec<f64>>>()
    };
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| DrumError::Parameter(format!("thread pool: {}", e)))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_reps<F>(reps: usize, _threads: Option<usize>, f: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> Result<f64>,
{
    (0..reps).map(f).collect()
}

/// Test against the dynamic type matrix of `model`.
pub fn run_test_model(
    rho: &StochasticChoiceFunction,
    model: &DrumModel,
    config: &TestConfig,
) -> Result<TestReport> {
    let a = model.dynamic(rho.space())?;
    run_test(rho, &a, config)
}

/// Test against expected-utility types over the given lotteries.
pub fn run_test_eu(
    rho: &StochasticChoiceFunction,
    universe: &ChoiceUniverse,
    lotteries: &LotteryTable,
    config: &TestConfig,
) -> Result<TestReport> {
    let model = DrumModel::expected_utility(universe.clone(), lotteries)?;
    run_test_model(rho, &model, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = stream_rng(7, 3);
        for _ in 0..50 {
            let n = rng.random_range(1..500);
            let k = multinomial(&mut rng, n, &[0.2, 0.0, 0.5, 0.3]);
            assert_eq!(k.iter().sum::<u64>(), n);
            assert_eq!(k[1], 0);
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a: u64 = stream_rng(1, 2).random();
        let b: u64 = stream_rng(1, 2).random();
        let c: u64 = stream_rng(1, 3).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
