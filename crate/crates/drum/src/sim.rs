//! Data generating processes and the Monte Carlo experiment runner.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{DrumError, Result};
use crate::geometry::DemandGeometry;
use crate::inference::{run_test, stream_rng, TestConfig, Weighting};
use crate::model::{
    AgentPath, ChoicePath, ChoiceUniverse, MenuPath, PanelDataset, PathSpace,
    StochasticChoiceFunction,
};
use crate::repr::{DrumModel, TypeMatrix};

/// The three fixed binary-menu choice vectors, per period, over the menus
/// `xy, xz, yz` with items in alphabetical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinaryDgp {
    Rho1,
    Rho2,
    Rho3,
}

impl BinaryDgp {
    pub fn marginals(self) -> [f64; 6] {
        match self {
            BinaryDgp::Rho1 => [0.2, 0.8, 0.8, 0.2, 0.2, 0.8],
            BinaryDgp::Rho2 => [0.2, 0.8, 0.5, 0.5, 0.2, 0.8],
            BinaryDgp::Rho3 => [0.25, 0.75, 0.5, 0.5, 0.25, 0.75],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DgpKind {
    /// Cobb-Douglas share `a_1 ~ U[0,1]`, `a_{t+1} = clamp(0.9 a_t + e_t, 0, 1)`,
    /// `e_t ~ N(0, sd^2)`.
    CobbDouglasWalk { sd: f64 },
    /// `a_t = atan(e_t)/pi + 1/2` with standard normal `e_t` whose consecutive
    /// correlation is `correlation`.
    CobbDouglasCopula { correlation: f64 },
    /// Independent binary choices with fixed per-menu probabilities.
    Binary(BinaryDgp),
    /// Weights over the columns of the full dynamic type matrix.
    Mixture { weights: Vec<f64> },
}

/// How many agents face each menu path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    PerPath(usize),
    /// This many agents, each on a uniformly drawn menu path.
    Uniform(usize),
}

#[derive(Debug, Clone)]
pub struct Dgp {
    pub kind: DgpKind,
    model: DrumModel,
    menu_paths: Vec<MenuPath>,
    full_types: Option<TypeMatrix>,
    sampler: Option<WeightedIndex<f64>>,
}

impl Dgp {
    /// Demand DGP on the two-budget, two-good design repeated over `horizon`
    /// periods; every budget path is observed.
    pub fn demand(kind: DgpKind, horizon: usize) -> Result<Self> {
        match kind {
            DgpKind::CobbDouglasWalk { sd } if !(sd >= 0.0 && sd.is_finite()) => {
                return Err(DrumError::Parameter(format!(
                    "noise sd {} must be finite and nonnegative",
                    sd
                )));
            }
            DgpKind::CobbDouglasCopula { correlation } if !(-1.0..=1.0).contains(&correlation) => {
                return Err(DrumError::Parameter(format!(
                    "correlation {} outside [-1, 1]",
                    correlation
                )));
            }
            DgpKind::CobbDouglasWalk { .. } | DgpKind::CobbDouglasCopula { .. } => {}
            _ => return Err(DrumError::Parameter("not a demand DGP".into())),
        }
        if horizon == 0 {
            return Err(DrumError::Parameter("horizon must be positive".into()));
        }
        let model = DrumModel::demand(DemandGeometry::simple(horizon))?;
        let menu_paths = model.universe().all_menu_paths();
        Ok(Dgp {
            kind,
            model,
            menu_paths,
            full_types: None,
            sampler: None,
        })
    }

    /// Binary menus over three alternatives and three periods; each agent sees
    /// every menu once, so the observed menu paths are the six orderings.
    pub fn binary(which: BinaryDgp) -> Result<Self> {
        let universe = ChoiceUniverse::binary_menus(&["x", "y", "z"], 3)?;
        let model = DrumModel::random_utility(universe)?;
        Ok(Dgp {
            kind: DgpKind::Binary(which),
            model,
            menu_paths: permutation_paths(3),
            full_types: None,
            sampler: None,
        })
    }

    /// Mixture of deterministic type profiles of `model`.
    pub fn mixture(model: DrumModel, weights: Vec<f64>, menu_paths: Vec<MenuPath>) -> Result<Self> {
        let space = model.full_space()?;
        let a = model.dynamic(&space)?;
        if weights.len() != a.ncols() {
            return Err(DrumError::Parameter(format!(
                "{} weights for {} type profiles",
                weights.len(),
                a.ncols()
            )));
        }
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| DrumError::Parameter(format!("mixture weights: {}", e)))?;
        PathSpace::new(model.universe().menu_sizes(), menu_paths.clone())?;
        Ok(Dgp {
            kind: DgpKind::Mixture { weights },
            model,
            menu_paths,
            full_types: Some(a),
            sampler: Some(sampler),
        })
    }

    pub fn model(&self) -> &DrumModel {
        &self.model
    }

    pub fn universe(&self) -> &ChoiceUniverse {
        self.model.universe()
    }

    pub fn menu_paths(&self) -> &[MenuPath] {
        &self.menu_paths
    }

    /// Agents per menu path for a design size `n`: demand designs count
    /// agents per choice path, the others per menu path.
    pub fn assignment(&self, n: usize) -> Assignment {
        match self.kind {
            DgpKind::CobbDouglasWalk { .. } | DgpKind::CobbDouglasCopula { .. } => {
                let paths: usize = self
                    .universe()
                    .periods()
                    .iter()
                    .map(|p| p.menus[0].items.len())
                    .product();
                Assignment::PerPath(n * paths)
            }
            _ => Assignment::PerPath(n),
        }
    }

    fn shares<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let horizon = self.model.horizon();
        let mut out = Vec::with_capacity(horizon);
        match self.kind {
            DgpKind::CobbDouglasWalk { sd } => {
                let mut a: f64 = rng.random();
                out.push(a);
                for _ in 1..horizon {
                    let e: f64 = rng.sample::<f64, _>(StandardNormal) * sd;
                    a = (0.9 * a + e).clamp(0.0, 1.0);
                    out.push(a);
                }
            }
            DgpKind::CobbDouglasCopula { correlation } => {
                let mut e: f64 = rng.sample(StandardNormal);
                out.push(e.atan() / std::f64::consts::PI + 0.5);
                for _ in 1..horizon {
                    let z: f64 = rng.sample(StandardNormal);
                    e = correlation * e + (1.0 - correlation * correlation).sqrt() * z;
                    out.push(e.atan() / std::f64::consts::PI + 0.5);
                }
            }
            _ => unreachable!("demand kinds only"),
        }
        out
    }

    fn demand_patch(&self, t: usize, j: usize, share: f64) -> Option<usize> {
        let arr = &self.model.geometry().expect("demand model").periods[t];
        let b = &arr.budgets[j];
        let y = [
            share * b.expenditure / b.prices[0],
            (1.0 - share) * b.expenditure / b.prices[1],
        ];
        arr.classify(j, &y).filter(|&i| i < arr.regular_count(j))
    }

    /// Choice path of one agent on `menu_path`.
    pub fn draw<R: Rng>(&self, menu_path: &[usize], rng: &mut R) -> ChoicePath {
        match &self.kind {
            DgpKind::CobbDouglasWalk { .. } | DgpKind::CobbDouglasCopula { .. } => loop {
                // bundles on an intersection patch have probability zero; redraw
                let shares = self.shares(rng);
                let path: Option<Vec<usize>> = menu_path
                    .iter()
                    .enumerate()
                    .map(|(t, &j)| self.demand_patch(t, j, shares[t]))
                    .collect();
                if let Some(p) = path {
                    return p;
                }
            },
            DgpKind::Binary(which) => {
                let m = which.marginals();
                menu_path
                    .iter()
                    .map(|&j| usize::from(rng.random::<f64>() >= m[2 * j]))
                    .collect()
            }
            DgpKind::Mixture { .. } => {
                let a = self.full_types.as_ref().expect("mixture types");
                let profile = a.key(self.sampler.as_ref().expect("mixture sampler").sample(rng));
                menu_path
                    .iter()
                    .enumerate()
                    .map(|(t, &j)| {
                        static_choice(
                            &self.model.statics()[t],
                            &self.universe().period(t).menu_sizes(),
                            profile[t],
                            j,
                        )
                    })
                    .collect()
            }
        }
    }

    /// Exact population choice function on the observed menu paths.
    pub fn population(&self) -> Result<StochasticChoiceFunction> {
        let space = Arc::new(PathSpace::new(
            self.universe().menu_sizes(),
            self.menu_paths.clone(),
        )?);
        let probs = match &self.kind {
            DgpKind::Binary(which) => {
                let m = which.marginals();
                (0..space.len())
                    .map(|r| {
                        let (mp, cp) = space.row(r);
                        mp.iter().zip(cp).map(|(&j, &i)| m[2 * j + i]).product()
                    })
                    .collect()
            }
            DgpKind::Mixture { weights } => {
                let total: f64 = weights.iter().sum();
                let nu: Vec<f64> = weights.iter().map(|w| w / total).collect();
                self.model.dynamic(&space)?.apply(&nu)
            }
            DgpKind::CobbDouglasWalk { .. } => {
                self.model.dynamic(&space)?.apply(&self.type_weights()?)
            }
            DgpKind::CobbDouglasCopula { .. } => {
                return Err(DrumError::Undefined(
                    "no closed-form population for the copula design".into(),
                ))
            }
        };
        Ok(StochasticChoiceFunction::new_unchecked(space, probs))
    }

    /// Population weights over the dynamic type columns of the demand walk,
    /// by Gauss-Legendre quadrature over the share regions.
    pub fn type_weights(&self) -> Result<Vec<f64>> {
        let DgpKind::CobbDouglasWalk { sd } = self.kind else {
            return Err(DrumError::Undefined(
                "type weights are available for the random-walk design only".into(),
            ));
        };
        if sd <= 0.0 {
            return Err(DrumError::Undefined(
                "degenerate noise has no smooth population weights".into(),
            ));
        }
        let horizon = self.model.horizon();
        // shares in each region induce one static type per period
        let cuts = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let region_type: Vec<Vec<usize>> = (0..horizon)
            .map(|t| {
                (0..3)
                    .map(|k| {
                        let mid = 0.5 * (cuts[k] + cuts[k + 1]);
                        let picks: Vec<usize> = (0..2)
                            .map(|j| self.demand_patch(t, j, mid).expect("regular patch"))
                            .collect();
                        let a = &self.model.statics()[t];
                        (0..a.ncols())
                            .find(|&c| (0..2).all(|j| static_choice(a, &[2, 2], c, j) == picks[j]))
                            .expect("region type exists")
                    })
                    .collect()
            })
            .collect();
        let space = self.model.full_space()?;
        let a = self.model.dynamic(&space)?;
        let rule = GaussLegendre::new(24);
        let mut nu = vec![0.0; a.ncols()];
        for regions in crate::model::cartesian(&vec![3; horizon]) {
            let p = rule.integrate(cuts[regions[0]], cuts[regions[0] + 1], |x| {
                walk_suffix(x, &regions[1..], sd, &rule, &cuts)
            });
            let profile: Vec<usize> = regions
                .iter()
                .enumerate()
                .map(|(t, &k)| region_type[t][k])
                .collect();
            let c = (0..a.ncols())
                .find(|&c| a.key(c) == profile.as_slice())
                .expect("profile column");
            nu[c] += p;
        }
        Ok(nu)
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(shares after a lie in regions | current share a)`.
fn walk_suffix(a: f64, regions: &[usize], sd: f64, rule: &GaussLegendre, cuts: &[f64; 4]) -> f64 {
    let Some((&k, rest)) = regions.split_first() else {
        return 1.0;
    };
    let mean = 0.9 * a;
    let mut p = rule.integrate(cuts[k], cuts[k + 1], |b| {
        (-0.5 * ((b - mean) / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            * walk_suffix(b, rest, sd, rule, cuts)
    });
    if k == 0 {
        p += normal_cdf(-mean / sd) * walk_suffix(0.0, rest, sd, rule, cuts);
    }
    if k == 2 {
        p += (1.0 - normal_cdf((1.0 - mean) / sd)) * walk_suffix(1.0, rest, sd, rule, cuts);
    }
    p
}

struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        GaussLegendre { nodes, weights }
    }

    fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// Item chosen on menu `j` by static column `c`.
pub fn static_choice(a: &TypeMatrix, menu_sizes: &[usize], c: usize, j: usize) -> usize {
    let offset: usize = menu_sizes[..j].iter().sum();
    a.column(c)
        .iter()
        .find(|&&r| r >= offset && r < offset + menu_sizes[j])
        .expect("one choice per menu")
        - offset
}

/// Every ordering of `n` menus, one per period.
pub fn permutation_paths(n: usize) -> Vec<MenuPath> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<MenuPath>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for j in 0..n {
            if !prefix.contains(&j) {
                prefix.push(j);
                rec(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}

pub fn simulate_paths<R: Rng>(dgp: &Dgp, assignment: Assignment, rng: &mut R) -> Vec<AgentPath> {
    let paths = dgp.menu_paths();
    let menus: Vec<&MenuPath> = match assignment {
        Assignment::PerPath(n) => paths
            .iter()
            .flat_map(|p| std::iter::repeat_n(p, n))
            .collect(),
        Assignment::Uniform(n) => (0..n)
            .map(|_| &paths[rng.random_range(0..paths.len())])
            .collect(),
    };
    menus
        .into_iter()
        .enumerate()
        .map(|(k, mp)| AgentPath {
            agent_id: format!("a{}", k + 1),
            menu_path: mp.clone(),
            choice_path: dgp.draw(mp, rng),
        })
        .collect()
}

/// Draw a panel from `dgp`.
pub fn simulate<R: Rng>(dgp: &Dgp, assignment: Assignment, rng: &mut R) -> PanelDataset {
    PanelDataset::from_paths(dgp.universe(), &simulate_paths(dgp, assignment, rng))
}

/// Sample choice function of a simulated draw, with counts.
pub fn simulate_rho<R: Rng>(
    dgp: &Dgp,
    assignment: Assignment,
    rng: &mut R,
) -> Result<StochasticChoiceFunction> {
    crate::model::rho_from_paths(dgp.universe(), &simulate_paths(dgp, assignment, rng))
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dgps: Vec<(String, Dgp)>,
    pub sizes: Vec<usize>,
    pub sims: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentCell {
    pub dgp: String,
    pub n: usize,
    pub sims: usize,
    pub rejections: usize,
    pub rate: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub sims: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentReport {
    pub fn cell(&self, dgp: &str, n: usize) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.dgp == dgp && c.n == n)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("dgp,n,sims,rejections,rate_pct,seconds\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.1},{:.2}",
                c.dgp,
                c.n,
                c.sims,
                c.rejections,
                100.0 * c.rate,
                c.seconds
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let width = self
            .cells
            .iter()
            .map(|c| c.dgp.len())
            .max()
            .unwrap_or(3)
            .max(3);
        let mut out = format!(
            "rejection rates at alpha = {} ({} simulations, {} bootstrap draws, seed {})\n",
            self.alpha, self.sims, self.reps, self.seed
        );
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>8}", "DGP", "N", "rate %");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>8.1}",
                c.dgp,
                c.n,
                100.0 * c.rate
            );
        }
        out
    }

    /// Horizontal bar chart of the rejection rates.
    pub fn to_svg(&self) -> String {
        let row = 22.0;
        let height = row * self.cells.len() as f64 + 30.0;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n",
            height
        );
        for (k, c) in self.cells.iter().enumerate() {
            let y = 10.0 + row * k as f64;
            let w = 300.0 * c.rate;
            let _ = writeln!(
                out,
                "<text x=\"0\" y=\"{}\">{} N={}</text>",
                y + 14.0,
                c.dgp,
                c.n
            );
            let _ = writeln!(
                out,
                "<rect x=\"150\" y=\"{}\" width=\"{:.1}\" height=\"16\" fill=\"#4a78a8\"/>",
                y + 2.0,
                w
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{}\">{:.1}%</text>",
                155.0 + w,
                y + 14.0,
                100.0 * c.rate
            );
        }
        let x = 150.0 + 300.0 * self.alpha;
        let _ = writeln!(out, "<line x1=\"{x:.1}\" x2=\"{x:.1}\" y1=\"0\" y2=\"{height}\" stroke=\"#c33\" stroke-dasharray=\"4\"/>");
        out.push_str("</svg>\n");
        out
    }
}

/// Simulation `sim` of cell `cell`: data stream and bootstrap seed.
fn sim_seed(seed: u64, cell: usize, sim: usize) -> (u64, u64) {
    let stream = ((cell as u64) << 32) | sim as u64;
    let mut rng = stream_rng(seed, stream);
    (rng.random(), rng.random())
}

/// Rejection rates of the cone test over repeated simulated samples.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.sims == 0 || config.reps == 0 {
        return Err(DrumError::Parameter(
            "simulations and bootstrap draws must be positive".into(),
        ));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(DrumError::Parameter(format!(
            "alpha {} outside (0, 1)",
            config.alpha
        )));
    }
    let mut cells = Vec::new();
    for (d, (name, dgp)) in config.dgps.iter().enumerate() {
        let space = PathSpace::new(dgp.universe().menu_sizes(), dgp.menu_paths().to_vec())?;
        let a = dgp.model().dynamic(&space)?;
        for (s, &n) in config.sizes.iter().enumerate() {
            let cell = d * config.sizes.len() + s;
            let start = Instant::now();
            let one = |sim: usize| -> Result<bool> {
                let (data_seed, boot_seed) = sim_seed(config.seed, cell, sim);
                let mut rng = stream_rng(data_seed, 0);
                let rho = simulate_rho(dgp, dgp.assignment(n), &mut rng)?;
                let test = TestConfig {
                    bootstrap_reps: config.reps,
                    seed: boot_seed,
                    weighting: config.weighting,
                    threads: None,
                    tau: None,
                };
                let a_obs = if rho.space().menu_paths() == space.menu_paths() {
                    a.clone()
                } else {
                    dgp.model().dynamic(rho.space())?
                };
                Ok(run_test(&rho, &a_obs, &test)?.rejects(config.alpha))
            };
            let outcomes = run_sims(config.sims, one)?;
            let rejections = outcomes.iter().filter(|&&r| r).count();
            cells.push(ExperimentCell {
                dgp: name.clone(),
                n,
                sims: config.sims,
                rejections,
                rate: rejections as f64 / config.sims as f64,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(ExperimentReport {
        sims: config.sims,
        reps: config.reps,
        alpha: config.alpha,
        seed: config.seed,
        cells,
    })
}

#[cfg(feature = "parallel")]
fn run_sims<F: Fn(usize) -> Result<bool> + Sync>(sims: usize, f: F) -> Result<Vec<bool>> {
    use rayon::prelude::*;
    (0..sims).into_par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_sims<F: Fn(usize) -> Result<bool>>(sims: usize, f: F) -> Result<Vec<bool>> {
    (0..sims).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_is_exact_on_polynomials() {
        let rule = GaussLegendre::new(24);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(7) - 3.0 * x);
        assert!((v - (256.0 / 8.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn walk_population_sums_to_one() {
        let dgp = Dgp::demand(DgpKind::CobbDouglasWalk { sd: 5.0 }, 2).unwrap();
        let nu = dgp.type_weights().unwrap();
        assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let rho = dgp.population().unwrap();
        rho.validate(1e-12).unwrap();
    }

    #[test]
    fn binary_population_is_product() {
        let dgp = Dgp::binary(BinaryDgp::Rho3).unwrap();
        let rho = dgp.population().unwrap();
        assert_eq!(rho.space().menu_paths().len(), 6);
        assert!((rho.get(&[0, 1, 2], &[0, 0, 0]).unwrap() - 0.25 * 0.5 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_walk_is_deterministic() {
        let dgp = Dgp::demand(DgpKind::CobbDouglasWalk { sd: 0.0 }, 2).unwrap();
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            let s = dgp.shares(&mut rng);
            assert!((s[1] - 0.9 * s[0]).abs() < 1e-15);
        }
    }
}
