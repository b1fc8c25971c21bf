use crate::error::{DrumError, Result};
use crate::model::rho::StochasticChoiceFunction;

/// Frequencies `F(menu path | menu at t)` used to mix marginals into a slice.
#[derive(Debug, Clone, PartialEq)]
pub enum SliceWeights {
    /// Equal weight on every observed path sharing the period-t menu.
    Uniform,
    /// Proportional to observed path sample sizes.
    Counts,
    /// One weight per observed menu path; must sum to 1 within each group.
    Custom(Vec<f64>),
}

/// Cross-sectional views of a dynamic stochastic choice function at one period.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSections {
    pub period: usize,
    /// Choice probability at `period` given the other periods' choices, per
    /// row of `rho`; `None` where the conditioning mass is zero.
    pub conditional: Vec<Option<f64>>,
    /// Per observed menu path, the distribution over items of its period menu.
    pub marginal: Vec<Vec<f64>>,
    /// Per menu of the period, the mixture of marginals; `None` if no observed
    /// path uses the menu.
    pub slice: Vec<Option<Vec<f64>>>,
}

pub fn marginal_conditional_slice(
    rho: &StochasticChoiceFunction,
    t: usize,
    weights: &SliceWeights,
) -> Result<CrossSections> {
    let space = rho.space();
    if t >= space.horizon() {
        return Err(DrumError::Parameter(format!(
            "period {} outside the horizon",
            t + 1
        )));
    }
    let probs = rho.probs();
    let paths = space.menu_paths();

    let mut conditional = vec![None; space.len()];
    for (r, slot) in conditional.iter_mut().enumerate() {
        let (mp, cp) = space.row(r);
        let size = space.menu_sizes()[t][mp[t]];
        let mut alt = cp.clone();
        let mut denom = 0.0;
        for i in 0..size {
            alt[t] = i;
            denom += space.index_of(mp, &alt).map_or(0.0, |k| probs[k]);
        }
        if denom > 0.0 {
            *slot = Some(probs[r] / denom);
        }
    }

    let mut marginal: Vec<Vec<f64>> = paths
        .iter()
        .map(|mp| vec![0.0; space.menu_sizes()[t][mp[t]]])
        .collect();
    for (r, &p) in probs.iter().enumerate() {
        let (_, cp) = space.row(r);
        marginal[space.row_path_index(r)][cp[t]] += p;
    }

    let raw: Vec<f64> = match weights {
        SliceWeights::Uniform => vec![1.0; paths.len()],
        SliceWeights::Counts => rho
            .path_sizes()
            .ok_or_else(|| DrumError::Parameter("count weights need sample counts".into()))?
            .iter()
            .map(|&n| n as f64)
            .collect(),
        SliceWeights::Custom(w) => {
            if w.len() != paths.len() || w.iter().any(|&v| v < 0.0) {
                return Err(DrumError::Parameter(
                    "one nonnegative weight per observed menu path".into(),
                ));
            }
            w.clone()
        }
    };
    let menus = space.menu_sizes()[t].len();
    let mut totals = vec![0.0; menus];
    for (m, mp) in paths.iter().enumerate() {
        totals[mp[t]] += raw[m];
    }
    if let SliceWeights::Custom(_) = weights {
        if let Some(j) = totals
            .iter()
            .position(|&s| s > 0.0 && (s - 1.0).abs() > 1e-9)
        {
            return Err(DrumError::Parameter(format!(
                "weights for menu {} sum to {}",
                j + 1,
                totals[j]
            )));
        }
    }
    let mut slice: Vec<Option<Vec<f64>>> = vec![None; menus];
    for (m, mp) in paths.iter().enumerate() {
        let j = mp[t];
        if totals[j] <= 0.0 {
            continue;
        }
        let f = raw[m] / totals[j];
        let entry = slice[j].get_or_insert_with(|| vec![0.0; marginal[m].len()]);
        for (s, v) in entry.iter_mut().zip(&marginal[m]) {
            *s += f * v;
        }
    }
    Ok(CrossSections {
        period: t,
        conditional,
        marginal,
        slice,
    })
}
