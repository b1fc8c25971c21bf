use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{schema, DrumError, Result};
use crate::model::rho::{ChoicePath, MenuPath, PathSpace, StochasticChoiceFunction};
use crate::model::universe::ChoiceUniverse;

/// One observed choice: `period` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub agent_id: String,
    pub period: usize,
    pub menu_id: String,
    pub choice_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PanelDataset {
    pub records: Vec<PanelRecord>,
}

/// The menu path and choice path of one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentPath {
    pub agent_id: String,
    pub menu_path: MenuPath,
    pub choice_path: ChoicePath,
}

impl PanelDataset {
    pub fn new(records: Vec<PanelRecord>) -> Self {
        PanelDataset { records }
    }

    /// Resolve every agent to a menu path and a choice path.
    pub fn agent_paths(&self, universe: &ChoiceUniverse) -> Result<Vec<AgentPath>> {
        let horizon = universe.horizon();
        let mut by_agent: BTreeMap<&str, Vec<Option<(usize, usize)>>> = BTreeMap::new();
        for rec in &self.records {
            if rec.period == 0 || rec.period > horizon {
                return Err(DrumError::Record(format!(
                    "agent {} has period {} outside 1..={}",
                    rec.agent_id, rec.period, horizon
                )));
            }
            let t = rec.period - 1;
            let j = universe.menu_index(t, &rec.menu_id).ok_or_else(|| {
                schema(format!(
                    "unknown menu id {} in period {}",
                    rec.menu_id, rec.period
                ))
            })?;
            let i = universe.item_index(t, j, &rec.choice_id).ok_or_else(|| {
                DrumError::Record(format!(
                    "agent {} chose {} which is not in menu {}",
                    rec.agent_id, rec.choice_id, rec.menu_id
                ))
            })?;
            let slots = by_agent
                .entry(rec.agent_id.as_str())
                .or_insert_with(|| vec![None; horizon]);
            if slots[t].is_some() {
                return Err(DrumError::Record(format!(
                    "agent {} has two records in period {}",
                    rec.agent_id, rec.period
                )));
            }
            slots[t] = Some((j, i));
        }
        by_agent
            .into_iter()
            .map(|(agent, slots)| {
                let mut menu_path = Vec::with_capacity(horizon);
                let mut choice_path = Vec::with_capacity(horizon);
                for (t, s) in slots.into_iter().enumerate() {
                    let (j, i) = s.ok_or_else(|| {
                        DrumError::Record(format!(
                            "agent {} has no record in period {}",
                            agent,
                            t + 1
                        ))
                    })?;
                    menu_path.push(j);
                    choice_path.push(i);
                }
                Ok(AgentPath {
                    agent_id: agent.to_string(),
                    menu_path,
                    choice_path,
                })
            })
            .collect()
    }

    /// Build a panel from resolved paths, using menu ids and alternative ids.
    pub fn from_paths(universe: &ChoiceUniverse, paths: &[AgentPath]) -> Self {
        let mut records = Vec::with_capacity(paths.len() * universe.horizon());
        for ap in paths {
            for t in 0..universe.horizon() {
                let p = universe.period(t);
                let menu = &p.menus[ap.menu_path[t]];
                records.push(PanelRecord {
                    agent_id: ap.agent_id.clone(),
                    period: t + 1,
                    menu_id: menu.id.clone(),
                    choice_id: p.alternatives[menu.items[ap.choice_path[t]]].clone(),
                });
            }
        }
        PanelDataset { records }
    }
}

/// Sample analogue of the stochastic choice function: path frequencies within
/// each observed menu path, with exact counts retained.
pub fn estimate_rho(
    panel: &PanelDataset,
    universe: &ChoiceUniverse,
) -> Result<StochasticChoiceFunction> {
    let paths = panel.agent_paths(universe)?;
    if paths.is_empty() {
        return Err(DrumError::Record("panel has no agents".into()));
    }
    rho_from_paths(universe, &paths)
}

pub fn rho_from_paths(
    universe: &ChoiceUniverse,
    paths: &[AgentPath],
) -> Result<StochasticChoiceFunction> {
    let observed: Vec<MenuPath> = paths.iter().map(|p| p.menu_path.clone()).collect();
    let space = Arc::new(PathSpace::new(universe.menu_sizes(), observed)?);
    let mut counts = vec![0u64; space.len()];
    for p in paths {
        let r = space
            .index_of(&p.menu_path, &p.choice_path)
            .ok_or_else(|| schema("choice path outside its menu path"))?;
        counts[r] += 1;
    }
    StochasticChoiceFunction::from_counts(space, counts)
}
