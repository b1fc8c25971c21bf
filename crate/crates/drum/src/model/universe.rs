use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{schema, DrumError, Result};

/// A menu of one period: a stable id and the indices of its alternatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Menu {
    pub id: String,
    pub items: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Period {
    pub label: String,
    pub alternatives: Vec<String>,
    pub menus: Vec<Menu>,
    /// Declared strict preferences `(better, worse)` between sets of alternatives.
    pub order: Vec<(Vec<usize>, Vec<usize>)>,
}

impl Period {
    pub fn new(label: impl Into<String>, alternatives: Vec<String>, menus: Vec<Menu>) -> Self {
        Period {
            label: label.into(),
            alternatives,
            menus,
            order: Vec::new(),
        }
    }

    pub fn with_order(mut self, order: Vec<(Vec<usize>, Vec<usize>)>) -> Self {
        self.order = order;
        self
    }

    /// Declared order expanded to element pairs.
    pub fn element_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (better, worse) in &self.order {
            for &b in better {
                for &w in worse {
                    if !pairs.contains(&(b, w)) {
                        pairs.push((b, w));
                    }
                }
            }
        }
        pairs
    }

    pub fn menu_sizes(&self) -> Vec<usize> {
        self.menus.iter().map(|m| m.items.len()).collect()
    }

    /// Number of (menu, item) rows in the static type matrix.
    pub fn static_rows(&self) -> usize {
        self.menus.iter().map(|m| m.items.len()).sum()
    }
}

/// Per-period alternatives, menus and primitive orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceUniverse {
    periods: Vec<Period>,
}

impl ChoiceUniverse {
    pub fn new(periods: Vec<Period>) -> Result<Self> {
        if periods.is_empty() {
            return Err(schema("a universe needs at least one period"));
        }
        for (t, p) in periods.iter().enumerate() {
            if p.alternatives.is_empty() {
                return Err(schema(format!("period {} has no alternatives", t + 1)));
            }
            if p.menus.is_empty() {
                return Err(schema(format!("period {} has no menus", t + 1)));
            }
            let mut ids = HashMap::new();
            for (j, m) in p.menus.iter().enumerate() {
                if m.items.is_empty() {
                    return Err(schema(format!(
                        "menu {} of period {} is empty",
                        m.id,
                        t + 1
                    )));
                }
                if ids.insert(m.id.clone(), j).is_some() {
                    return Err(schema(format!(
                        "duplicate menu id {} in period {}",
                        m.id,
                        t + 1
                    )));
                }
                let mut seen = m.items.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != m.items.len() {
                    return Err(schema(format!("menu {} repeats an alternative", m.id)));
                }
                if let Some(&bad) = m.items.iter().find(|&&i| i >= p.alternatives.len()) {
                    return Err(schema(format!(
                        "menu {} references alternative index {}",
                        m.id, bad
                    )));
                }
            }
            for (b, w) in &p.order {
                if b.iter().chain(w).any(|&i| i >= p.alternatives.len()) {
                    return Err(schema(format!(
                        "order pair in period {} out of range",
                        t + 1
                    )));
                }
            }
            if has_cycle(p.alternatives.len(), &p.element_pairs()) {
                return Err(DrumError::CyclicOrder { period: t + 1 });
            }
        }
        Ok(ChoiceUniverse { periods })
    }

    /// Same alternatives and menus in each of `t` periods.
    pub fn repeated(period: Period, t: usize) -> Result<Self> {
        let periods = (1..=t)
            .map(|k| Period {
                label: k.to_string(),
                ..period.clone()
            })
            .collect();
        Self::new(periods)
    }

    /// All two-element menus over `alternatives`, in lexicographic order.
    pub fn binary_menus(alternatives: &[&str], t: usize) -> Result<Self> {
        let n = alternatives.len();
        let mut menus = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                menus.push(Menu {
                    id: format!("{}{}", alternatives[a], alternatives[b]),
                    items: vec![a, b],
                });
            }
        }
        let period = Period::new(
            "1",
            alternatives.iter().map(|s| s.to_string()).collect(),
            menus,
        );
        Self::repeated(period, t)
    }

    /// Every nonempty subset of the alternatives is a menu, ordered by size
    /// then lexicographically.
    pub fn full_variation(alternatives: &[&str], t: usize) -> Result<Self> {
        let n = alternatives.len();
        if n > 12 {
            return Err(DrumError::Size(format!(
                "{} alternatives give 2^{} menus",
                n, n
            )));
        }
        let menus = all_subsets(n)
            .into_iter()
            .map(|items| Menu {
                id: items
                    .iter()
                    .map(|&i| alternatives[i])
                    .collect::<Vec<_>>()
                    .join(""),
                items,
            })
            .collect();
        let period = Period::new(
            "1",
            alternatives.iter().map(|s| s.to_string()).collect(),
            menus,
        );
        Self::repeated(period, t)
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn period(&self, t: usize) -> &Period {
        &self.periods[t]
    }

    pub fn horizon(&self) -> usize {
        self.periods.len()
    }

    pub fn menu_sizes(&self) -> Vec<Vec<usize>> {
        self.periods.iter().map(|p| p.menu_sizes()).collect()
    }

    /// Every menu path, in lexicographic order.
    pub fn all_menu_paths(&self) -> Vec<Vec<usize>> {
        let counts: Vec<usize> = self.periods.iter().map(|p| p.menus.len()).collect();
        cartesian(&counts)
    }

    pub fn menu_index(&self, t: usize, id: &str) -> Option<usize> {
        let p = &self.periods[t];
        p.menus.iter().position(|m| m.id == id).or_else(|| {
            id.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1 && k <= p.menus.len())
                .map(|k| k - 1)
        })
    }

    /// Position of alternative `id` inside menu `j` of period `t`, accepting
    /// either the alternative id or a 1-based position.
    pub fn item_index(&self, t: usize, j: usize, id: &str) -> Option<usize> {
        let p = &self.periods[t];
        let menu = &p.menus[j];
        menu.items
            .iter()
            .position(|&a| p.alternatives[a] == id)
            .or_else(|| {
                id.parse::<usize>()
                    .ok()
                    .filter(|&k| k >= 1 && k <= menu.items.len())
                    .map(|k| k - 1)
            })
    }
}

pub(crate) fn cartesian(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &c in counts {
        let mut next = Vec::with_capacity(out.len() * c);
        for prefix in &out {
            for k in 0..c {
                let mut p = prefix.clone();
                p.push(k);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub(crate) fn all_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

pub(crate) fn has_cycle(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        if a == b {
            return true;
        }
        adj[a].push(b);
    }
    // 0 unvisited, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    fn visit(v: usize, adj: &[Vec<usize>], state: &mut [u8]) -> bool {
        state[v] = 1;
        for &w in &adj[v] {
            if state[w] == 1 || (state[w] == 0 && visit(w, adj, state)) {
                return true;
            }
        }
        state[v] = 2;
        false
    }
    (0..n).any(|v| state[v] == 0 && visit(v, &adj, &mut state))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MenuFile {
    id: String,
    items: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PeriodFile {
    #[serde(default)]
    label: Option<String>,
    alternatives: Vec<String>,
    menus: Vec<MenuFile>,
    #[serde(default)]
    order: Vec<(Vec<String>, Vec<String>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct UniverseFile {
    periods: Vec<PeriodFile>,
}

impl ChoiceUniverse {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: UniverseFile = serde_json::from_str(text)?;
        let mut periods = Vec::new();
        for (t, p) in file.periods.into_iter().enumerate() {
            let lookup = |id: &str| -> Result<usize> {
                p.alternatives.iter().position(|a| a == id).ok_or_else(|| {
                    schema(format!("unknown alternative {} in period {}", id, t + 1))
                })
            };
            let menus = p
                .menus
                .iter()
                .map(|m| {
                    Ok(Menu {
                        id: m.id.clone(),
                        items: m.items.iter().map(|s| lookup(s)).collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let order = p
                .order
                .iter()
                .map(|(b, w)| {
                    Ok((
                        b.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?,
                        w.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            periods.push(Period {
                label: p.label.clone().unwrap_or_else(|| (t + 1).to_string()),
                alternatives: p.alternatives.clone(),
                menus,
                order,
            });
        }
        Self::new(periods)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = UniverseFile {
            periods: self
                .periods
                .iter()
                .map(|p| PeriodFile {
                    label: Some(p.label.clone()),
                    alternatives: p.alternatives.clone(),
                    menus: p
                        .menus
                        .iter()
                        .map(|m| MenuFile {
                            id: m.id.clone(),
                            items: m.items.iter().map(|&i| p.alternatives[i].clone()).collect(),
                        })
                        .collect(),
                    order: p
                        .order
                        .iter()
                        .map(|(b, w)| {
                            (
                                b.iter().map(|&i| p.alternatives[i].clone()).collect(),
                                w.iter().map(|&i| p.alternatives[i].clone()).collect(),
                            )
                        })
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}
