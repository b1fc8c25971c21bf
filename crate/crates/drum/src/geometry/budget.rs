use serde::{Deserialize, Serialize};

use crate::error::{schema, DrumError, Result};

/// Linear budget `{y >= 0 : prices . y = expenditure}` faced in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub period: usize,
    pub index: usize,
    pub prices: Vec<f64>,
    pub expenditure: f64,
}

impl Budget {
    pub fn new(period: usize, index: usize, prices: Vec<f64>, expenditure: f64) -> Result<Self> {
        let b = Budget {
            period,
            index,
            prices,
            expenditure,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.prices.len() < 2 {
            return Err(schema("budgets need at least two goods"));
        }
        if self.prices.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(schema(format!(
                "budget {} has a nonpositive price",
                self.index + 1
            )));
        }
        if !(self.expenditure > 0.0 && self.expenditure.is_finite()) {
            return Err(schema(format!(
                "budget {} has nonpositive expenditure",
                self.index + 1
            )));
        }
        Ok(())
    }

    pub fn goods(&self) -> usize {
        self.prices.len()
    }

    pub fn cost(&self, y: &[f64]) -> f64 {
        self.prices.iter().zip(y).map(|(p, v)| p * v).sum()
    }

    /// `prices . y - expenditure`.
    pub fn slack(&self, y: &[f64]) -> f64 {
        self.cost(y) - self.expenditure
    }

    pub fn same_hyperplane(&self, other: &Budget) -> bool {
        let s = self.expenditure / other.expenditure;
        self.prices.len() == other.prices.len()
            && self
                .prices
                .iter()
                .zip(&other.prices)
                .all(|(a, b)| (a - s * b).abs() <= 1e-12 * a.abs().max(1.0))
    }

    pub fn unit(&self) -> Budget {
        Budget {
            period: self.period,
            index: self.index,
            prices: self.prices.clone(),
            expenditure: 1.0,
        }
    }
}

/// A point-level demand observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub agent_id: String,
    pub period: usize,
    pub budget: usize,
    pub quantity: Vec<f64>,
}

/// Rescale each demand to unit expenditure at its own prices and return the
/// unit-expenditure budgets.
pub fn normalize_dradm(
    records: &[DemandRecord],
    budgets: &[Budget],
) -> Result<(Vec<DemandRecord>, Vec<Budget>)> {
    let find = |t: usize, j: usize| budgets.iter().find(|b| b.period == t && b.index == j);
    let out = records
        .iter()
        .map(|r| {
            let b = find(r.period, r.budget).ok_or_else(|| {
                schema(format!(
                    "record for agent {} references unknown budget",
                    r.agent_id
                ))
            })?;
            if r.quantity.len() != b.goods() {
                return Err(schema(format!(
                    "agent {} demand has wrong dimension",
                    r.agent_id
                )));
            }
            let spend = b.cost(&r.quantity);
            if !(spend > 0.0) {
                return Err(DrumError::Record(format!(
                    "agent {} has zero expenditure",
                    r.agent_id
                )));
            }
            Ok(DemandRecord {
                quantity: r.quantity.iter().map(|v| v / spend).collect(),
                ..r.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, budgets.iter().map(Budget::unit).collect()))
}
