use crate::error::{DrumError, Result};
use crate::geometry::DemandGeometry;
use crate::model::{ChoiceUniverse, PathSpace};
use crate::repr::orders::{enumerate_orders, LotteryTable};
use crate::repr::type_matrix::{build_static_a, kron_dynamic, TypeMatrix};

/// A choice universe together with the static type matrix of every period.
#[derive(Debug, Clone)]
pub struct DrumModel {
    universe: ChoiceUniverse,
    statics: Vec<TypeMatrix>,
    geometry: Option<DemandGeometry>,
}

impl DrumModel {
    /// Types are the linear orders compatible with each period's primitive order.
    pub fn random_utility(universe: ChoiceUniverse) -> Result<Self> {
        Self::with_lotteries(universe, None)
    }

    /// Types are the expected-utility orders over the given lotteries.
    pub fn expected_utility(universe: ChoiceUniverse, lotteries: &LotteryTable) -> Result<Self> {
        Self::with_lotteries(universe, Some(lotteries))
    }

    fn with_lotteries(universe: ChoiceUniverse, lotteries: Option<&LotteryTable>) -> Result<Self> {
        let statics = (0..universe.horizon())
            .map(|t| {
                let orders = enumerate_orders(&universe, t, lotteries)?;
                if orders.is_empty() {
                    return Err(DrumError::Parameter(format!(
                        "period {} admits no rational type",
                        t + 1
                    )));
                }
                let fs: Vec<Vec<usize>> = orders
                    .iter()
                    .map(|o| o.choices(universe.period(t)))
                    .collect();
                build_static_a(&universe, t, &fs)
            })
            .collect::<Result<_>>()?;
        Ok(DrumModel {
            universe,
            statics,
            geometry: None,
        })
    }

    /// Types are the acyclic patch profiles of each period's budgets.
    pub fn demand(geometry: DemandGeometry) -> Result<Self> {
        let universe = geometry.universe()?;
        let statics = (0..geometry.horizon())
            .map(|t| build_static_a(&universe, t, &geometry.static_types(t)))
            .collect::<Result<_>>()?;
        Ok(DrumModel {
            universe,
            statics,
            geometry: Some(geometry),
        })
    }

    pub fn universe(&self) -> &ChoiceUniverse {
        &self.universe
    }

    pub fn statics(&self) -> &[TypeMatrix] {
        &self.statics
    }

    pub fn geometry(&self) -> Option<&DemandGeometry> {
        self.geometry.as_ref()
    }

    pub fn horizon(&self) -> usize {
        self.statics.len()
    }

    /// Full path space of the universe.
    pub fn full_space(&self) -> Result<PathSpace> {
        PathSpace::full(self.universe.menu_sizes())
    }

    pub fn dynamic(&self, space: &PathSpace) -> Result<TypeMatrix> {
        if space.menu_sizes() != self.universe.menu_sizes().as_slice() {
            return Err(DrumError::Schema(
                "path space does not match the model universe".into(),
            ));
        }
        kron_dynamic(&self.statics, space)
    }
}
