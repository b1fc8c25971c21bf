//! Choice universes, menu and choice paths, stochastic choice functions and
//! their cross-sectional transforms.

mod panel;
mod pool;
mod rho;
mod transforms;
mod universe;

pub use panel::{estimate_rho, rho_from_paths, AgentPath, PanelDataset, PanelRecord};
pub use pool::{pool, PoolAllocation, PooledChoice, PooledPoint};
pub use rho::{ChoicePath, MenuPath, PathSpace, StochasticChoiceFunction};
pub use transforms::{marginal_conditional_slice, CrossSections, SliceWeights};
pub use universe::{ChoiceUniverse, Menu, Period};

pub(crate) use universe::{all_subsets, cartesian};
