//! Budget arrangements, patches, dominance and rational demand types.

mod budget;
mod patches;
mod types;

pub use budget::{normalize_dradm, Budget, DemandRecord};
pub use patches::{compute_patches, Arrangement, Patch, Side};
pub use types::{enumerate_demand_types, DemandGeometry};
