//! Type matrices, inequality representations and the maps between them.

mod bm;
mod dd;
mod ineq;
mod model;
mod orders;
mod projection;
mod reduce;
mod type_matrix;

pub use bm::{bm_matrix, drum_bm_values, kron_apply};
pub use dd::{convert_v_to_h, MAX_GENERATORS};
pub use ineq::{catalog_h, Catalog, InequalityMatrix, RowKind};
pub use model::DrumModel;
pub use orders::{enumerate_orders, LinearOrder, LotteryTable};
pub use projection::{gamma_k, phi_star, projection_ops, ProjectionOperator};
pub use reduce::{reduce_h, reduce_star, reduced_rows, Reduced};
pub use type_matrix::{build_static_a, kron_dynamic, TypeMatrix, MAX_ENTRIES};
