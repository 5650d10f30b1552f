//! Moment and SOS relaxations of a polynomial program, solved order by order.

mod assemble;
mod hierarchy;
mod moment;
mod rank;

use thiserror::Error;

pub use assemble::{assemble_moment_sdp, assemble_sos_sdp, cone_generators, MomentSdp, SosSdp};
pub use hierarchy::{
    default_threads, flatness_degree, minimal_order, run_hierarchy, solve_order, HierarchyOptions,
    HierarchyResult, OrderRecord, Side,
};
pub use moment::{half_degree, localizing_map, LocalizingMap, MomentVector};
pub use rank::{extract_minimizers, flat_truncation, numerical_rank, rank_profile, FlatTruncation, RANK_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelaxError {
    #[error("order {order} is too small for {what}; at least {needed} is needed")]
    OrderTooSmall { order: u32, needed: u32, what: String },
    #[error("moment vector has {got} entries, expected {expected}")]
    MomentLength { expected: usize, got: usize },
    #[error("flatness test needs d < k <= {max}, got k = {k}, d = {d}")]
    FlatOrder { k: u32, d: u32, max: u32 },
    #[error("extraction failed: {0}")]
    Extraction(String),
}
