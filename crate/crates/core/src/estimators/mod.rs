//! Monte Carlo estimators and exact small-instance verifiers.

mod animals;
mod dtilde;
mod russo;
mod stats;
mod tail;
mod timeconst;

pub use animals::{coloring_bound, edge_distance, greedy_animal, Coloring, MAX_ANIMAL_LENGTH};
pub use dtilde::{
    dtilde, dtilde_in, goodapprox_check, penalty_weight, pi_bar_length, pi_bar_tail, DtildeContext, DtildeResult, GoodApproxReport,
    COST_TOLERANCE,
};
pub use russo::{
    capped_distance, cluster_count, disconnected, edge_closed, increasing_witness, russo_check, tabulate, Mask, RussoPoint, RussoReport,
    MAX_EDGES, RUSSO_TOLERANCE,
};
pub use stats::{log_frequency_slope, mean_se, table_slope, wilson_se, wls, EstimateRow, EstimateTable, SlopeFit};
pub use tail::{bypass_sum, bypass_tail, precluster_tail, slope_where, tail_distances, tail_estimate, TailConfig, TailReport};
pub use timeconst::{coupled_labelings, lipschitz_sweep, ring_distances, time_constant, LipschitzReport};
