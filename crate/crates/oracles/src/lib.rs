//! Reference computations that solver results are compared against:
//! static SBS/VBS bounds over a configuration grid, the Oracle-DAC portfolio
//! bound, value iteration on exactly tabulated benchmarks, and the
//! LeadingOnes runtime oracles.

pub mod leading_ones;
pub mod static_bounds;
pub mod value_iteration;

pub use leading_ones::{leading_ones_chain_cost, leading_ones_full_state_cost};
pub use static_bounds::{oracle_dac, static_grid_bounds, CostMatrix, CostRecord, OracleReport};
pub use value_iteration::{
    exact_static_costs, policy_cost, solve_mdp, value_iteration_optimal, MdpSolution,
    ValueIterationResult, MAX_STATES,
};
