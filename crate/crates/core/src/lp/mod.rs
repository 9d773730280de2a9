//! Exact linear programming: a general two-phase simplex and the local-weight
//! LP built on it.

mod local_weight;
mod float;
mod simplex;

pub use local_weight::{
    local_weight, local_weight_capped, local_weight_cg, local_weight_with, price_columns, LocalWeightResult,
    PricedColumn, Solver, AUTO_FULL_LIMIT,
};
pub use simplex::{solve_lp, Constraint, LpProblem, LpSolution, Sense, SparseColumn, VarBounds};
