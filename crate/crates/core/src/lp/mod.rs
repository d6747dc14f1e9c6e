pub mod export;
pub mod model;
pub mod ns;
pub mod simplex;

pub use export::to_lp_format;
pub use model::{Constraint, LpModel, Relation};
pub use ns::{
    box_index, box_violation, build_decoder_box_lp, build_ns, build_ns_full, build_ns_joint, build_ns_sum,
    extract_ns_solution, FullLayout, NsLayout, NsSolution, Objective, DEFAULT_FULL_NS_CAP,
};
pub use simplex::{lp_solve, lp_solve_with, LpSolution, LpStatus, SimplexOptions, DEFAULT_PIVOT_LIMIT};
