//! Evaluation of the sparse operator on step functions, weighted norms, and
//! operator-norm estimation.

mod cube_sum;
mod sparse;
mod step;

pub use cube_sum::{AscentOptions, CubeSum, Maximum};
pub use sparse::{
    apply, estimate_opnorm, indicator_lower_bound, indicator_lower_bound_at, oracle_opnorm,
    sparse_cube_sum, theorem_rhs, OpNormEstimate, RhsBranch, TheoremRhs, ORACLE_MAX_ATOMS,
};
pub use step::{lp_norm, StepFunction};
