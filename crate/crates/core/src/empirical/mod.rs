//! Discrepancies over convex sets, the level-set reduction, binomial maxima,
//! chaining bounds and fixed-point rates.

mod binomial;
mod discrepancy;
mod entropy;
mod hull_deficit;
mod levelset;

pub use binomial::{binomial_max_bound_check, binomial_max_bound_check_with, BinomialReport, BERNSTEIN_C};
pub use discrepancy::{
    convex_discrepancy, interval_discrepancy_1d, polygon_probability, DiscrepancyMode, DiscrepancyReport, DiscrepancyWitness,
};
pub use entropy::{
    chaining_bound, chaining_bound_min, chaining_bound_with, fixed_point, shell_bound, BracketKind, EntropyModel, FixedPointKind,
    ShellBound, CHAINING_C,
};
pub use hull_deficit::{hull_deficit, hull_deficit_experiment, HULL_MC_DRAWS};
pub use levelset::{levelset_rademacher_check, ClassMember, LevelsetReport, LEVELS, REFERENCE_DRAWS};
