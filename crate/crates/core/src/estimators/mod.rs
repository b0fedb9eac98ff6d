//! Convex least squares, the 1-D log-concave MLE, the tournament selector and
//! sample standardization.

mod convex_ls;
mod mle1d;
mod standardize;
mod tournament;

pub use convex_ls::{convex_ls_fit, convex_ls_fit_with, convex_predict, ConvexFit, ConvexFitOptions};
pub use mle1d::{logconcave_mle_1d, Mle1d};
pub use standardize::{standardize, AffineMap, Standardized};
pub use tournament::{tournament_estimate, TournamentNet, Witness};

#[cfg(test)]
mod tests;
