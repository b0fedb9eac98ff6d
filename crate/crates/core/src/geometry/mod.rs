//! Balls, caps, hulls and packings.

pub mod ball;
pub mod cap;
pub mod greedy;
pub mod hull;
pub(crate) mod lp;
pub mod packing;

pub use ball::{ball_volume, ln_ball_volume, sphere_area};
pub use cap::{cap_pair_intersection_2d, cap_volume, packing_height, Cap, CapVolumeMethod};
pub use greedy::{greedy_disjointify, union_length, GreedyOutcome, IntervalFamily, SetOracle};
pub use hull::{affine_rank, convex_hull, ConvexBody, Facet};
pub use lp::in_hull_lp;
pub use packing::{
    antipodal_ball_packing, antipodal_ball_packing_with, cap_packing, cap_packing_with, AntipodalOptions, AntipodalPacking,
    CapOracle, CapPacking,
};
