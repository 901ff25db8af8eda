//! Mixing-time measurement and exact conductance checks.
//!
//! Continuous chains are measured through the histogram TV of one
//! coordinate marginal across many independent replicas. Small 1D
//! discretizations give finite chains on which the s-conductance and the
//! warm-start bound `d_TV ≤ Ms + M(1 − Φ_s²/2)ⁿ` can be evaluated exactly.

mod finite;
mod marginal;
mod scaling;
mod warm;

pub use finite::{
    discretize_1d, exact_warmness, lovasz_bound_check, s_conductance_exact, FiniteChain, LovaszReport, LovaszRow,
    CHAIN_TOLERANCE, LOVASZ_SLACK, MAX_STATES,
};
pub use marginal::{
    geometric_grid, mixing_time_measure, noise_floor, tv_from_counts, tv_marginal, tv_marginal_with,
    worst_coordinate, MarginalBinning, MixingMeasurement, MixingOptions, TVCurve, MIN_REPLICAS,
};
pub use scaling::{scaling_experiment, ScalingOptions, ScalingReport, ScalingRow, ALLOWED_DIMS, SLOPE_CONFIDENCE};
pub use warm::WarmStart;
