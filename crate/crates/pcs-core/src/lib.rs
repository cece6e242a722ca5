//! Projection congruent subset (PCS) robust location/scatter estimation.
//!
//! The estimator searches for the h-subset of observations whose members
//! look most alike across hyperplane projections (the incongruence index),
//! then reports the mean and covariance of that subset. A breakdown lab
//! probes contamination behavior empirically.

pub mod breakdown;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod incongruence;
pub mod solver;
pub mod subset;
pub mod tolerances;

pub use breakdown::{
    bias_location, bias_scatter, breakdown_sweep, contaminate, equivariance_check,
    equivariance_trial, fit_bounds, BiasRecord, BreakdownEstimate, ContaminationSpec,
    EquivarianceReport, Placement, SweepOutcome, SweepSettings,
};
pub use dataset::{
    breakdown_bound, check_general_position, default_h, BreakdownBound, Dataset,
    GeneralPositionReport, SubsetSize,
};
pub use error::{PcsError, Result};
pub use geometry::{
    enumerate_directions, sample_directions, solve_direction, Direction, DirectionSet,
};
pub use incongruence::{
    detect_exact_fit, h_neighborhood, incongruence_along, incongruence_index, DistanceProfile,
    IncongruenceReport,
};
pub use solver::{
    estimate, robust_distances, solve_exact, solve_randomized, FitReport, PcsFit, SolveMode,
    SolverConfig,
};
pub use subset::HSubset;
pub use tolerances::{binomial, Caps, Tolerances};
