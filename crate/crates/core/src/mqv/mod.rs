//! Mean quadratic variation `V_β(t; μ) = t^{-(d+β)} ∫ |μ(B_t(x))|² dx`:
//! estimators, lattice classification of the ratios and periodicity probes.

pub mod estimate;
pub mod lattice;
pub mod periodicity;
pub mod volume;

pub use estimate::{
    estimate_mqv_f, estimate_mqv_grid, estimate_mqv_mc, estimate_mqv_ratio, ConstantEstimator,
    EstimatorKind, GridEstimator, MQVEstimate, McConfig, McEstimator, MqvEstimator, RatioEstimate,
};
pub use lattice::{lattice_classify, Classification, LatticeReport, DEFAULT_LATTICE_TOL};
pub use periodicity::{geometric_grid, periodicity_probe, PeriodicityReport, ProbePoint};
pub use volume::{ball_intersection_volume, unit_ball_volume};
