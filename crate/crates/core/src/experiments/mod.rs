//! The numerical studies: finite-size scaling, estimator-noise scaling and
//! parameter-recovery sweeps.

mod cases;
mod powerlaw;
mod studies;
mod sweeps;

pub use cases::{canonical_cases, draw_cases, CASE_SEED};
pub use powerlaw::{powerlaw_fit, PowerLawFit};
pub use studies::{
    sample_scaling_study, size_scaling_study, FitOutcome, SampleScalingRow, SampleScalingStudy, SizeScalingRow,
    SizeScalingStudy, EXACT_ZERO_TOLERANCE,
};
pub use sweeps::{
    cw_recovery_sweep, dominant_restriction, ms_case_sweep, replicate_estimates, SweepCase, PCT_ERROR_FLOOR,
};
