//! Forward and inverse problems for single- and multi-species mean-field
//! spin models.
//!
//! * [`exact`]: exact finite-size Gibbs distribution over the magnetization
//!   spectrum, its moments, and a brute-force oracle for small systems.
//! * [`meanfield`]: self-consistency fixed points, stability and the
//!   limiting susceptibility.
//! * [`sampling`]: reproducible i.i.d. magnetization draws.
//! * [`inversion`]: sample moments and the closed-form estimators of the
//!   couplings and fields.
//! * [`experiments`]: finite-size and sample-size scaling studies and
//!   parameter-recovery sweeps.
//! * [`cli`]: configuration parsing and report emission for the `mfspin`
//!   binary.

pub mod cli;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod format;
pub mod inversion;
pub mod linalg;
pub mod meanfield;
pub mod model;
pub mod numeric;
pub mod sampling;

pub use error::{Error, ErrorKind, Result};
pub use exact::{
    brute_force_moments, cw_distribution, dominant_well, exact_moments, ms_distribution, restrict_to_well,
    ExactMoments, MagnetizationDistribution,
};
pub use inversion::{cw_invert, cw_moments_from_sample, estimate, ms_invert, ms_moments_from_sample, EstimationResult};
pub use linalg::Matrix;
pub use meanfield::{chi_cw, chi_ms, solve_cw, solve_ms, MeanFieldSolution, SusceptibilityMatrix};
pub use model::{CwParams, FractionVector, MagnetizationSample, Model, MsParams, Validate};
pub use sampling::{replicate_seeds, sample, SamplerConfig};
