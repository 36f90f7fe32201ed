//! Parameter-recovery sweeps: draw replicate samples from the exact
//! distribution, invert each, and compare with the truth.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{cw_distribution, dominant_well, ms_distribution, restrict_to_well, MagnetizationDistribution};
use crate::inversion::{estimate, EstimationResult};
use crate::linalg::Matrix;
use crate::meanfield::{solve_cw, unique_stable};
use crate::model::{CwParams, Model, MsParams};
use crate::sampling::{mix, replicate_seeds, Sampler};

/// Percentage errors are only taken over true entries at least this large.
pub const PCT_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCase {
    pub case_id: usize,
    pub model: Model,
    pub result: EstimationResult,
    /// Frobenius distance between mean `J_exp` and `J`.
    pub j_distance: f64,
    /// Euclidean distance between mean `h_exp` and `h`.
    pub h_distance: f64,
    /// Largest of `max_pct_error_j` and `max_pct_error_h`.
    pub max_pct_error: Option<f64>,
    pub max_pct_error_j: Option<f64>,
    pub max_pct_error_h: Option<f64>,
}

fn max_pct(estimated: &[f64], truth: &[f64]) -> Option<f64> {
    estimated
        .iter()
        .zip(truth)
        .filter(|(_, t)| t.abs() >= PCT_ERROR_FLOOR)
        .map(|(e, t)| 100.0 * (e - t).abs() / t.abs())
        .reduce(f64::max)
}

impl SweepCase {
    fn new(case_id: usize, model: Model, result: EstimationResult) -> Self {
        let truth = model.to_multi();
        let j_exp = &result.mean.j_exp;
        let h_exp = &result.mean.h_exp;
        let j_distance = j_exp.sub(&truth.coupling).frobenius();
        let h_distance = h_exp
            .iter()
            .zip(&truth.field)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let max_pct_error_j = max_pct(j_exp.as_slice(), truth.coupling.as_slice());
        let max_pct_error_h = max_pct(h_exp, &truth.field);
        let max_pct_error = match (max_pct_error_j, max_pct_error_h) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Self {
            case_id,
            model,
            result,
            j_distance,
            h_distance,
            max_pct_error,
            max_pct_error_j,
            max_pct_error_h,
        }
    }

    pub fn true_coupling(&self) -> Matrix {
        self.model.to_multi().coupling
    }

    pub fn true_field(&self) -> Vec<f64> {
        self.model.to_multi().field
    }
}

/// `dist` conditioned on its most probable basin when the model has several
/// stable solutions, `None` when it has one.
pub fn dominant_restriction(dist: &MagnetizationDistribution) -> Result<Option<MagnetizationDistribution>> {
    dominant_well(dist)?
        .map(|well| restrict_to_well(dist, &well))
        .transpose()
}

/// Estimates from `replicates` independent `M`-samples of `dist`, seeded
/// from `replicate_seeds(seed, replicates)`.
///
/// When the model has several stable solutions the draws are restricted to
/// the basin carrying the most probability.
pub fn replicate_estimates(
    dist: &MagnetizationDistribution,
    sample_count: usize,
    replicates: usize,
    seed: u64,
) -> Result<EstimationResult> {
    let seeds = replicate_seeds(seed, replicates)?;
    let restricted = dominant_restriction(dist)?;
    let sampler = Sampler::new(restricted.as_ref().unwrap_or(dist))?;
    let estimates = seeds
        .par_iter()
        .map(|&s| estimate(&sampler.draw(sample_count, s)?))
        .collect::<Result<Vec<_>>>()?;
    EstimationResult::from_replicates(estimates)
}

/// Curie-Weiss recovery over a grid of couplings at fixed field. Grid
/// point `i` (case id `i + 1`) uses base seed `mix(base_seed, i)`.
pub fn cw_recovery_sweep(
    couplings: &[f64],
    field: f64,
    n_spins: usize,
    sample_count: usize,
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<SweepCase>> {
    let params = couplings
        .iter()
        .map(|&j| {
            let p = CwParams::new(n_spins, j, field)?;
            unique_stable(&solve_cw(j, field)?).map_err(|e| {
                Error::InvalidParams(format!(
                    "J = {j}, h = {field} is outside the unique-solution regime: {e}"
                ))
            })?;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    params
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let dist = cw_distribution(&p)?;
            let result = replicate_estimates(&dist, sample_count, replicates, mix(base_seed, i as u64))?;
            Ok(SweepCase::new(i + 1, p.into(), result))
        })
        .collect()
}

/// Multi-species recovery over a list of cases. Case `i` (case id `i + 1`)
/// uses base seed `mix(base_seed, i)`.
pub fn ms_case_sweep(
    cases: &[MsParams],
    sample_count: usize,
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<SweepCase>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let dist = ms_distribution(p)?;
            let result = replicate_estimates(&dist, sample_count, replicates, mix(base_seed, i as u64))?;
            Ok(SweepCase::new(i + 1, p.clone().into(), result))
        })
        .collect()
}
