//! Finite-size and sample-size scaling studies.

use rayon::prelude::*;
use serde::Serialize;

use super::powerlaw::{powerlaw_fit, PowerLawFit};
use crate::error::{Error, Result};
use crate::exact::{cw_distribution, exact_moments};
use crate::inversion::cw_moments_from_sample;
use crate::meanfield::{chi_cw, solve_cw, unique_stable};
use crate::model::CwParams;
use crate::numeric::sample_std;
use crate::sampling::{mix, replicate_seeds, Sampler};

/// Finite-size deviations at or below this level are round-off.
pub const EXACT_ZERO_TOLERANCE: f64 = 1e-12;

/// A fitted power law, or the degenerate case where the finite-size
/// deviation vanishes identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FitOutcome {
    Fitted(PowerLawFit),
    ExactZero,
}

impl FitOutcome {
    pub fn fitted(&self) -> Option<&PowerLawFit> {
        match self {
            FitOutcome::Fitted(f) => Some(f),
            FitOutcome::ExactZero => None,
        }
    }

    fn from_errors(xs: &[f64], errs: &[f64]) -> Result<Self> {
        let small = errs.iter().filter(|e| **e <= EXACT_ZERO_TOLERANCE).count();
        if small == errs.len() {
            return Ok(FitOutcome::ExactZero);
        }
        if small > 0 {
            return Err(Error::Domain(format!(
                "{small} of {} finite-size deviations are at round-off level",
                errs.len()
            )));
        }
        powerlaw_fit(xs, errs).map(FitOutcome::Fitted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeScalingRow {
    pub n: usize,
    pub m_n: f64,
    pub chi_n: f64,
    pub abs_err_m: f64,
    pub abs_err_chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeScalingStudy {
    pub coupling: f64,
    pub field: f64,
    pub m_limit: f64,
    pub chi_limit: f64,
    pub rows: Vec<SizeScalingRow>,
    /// `|m_N − m| ≈ a N^b`.
    pub m_fit: FitOutcome,
    /// `|χ_N − χ| ≈ c N^d`.
    pub chi_fit: FitOutcome,
}

/// Exact `m_N`, `χ_N` over `sizes` against their mean-field limits.
pub fn size_scaling_study(coupling: f64, field: f64, sizes: &[usize]) -> Result<SizeScalingStudy> {
    if sizes.is_empty() {
        return Err(Error::Arity("no system sizes given".into()));
    }
    let solutions = solve_cw(coupling, field)?;
    let limit = unique_stable(&solutions)?;
    let m_limit = limit.scalar();
    let chi_limit = chi_cw(coupling, limit)?.scalar();
    let rows = sizes
        .par_iter()
        .map(|&n| {
            let dist = cw_distribution(&CwParams::new(n, coupling, field)?)?;
            let (m_n, chi_n) = exact_moments(&dist).scalar();
            Ok(SizeScalingRow {
                n,
                m_n,
                chi_n,
                abs_err_m: (m_n - m_limit).abs(),
                abs_err_chi: (chi_n - chi_limit).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let em: Vec<f64> = rows.iter().map(|r| r.abs_err_m).collect();
    let ec: Vec<f64> = rows.iter().map(|r| r.abs_err_chi).collect();
    Ok(SizeScalingStudy {
        coupling,
        field,
        m_limit,
        chi_limit,
        m_fit: FitOutcome::from_errors(&xs, &em)?,
        chi_fit: FitOutcome::from_errors(&xs, &ec)?,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleScalingRow {
    pub sample_count: usize,
    pub std_m: f64,
    pub std_chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleScalingStudy {
    pub params: CwParams,
    pub replicates: usize,
    pub base_seed: u64,
    pub rows: Vec<SampleScalingRow>,
    /// `std(m_exp) ≈ A M^exponent`; the decay exponent is `−exponent`.
    pub m_fit: PowerLawFit,
    pub chi_fit: PowerLawFit,
}

/// Replicate spread of `m_exp` and `χ_exp` as a function of `M`.
///
/// Sample size `i` in `sample_counts` uses the replicate seeds of
/// `mix(base_seed, i)`.
pub fn sample_scaling_study(
    params: &CwParams,
    sample_counts: &[usize],
    replicates: usize,
    base_seed: u64,
) -> Result<SampleScalingStudy> {
    if replicates < 2 {
        return Err(Error::InvalidParams(format!(
            "replicate standard deviation needs R >= 2, got {replicates}"
        )));
    }
    let dist = cw_distribution(params)?;
    let sampler = Sampler::new(&dist)?;
    let jobs: Vec<(usize, u64)> = sample_counts
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            Ok(replicate_seeds(mix(base_seed, i as u64), replicates)?
                .into_iter()
                .map(move |s| (m, s)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let moments = jobs
        .par_iter()
        .map(|&(m, seed)| cw_moments_from_sample(&sampler.draw(m, seed)?, params.n_spins))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SampleScalingRow> = sample_counts
        .iter()
        .zip(moments.chunks(replicates))
        .map(|(&m, chunk)| {
            let ms: Vec<f64> = chunk.iter().map(|x| x.0).collect();
            let cs: Vec<f64> = chunk.iter().map(|x| x.1).collect();
            SampleScalingRow {
                sample_count: m,
                std_m: sample_std(&ms).unwrap_or(0.0),
                std_chi: sample_std(&cs).unwrap_or(0.0),
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.sample_count as f64).collect();
    let sm: Vec<f64> = rows.iter().map(|r| r.std_m).collect();
    let sc: Vec<f64> = rows.iter().map(|r| r.std_chi).collect();
    Ok(SampleScalingStudy {
        params: params.clone(),
        replicates,
        base_seed,
        m_fit: powerlaw_fit(&xs, &sm)?,
        chi_fit: powerlaw_fit(&xs, &sc)?,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_spins_are_an_exact_zero() {
        let s = size_scaling_study(0.0, 0.1, &[10, 100, 1000]).unwrap();
        assert_eq!(s.m_fit, FitOutcome::ExactZero);
        assert_eq!(s.chi_fit, FitOutcome::ExactZero);
        assert!(s.rows.iter().all(|r| r.abs_err_m <= EXACT_ZERO_TOLERANCE));
    }

    #[test]
    fn weak_coupling_inverse_scaling() {
        let sizes: Vec<usize> = (1..=10).map(|i| 500 * i).collect();
        let s = size_scaling_study(0.6, 0.1, &sizes).unwrap();
        let b = s.m_fit.fitted().unwrap().exponent;
        let d = s.chi_fit.fitted().unwrap().exponent;
        assert!((-1.05..=-0.95).contains(&b), "{b}");
        assert!((-1.05..=-0.95).contains(&d), "{d}");
        assert!((b - d).abs() < 0.05);
    }

    #[test]
    fn multiple_wells_rejected() {
        assert!(size_scaling_study(1.5, 0.0, &[10, 20, 30]).is_err());
    }

    #[test]
    fn single_replicate_rejected() {
        let p = CwParams::new(100, 0.6, 0.1).unwrap();
        assert!(matches!(
            sample_scaling_study(&p, &[100, 1000, 10000], 1, 0),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn sample_study_is_deterministic_and_decays() {
        let p = CwParams::new(1000, 0.6, 0.1).unwrap();
        let a = sample_scaling_study(&p, &[100, 1000, 10000], 8, 5).unwrap();
        let b = sample_scaling_study(&p, &[100, 1000, 10000], 8, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.m_fit.exponent < -0.2 && a.m_fit.exponent > -0.8, "{:?}", a.m_fit);
    }
}
