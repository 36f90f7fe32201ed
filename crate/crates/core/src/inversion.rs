//! Inverse problem: empirical moments of a magnetization sample and the
//! closed-form maps from `(m, χ)` back to the couplings and fields.
//!
//! Maximum likelihood for these exponential-family models reduces to
//! matching the first and second sample moments of the group
//! magnetizations, so estimation is "empirical moments, then invert".
//! Moments are accumulated on the integer statistics `x_l = 2c_l − N_l`
//! in 128-bit arithmetic, so sums and the covariance numerator are exact.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{FractionVector, MagnetizationSample};
use crate::numeric::{atanh, mean, sample_std};

/// Diagonal susceptibilities at or below this are degenerate.
pub const MIN_SUSCEPTIBILITY: f64 = 1e-14;

/// Number of free parameters of the k-species model: `k(k+1)/2` couplings
/// plus `k` fields.
pub const fn degrees_of_freedom(k: usize) -> usize {
    k * (k + 3) / 2
}

/// Sample moments `m_exp`, `χ_exp` and `P_exp = diag(1 − m_exp²)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub m_exp: Vec<f64>,
    pub chi_exp: Matrix,
    pub p_exp: Vec<f64>,
}

/// Inferred parameters plus conditioning diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inversion {
    pub j_exp: Matrix,
    pub h_exp: Vec<f64>,
    /// Largest `|J_ls − J_sl|` before symmetrization.
    pub asymmetry: f64,
    /// `‖χ_exp‖₁ ‖χ_exp⁻¹‖₁`.
    pub chi_condition: f64,
}

/// Sample moments for one species: `(m_exp, χ_exp)`.
pub fn cw_moments_from_sample(sample: &MagnetizationSample, n_spins: usize) -> Result<(f64, f64)> {
    if sample.species() != 1 {
        return Err(Error::InvalidSample(format!(
            "expected a one-species sample, got {} species",
            sample.species()
        )));
    }
    let moments = ms_moments_from_sample(sample, &[n_spins])?;
    Ok((moments.m_exp[0], moments.chi_exp[(0, 0)]))
}

/// `m_l,exp = (1/M) Σ m_l` and `χ_ls,exp = N_s((1/M) Σ m_l m_s − m_l,exp m_s,exp)`.
pub fn ms_moments_from_sample(sample: &MagnetizationSample, sizes: &[usize]) -> Result<EmpiricalMoments> {
    if sample.group_sizes() != sizes {
        return Err(Error::InvalidSample(format!(
            "sample group sizes {:?} do not match {:?}",
            sample.group_sizes(),
            sizes
        )));
    }
    let k = sizes.len();
    let draws = sample.len();
    let mut s1 = vec![0i128; k];
    let mut s2 = vec![0i128; k * k];
    let mut x = vec![0i128; k];
    for i in 0..draws {
        for (l, (&c, &n)) in sample.counts(i).iter().zip(sizes).enumerate() {
            x[l] = 2 * c as i128 - n as i128;
            s1[l] += x[l];
        }
        for l in 0..k {
            for s in l..k {
                s2[l * k + s] += x[l] * x[s];
            }
        }
    }
    let m = draws as i128;
    let m_exp: Vec<f64> = (0..k).map(|l| s1[l] as f64 / (m * sizes[l] as i128) as f64).collect();
    let chi_exp = Matrix::from_fn(k, |l, s| {
        let (a, b) = if l <= s { (l, s) } else { (s, l) };
        let numerator = m * s2[a * k + b] - s1[l] * s1[s];
        numerator as f64 / ((m * m) as f64 * sizes[l] as f64)
    });
    let p_exp = m_exp.iter().map(|v| 1.0 - v * v).collect();
    Ok(EmpiricalMoments { m_exp, chi_exp, p_exp })
}

fn check_magnetization(m: f64, label: &str) -> Result<()> {
    if !m.is_finite() || m.abs() >= 1.0 {
        return Err(Error::DegenerateMagnetization(format!("|{label}| = {} >= 1", m.abs())));
    }
    Ok(())
}

/// `J = 1/(1 − m²) − 1/χ`, `h = atanh(m) − J m`.
pub fn cw_invert(m_exp: f64, chi_exp: f64) -> Result<(f64, f64)> {
    check_magnetization(m_exp, "m_exp")?;
    if !(chi_exp.is_finite() && chi_exp >= MIN_SUSCEPTIBILITY) {
        return Err(Error::DegenerateSusceptibility(format!("chi_exp = {chi_exp:e}")));
    }
    let j = 1.0 / (1.0 - m_exp * m_exp) - 1.0 / chi_exp;
    let h = atanh(m_exp) - j * m_exp;
    Ok((j, h))
}

/// `J = (P⁻¹ − χ⁻¹) D_α⁻¹` (then symmetrized) and
/// `h_l = atanh(m_l) − Σ_s α_s J_ls m_s`.
pub fn ms_invert(m_exp: &[f64], chi_exp: &Matrix, alpha: &FractionVector) -> Result<Inversion> {
    let k = m_exp.len();
    if chi_exp.dim() != k || alpha.len() != k {
        return Err(Error::InvalidParams(format!(
            "dimension mismatch: {k} magnetizations, {0}x{0} susceptibility, {1} fractions",
            chi_exp.dim(),
            alpha.len()
        )));
    }
    for (l, &m) in m_exp.iter().enumerate() {
        check_magnetization(m, &format!("m_{}", l + 1))?;
    }
    for l in 0..k {
        let d = chi_exp[(l, l)];
        if !(d.is_finite() && d >= MIN_SUSCEPTIBILITY) {
            return Err(Error::DegenerateSusceptibility(format!(
                "chi_exp[{0}][{0}] = {d:e}",
                l + 1
            )));
        }
    }
    let chi_inv = chi_exp
        .inverse()
        .map_err(|e| Error::DegenerateSusceptibility(format!("chi_exp is singular ({e})")))?;
    let a = alpha.as_slice();
    let raw = Matrix::from_fn(k, |l, s| {
        let p_inv = if l == s { 1.0 / (1.0 - m_exp[l] * m_exp[l]) } else { 0.0 };
        (p_inv - chi_inv[(l, s)]) / a[s]
    });
    let asymmetry = raw.asymmetry();
    let j_exp = raw.symmetrized();
    let h_exp = (0..k)
        .map(|l| atanh(m_exp[l]) - (0..k).map(|s| a[s] * j_exp[(l, s)] * m_exp[s]).sum::<f64>())
        .collect();
    Ok(Inversion {
        j_exp,
        h_exp,
        asymmetry,
        chi_condition: chi_exp.norm_1() * chi_inv.norm_1(),
    })
}

/// Estimated quantities of one sample, or replicate statistics of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSet {
    pub m_exp: Vec<f64>,
    pub chi_exp: Matrix,
    #[serde(rename = "J_exp")]
    pub j_exp: Matrix,
    pub h_exp: Vec<f64>,
}

impl ParameterSet {
    fn flatten(&self) -> Vec<f64> {
        let mut v = self.m_exp.clone();
        v.extend_from_slice(self.chi_exp.as_slice());
        v.extend_from_slice(self.j_exp.as_slice());
        v.extend_from_slice(&self.h_exp);
        v
    }

    fn unflatten(k: usize, v: &[f64]) -> Self {
        let (m, rest) = v.split_at(k);
        let (chi, rest) = rest.split_at(k * k);
        let (j, h) = rest.split_at(k * k);
        Self {
            m_exp: m.to_vec(),
            chi_exp: Matrix::from_fn(k, |a, b| chi[a * k + b]),
            j_exp: Matrix::from_fn(k, |a, b| j[a * k + b]),
            h_exp: h.to_vec(),
        }
    }
}

/// Full estimate from one M-sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(flatten)]
    pub values: ParameterSet,
    pub asymmetry: f64,
    pub chi_condition: f64,
}

/// Moments and inversion of one sample.
pub fn estimate(sample: &MagnetizationSample) -> Result<Estimate> {
    let sizes = sample.group_sizes().to_vec();
    let moments = ms_moments_from_sample(sample, &sizes)?;
    let alpha = FractionVector::from_sizes(&sizes)?;
    let inv = ms_invert(&moments.m_exp, &moments.chi_exp, &alpha)?;
    Ok(Estimate {
        values: ParameterSet {
            m_exp: moments.m_exp,
            chi_exp: moments.chi_exp,
            j_exp: inv.j_exp,
            h_exp: inv.h_exp,
        },
        asymmetry: inv.asymmetry,
        chi_condition: inv.chi_condition,
    })
}

/// Estimates over R replicates with their mean and unbiased standard
/// deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub replicates: usize,
    pub mean: ParameterSet,
    /// `None` for a single replicate.
    pub std: Option<ParameterSet>,
    pub max_asymmetry: f64,
    pub max_chi_condition: f64,
    pub per_replicate: Vec<Estimate>,
}

impl EstimationResult {
    pub fn from_replicates(per_replicate: Vec<Estimate>) -> Result<Self> {
        let first = per_replicate
            .first()
            .ok_or_else(|| Error::InvalidParams("no replicates to summarize".into()))?;
        let k = first.values.m_exp.len();
        let flat: Vec<Vec<f64>> = per_replicate.iter().map(|e| e.values.flatten()).collect();
        let width = flat[0].len();
        let column = |i: usize| flat.iter().map(|row| row[i]).collect::<Vec<_>>();
        let means: Vec<f64> = (0..width).map(|i| mean(&column(i))).collect();
        let stds: Option<Vec<f64>> = (0..width).map(|i| sample_std(&column(i))).collect();
        Ok(Self {
            replicates: per_replicate.len(),
            mean: ParameterSet::unflatten(k, &means),
            std: stds.map(|s| ParameterSet::unflatten(k, &s)),
            max_asymmetry: per_replicate.iter().map(|e| e.asymmetry).fold(0.0, f64::max),
            max_chi_condition: per_replicate.iter().map(|e| e.chi_condition).fold(0.0, f64::max),
            per_replicate,
        })
    }
}
