//! Exact finite-size equilibrium over the magnetization spectrum.
//!
//! The Gibbs measure of a block mean-field Hamiltonian depends on a
//! configuration only through its group magnetizations, so the
//! distribution lives on the grid of up-spin counts `(c_1, …, c_k)` with
//! multiplicity `∏ C(N_l, c_l)`. Weights are kept in the log domain and
//! normalized with a max shift.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::num;
use crate::linalg::Matrix;
use crate::meanfield::{max_dist, MeanFieldMap, MeanFieldSolution, DEDUP_TOLERANCE};
use crate::model::{lattice_magnetization, CwParams, Model, MsParams, Validate};
use crate::numeric::{compensated_sum, log_binomial, log_factorials, CompensatedSum};

/// Default upper bound on `∏ (N_l + 1)`.
pub const DEFAULT_CELL_BUDGET: usize = 100_000_000;
/// Largest total spin count accepted by [`brute_force_moments`].
pub const BRUTE_FORCE_MAX_SPINS: usize = 20;

/// Distance to a stable solution at which a basin walk stops.
const WELL_CAPTURE: f64 = 1e-6;
/// Update size below which a basin walk is considered stuck on a
/// non-attracting fixed point.
const WELL_STALL: f64 = 1e-13;
const WELL_BUDGET: usize = 100_000;

/// Normalized probability table over the magnetization grid, row-major in
/// the count vector (`c_1` varies slowest).
#[derive(Debug, Clone)]
pub struct MagnetizationDistribution {
    model: Model,
    group_sizes: Vec<usize>,
    strides: Vec<usize>,
    log_weights: Vec<f64>,
    probabilities: Vec<f64>,
}

/// First and second moments plus the finite-size susceptibility
/// `χ_N[l][s] = N_s (ω(m_l m_s) − ω(m_l) ω(m_s))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMoments {
    pub mean: Vec<f64>,
    pub second: Matrix,
    pub finite_size_chi: Matrix,
}

impl ExactMoments {
    /// `(m_N, χ_N)` for one species.
    pub fn scalar(&self) -> (f64, f64) {
        (self.mean[0], self.finite_size_chi[(0, 0)])
    }
}

impl MagnetizationDistribution {
    fn from_log_weights(model: Model, group_sizes: Vec<usize>, log_weights: Vec<f64>) -> Self {
        let strides = strides_for(&group_sizes);
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probabilities: Vec<f64> = log_weights.par_iter().map(|lw| (lw - max).exp()).collect();
        let total = compensated_sum(probabilities.iter().copied());
        probabilities.par_iter_mut().for_each(|p| *p /= total);
        Self {
            model,
            group_sizes,
            strides,
            log_weights,
            probabilities,
        }
    }

    /// Hand-built distribution, mostly for tests and for importing external
    /// tables. `probabilities` must be non-negative and sum to 1 within 1e-12.
    pub fn from_probabilities(model: Model, probabilities: Vec<f64>) -> Result<Self> {
        let model = model.validate()?;
        let group_sizes = model.group_sizes();
        let cells = cell_count(&group_sizes).ok_or_else(|| Error::Resource("grid size overflows".into()))?;
        if probabilities.len() != cells {
            return Err(Error::InvalidParams(format!(
                "{} probabilities for a grid of {cells} cells",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParams(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total = compensated_sum(probabilities.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            strides: strides_for(&group_sizes),
            log_weights: probabilities.iter().map(|p| p.ln()).collect(),
            model,
            group_sizes,
            probabilities,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn species(&self) -> usize {
        self.group_sizes.len()
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn counts_of(&self, cell: usize) -> Vec<u32> {
        let mut rest = cell;
        self.strides
            .iter()
            .map(|&stride| {
                let c = rest / stride;
                rest %= stride;
                c as u32
            })
            .collect()
    }

    pub fn magnetization_of(&self, cell: usize) -> Vec<f64> {
        self.counts_of(cell)
            .into_iter()
            .zip(&self.group_sizes)
            .map(|(c, &n)| lattice_magnetization(c, n))
            .collect()
    }

    pub fn cell_of(&self, counts: &[u32]) -> usize {
        counts.iter().zip(&self.strides).map(|(&c, &s)| c as usize * s).sum()
    }

    /// CSV with columns `count_1..count_k, magnetization_1..magnetization_k,
    /// probability`, rows in lexicographic count order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.species();
        let mut header: Vec<String> = (1..=k).map(|l| format!("count_{l}")).collect();
        header.extend((1..=k).map(|l| format!("magnetization_{l}")));
        header.push("probability".into());
        writeln!(out, "{}", header.join(","))?;
        for cell in 0..self.len() {
            let counts = self.counts_of(cell);
            let mut row: Vec<String> = counts.iter().map(u32::to_string).collect();
            row.extend(self.magnetization_of(cell).into_iter().map(num));
            row.push(num(self.probabilities[cell]));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn strides_for(group_sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; group_sizes.len()];
    for l in (0..group_sizes.len().saturating_sub(1)).rev() {
        strides[l] = strides[l + 1] * (group_sizes[l + 1] + 1);
    }
    strides
}

fn cell_count(group_sizes: &[usize]) -> Option<usize> {
    group_sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n + 1))
}

/// Distribution of the single-population model over its `N + 1`
/// magnetization values.
pub fn cw_distribution(params: &CwParams) -> Result<MagnetizationDistribution> {
    let params = params.clone().validate()?;
    let n = params.n_spins;
    let lf = log_factorials(n);
    let (j, h) = (params.coupling, params.field);
    let log_weights: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|c| {
            // N (J/2 m² + h m) with N m = 2c − N kept integral.
            let x = 2.0 * c as f64 - n as f64;
            log_binomial(&lf, n, c) + j * x * x / (2.0 * n as f64) + h * x
        })
        .collect();
    Ok(MagnetizationDistribution::from_log_weights(
        Model::CurieWeiss(params),
        vec![n],
        log_weights,
    ))
}

/// Distribution of the multi-species model, with the default cell budget.
pub fn ms_distribution(params: &MsParams) -> Result<MagnetizationDistribution> {
    ms_distribution_with_budget(params, DEFAULT_CELL_BUDGET)
}

pub fn ms_distribution_with_budget(params: &MsParams, cell_budget: usize) -> Result<MagnetizationDistribution> {
    let params = params.clone().validate()?;
    let sizes = params.group_sizes.clone();
    let k = sizes.len();
    let cells = cell_count(&sizes).filter(|&c| c <= cell_budget).ok_or_else(|| {
        Error::Resource(format!(
            "grid of {:?} needs more than the budget of {cell_budget} cells",
            sizes.iter().map(|n| n + 1).collect::<Vec<_>>()
        ))
    })?;
    let total = params.total_spins() as f64;
    let lf: Vec<Vec<f64>> = sizes.iter().map(|&n| log_factorials(n)).collect();
    let strides = strides_for(&sizes);
    let coupling = &params.coupling;
    let field = &params.field;

    let mut log_weights = vec![0.0; cells];
    log_weights.par_iter_mut().enumerate().for_each_init(
        || vec![0.0f64; k],
        |x, (cell, lw)| {
            let mut rest = cell;
            let mut entropy = 0.0;
            for l in 0..k {
                let c = rest / strides[l];
                rest %= strides[l];
                // N α_l m_l = 2 c_l − N_l
                x[l] = 2.0 * c as f64 - sizes[l] as f64;
                entropy += log_binomial(&lf[l], sizes[l], c);
            }
            let mut quad = 0.0;
            let mut lin = 0.0;
            for l in 0..k {
                for s in 0..k {
                    quad += coupling[(l, s)] * x[l] * x[s];
                }
                lin += field[l] * x[l];
            }
            *lw = entropy + quad / (2.0 * total) + lin;
        },
    );
    Ok(MagnetizationDistribution::from_log_weights(
        Model::MultiSpecies(params),
        sizes,
        log_weights,
    ))
}

/// Exact moments of a normalized distribution, two-pass with compensated
/// accumulation.
pub fn exact_moments(dist: &MagnetizationDistribution) -> ExactMoments {
    let k = dist.species();
    let p = dist.probabilities();
    let sizes = dist.group_sizes();
    let mags: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&n| (0..=n as u32).map(|c| lattice_magnetization(c, n)).collect())
        .collect();
    let counts_iter = |cell: usize| dist.counts_of(cell);

    let mut mean_acc = vec![CompensatedSum::new(); k];
    for (cell, &pc) in p.iter().enumerate() {
        if pc == 0.0 {
            continue;
        }
        for (l, c) in counts_iter(cell).into_iter().enumerate() {
            mean_acc[l].add(pc * mags[l][c as usize]);
        }
    }
    let mean: Vec<f64> = mean_acc.iter().map(CompensatedSum::value).collect();

    let mut cov_acc = vec![CompensatedSum::new(); k * k];
    let mut dev = vec![0.0; k];
    for (cell, &pc) in p.iter().enumerate() {
        if pc == 0.0 {
            continue;
        }
        for (l, c) in counts_iter(cell).into_iter().enumerate() {
            dev[l] = mags[l][c as usize] - mean[l];
        }
        for l in 0..k {
            for s in l..k {
                cov_acc[l * k + s].add(pc * dev[l] * dev[s]);
            }
        }
    }
    let cov = Matrix::from_fn(k, |l, s| {
        let (a, b) = if l <= s { (l, s) } else { (s, l) };
        cov_acc[a * k + b].value()
    });
    moments_from_covariance(mean, &cov, sizes)
}

fn moments_from_covariance(mean: Vec<f64>, cov: &Matrix, sizes: &[usize]) -> ExactMoments {
    let k = mean.len();
    let second = Matrix::from_fn(k, |l, s| cov[(l, s)] + mean[l] * mean[s]);
    let finite_size_chi = Matrix::from_fn(k, |l, s| sizes[s] as f64 * cov[(l, s)]);
    ExactMoments {
        mean,
        second,
        finite_size_chi,
    }
}

/// Conditions `dist` on the basin of attraction of `solution`.
///
/// Every support point is walked along the damped mean-field map until it
/// reaches a stable fixed point; points stuck on a non-attracting fixed point
/// go to the nearest stable one, ties to the lexicographically largest. With
/// a single stable solution the distribution is returned unchanged.
pub fn restrict_to_well(
    dist: &MagnetizationDistribution,
    solution: &MeanFieldSolution,
) -> Result<MagnetizationDistribution> {
    let params = dist.model().to_multi();
    let map = MeanFieldMap::new(&params.fractions(), &params.coupling, &params.field)?;
    if !solution.stable {
        return Err(Error::Numerical(
            "well restriction needs a stable mean-field solution".into(),
        ));
    }
    if map.residual(&solution.magnetization) >= crate::meanfield::RESIDUAL_TOLERANCE {
        return Err(Error::Numerical(
            "solution is not a fixed point of this model's mean-field map".into(),
        ));
    }
    let stable: Vec<Vec<f64>> = map
        .solve()?
        .into_iter()
        .filter(|s| s.stable)
        .map(|s| s.magnetization)
        .collect();
    let target = stable
        .iter()
        .position(|m| max_dist(m, &solution.magnetization) < DEDUP_TOLERANCE)
        .ok_or_else(|| Error::Numerical("solution not among the model's stable fixed points".into()))?;
    if stable.len() == 1 {
        return Ok(dist.clone());
    }

    let assignment: Vec<usize> = (0..dist.len())
        .into_par_iter()
        .map(|cell| basin_of(&map, &stable, dist.magnetization_of(cell)))
        .collect();
    if !assignment.contains(&target) {
        return Err(Error::DegenerateRestriction(
            "no support point is assigned to the requested well".into(),
        ));
    }
    let mut probabilities: Vec<f64> = dist
        .probabilities()
        .iter()
        .zip(&assignment)
        .map(|(&p, &a)| if a == target { p } else { 0.0 })
        .collect();
    let total = compensated_sum(probabilities.iter().copied());
    if total <= 0.0 {
        return Err(Error::DegenerateRestriction(
            "the requested well carries zero probability".into(),
        ));
    }
    probabilities.iter_mut().for_each(|p| *p /= total);
    let log_weights = dist
        .log_weights()
        .iter()
        .zip(&assignment)
        .map(|(&lw, &a)| if a == target { lw } else { f64::NEG_INFINITY })
        .collect();
    Ok(MagnetizationDistribution {
        model: dist.model.clone(),
        group_sizes: dist.group_sizes.clone(),
        strides: dist.strides.clone(),
        log_weights,
        probabilities,
    })
}

/// The stable solution whose basin carries the most probability, or `None`
/// when the model has a single stable solution and no restriction is needed.
pub fn dominant_well(dist: &MagnetizationDistribution) -> Result<Option<MeanFieldSolution>> {
    let params = dist.model().to_multi();
    let map = MeanFieldMap::new(&params.fractions(), &params.coupling, &params.field)?;
    let stable: Vec<MeanFieldSolution> = map.solve()?.into_iter().filter(|s| s.stable).collect();
    if stable.len() <= 1 {
        return Ok(None);
    }
    let points: Vec<Vec<f64>> = stable.iter().map(|s| s.magnetization.clone()).collect();
    let assignment: Vec<usize> = (0..dist.len())
        .into_par_iter()
        .map(|cell| basin_of(&map, &points, dist.magnetization_of(cell)))
        .collect();
    let mut mass = vec![CompensatedSum::new(); stable.len()];
    for (&p, &a) in dist.probabilities().iter().zip(&assignment) {
        mass[a].add(p);
    }
    let mut best = 0;
    for i in 1..mass.len() {
        if mass[i].value() > mass[best].value() {
            best = i;
        }
    }
    Ok(Some(stable[best].clone()))
}

fn basin_of(map: &MeanFieldMap, stable: &[Vec<f64>], mut m: Vec<f64>) -> usize {
    for _ in 0..WELL_BUDGET {
        if let Some(i) = stable.iter().position(|s| max_dist(s, &m) < WELL_CAPTURE) {
            return i;
        }
        if map.damped_step(&mut m) < WELL_STALL {
            break;
        }
    }
    nearest(stable, &m)
}

fn nearest(stable: &[Vec<f64>], m: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, s) in stable.iter().enumerate() {
        let d = max_dist(s, m);
        // `stable` is sorted ascending, so `<=` hands ties to the larger one.
        if d <= best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Moments by summing `exp(−H)` over all `2^N` configurations, with the
/// Hamiltonian evaluated spin pair by spin pair. Spins are laid out group
/// after group.
pub fn brute_force_moments(model: &Model) -> Result<ExactMoments> {
    let params = model.to_multi().validate()?;
    let n = params.total_spins();
    if n > BRUTE_FORCE_MAX_SPINS {
        return Err(Error::Resource(format!(
            "brute force over {n} spins exceeds the limit of {BRUTE_FORCE_MAX_SPINS}"
        )));
    }
    let k = params.species();
    let group: Vec<usize> = params
        .group_sizes
        .iter()
        .enumerate()
        .flat_map(|(l, &size)| std::iter::repeat_n(l, size))
        .collect();

    let configs = 1usize << n;
    let mut neg_energy = Vec::with_capacity(configs);
    let mut group_mag = Vec::with_capacity(configs * k);
    let mut spins = vec![0.0f64; n];
    for bits in 0..configs {
        for (i, s) in spins.iter_mut().enumerate() {
            *s = if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
        let mut pair = 0.0;
        for i in 0..n {
            for j in 0..n {
                pair += params.coupling[(group[i], group[j])] * spins[i] * spins[j];
            }
        }
        let single: f64 = (0..n).map(|i| params.field[group[i]] * spins[i]).sum();
        neg_energy.push(pair / (2.0 * n as f64) + single);
        let mut sums = vec![0.0; k];
        for i in 0..n {
            sums[group[i]] += spins[i];
        }
        group_mag.extend(sums.iter().zip(&params.group_sizes).map(|(s, &n)| s / n as f64));
    }
    let max = neg_energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = neg_energy.iter().map(|e| (e - max).exp()).collect();
    let z: f64 = weights.iter().sum();

    let mut mean = vec![0.0; k];
    for (w, m) in weights.iter().zip(group_mag.chunks(k)) {
        for l in 0..k {
            mean[l] += w * m[l];
        }
    }
    mean.iter_mut().for_each(|x| *x /= z);
    let mut cov = Matrix::zeros(k);
    for (w, m) in weights.iter().zip(group_mag.chunks(k)) {
        for l in 0..k {
            for s in 0..k {
                cov[(l, s)] += w * (m[l] - mean[l]) * (m[s] - mean[s]);
            }
        }
    }
    let cov = Matrix::from_fn(k, |l, s| cov[(l, s)] / z);
    Ok(moments_from_covariance(mean, &cov, &params.group_sizes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::solve_cw;

    fn cw(n: usize, j: f64, h: f64) -> CwParams {
        CwParams::new(n, j, h).unwrap()
    }

    fn ms(sizes: Vec<usize>, rows: &[Vec<f64>], h: Vec<f64>) -> MsParams {
        MsParams::new(sizes, Matrix::from_rows(rows).unwrap(), h).unwrap()
    }

    #[test]
    fn single_spin_symmetric() {
        let d = cw_distribution(&cw(1, 0.6, 0.0)).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.probabilities()[0] - 0.5).abs() < 1e-15);
        assert!((d.probabilities()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_free_spins() {
        let d = cw_distribution(&cw(2, 0.0, 0.0)).unwrap();
        let p = d.probabilities();
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);
        assert!((p[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn two_spins_at_ln2_coupling() {
        // Brute force over the four configurations of two spins: -H = (J/4)(σ1+σ2)²,
        // so aligned pairs weigh e^J = 2 and the two mixed ones weigh 1 each.
        let j = 2f64.ln();
        let weights = [j.exp(), 1.0, 1.0, j.exp()];
        let z: f64 = weights.iter().sum();
        let oracle = [weights[0] / z, (weights[1] + weights[2]) / z, weights[3] / z];
        let d = cw_distribution(&cw(2, j, 0.0)).unwrap();
        for (p, o) in d.probabilities().iter().zip(oracle) {
            assert!((p - o).abs() < 1e-15);
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ms_free_corners_uniform() {
        let d = ms_distribution(&ms(vec![1, 1], &[vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0])).unwrap();
        assert_eq!(d.len(), 4);
        for p in d.probabilities() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn ms_decoupled_factorizes() {
        let (n, j, h) = (6, 1.3, 0.15);
        let d = ms_distribution(&ms(vec![n, n], &[vec![j, 0.0], vec![0.0, j]], vec![h, h])).unwrap();
        // each group feels α J = J/2
        let marginal = cw_distribution(&cw(n, 0.5 * j, h)).unwrap();
        let pm = marginal.probabilities();
        for cell in 0..d.len() {
            let c = d.counts_of(cell);
            let product = pm[c[0] as usize] * pm[c[1] as usize];
            assert!((d.probabilities()[cell] - product).abs() < 1e-15);
        }
    }

    #[test]
    fn ms_case18_small_matches_enumeration() {
        let p = ms(vec![2, 2], &[vec![0.6, -0.8], vec![-0.8, 0.9]], vec![-0.2, -0.3]);
        let d = ms_distribution(&p).unwrap();
        // Enumerate the 16 configurations and bin them by count vector.
        let mut binned = [0.0; 9];
        let mut z = 0.0;
        for bits in 0..16u32 {
            let s: Vec<f64> = (0..4).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let g = [0, 0, 1, 1];
            let mut e = 0.0;
            for i in 0..4 {
                for jj in 0..4 {
                    e += p.coupling[(g[i], g[jj])] * s[i] * s[jj] / 8.0;
                }
                e += p.field[g[i]] * s[i];
            }
            let w = e.exp();
            z += w;
            let c0 = (bits & 1) + (bits >> 1 & 1);
            let c1 = (bits >> 2 & 1) + (bits >> 3 & 1);
            binned[(c0 * 3 + c1) as usize] += w;
        }
        for (cell, b) in binned.iter().enumerate() {
            assert!((d.probabilities()[cell] - b / z).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_budget_enforced() {
        let p = ms(vec![999, 999], &[vec![0.5, 0.0], vec![0.0, 0.5]], vec![0.0, 0.0]);
        assert!(matches!(
            ms_distribution_with_budget(&p, 1_000),
            Err(Error::Resource(_))
        ));
        assert!(ms_distribution_with_budget(&p, 1_000_000).is_ok());
    }

    #[test]
    fn independent_spins_moments() {
        let t = 0.1f64.tanh();
        for n in [1, 7, 100, 5000] {
            let m = exact_moments(&cw_distribution(&cw(n, 0.0, 0.1)).unwrap());
            let (mean, chi) = m.scalar();
            assert!((mean - t).abs() < 1e-13, "n={n}: {mean}");
            assert!((chi - (1.0 - t * t)).abs() < 1e-10, "n={n}: {chi}");
        }
    }

    #[test]
    fn matches_brute_force() {
        let p = cw(6, 1.2, 0.3);
        let exact = exact_moments(&cw_distribution(&p).unwrap());
        let brute = brute_force_moments(&p.into()).unwrap();
        assert!((exact.mean[0] - brute.mean[0]).abs() < 1e-12);
        assert!((exact.second[(0, 0)] - brute.second[(0, 0)]).abs() < 1e-12);
        assert!((exact.finite_size_chi[(0, 0)] - brute.finite_size_chi[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn brute_force_trivial_cases() {
        let one = brute_force_moments(&cw(1, 0.6, 0.0).into()).unwrap();
        assert!(one.mean[0].abs() < 1e-15);
        assert!((one.finite_size_chi[(0, 0)] - 1.0).abs() < 1e-15);
        let two = brute_force_moments(&cw(2, 0.0, 0.0).into()).unwrap();
        assert!(two.mean[0].abs() < 1e-15);
        assert!((two.second[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(matches!(
            brute_force_moments(&cw(21, 0.5, 0.0).into()),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn large_n_normalizes_without_overflow() {
        let d = cw_distribution(&cw(1_000_000, 1.2, 0.3)).unwrap();
        let total = compensated_sum(d.probabilities().iter().copied());
        assert!((total - 1.0).abs() < 1e-12);
        assert!(d.probabilities().iter().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn restriction_identity_when_unique() {
        let p = cw(50, 0.9, 0.2);
        let d = cw_distribution(&p).unwrap();
        let sols = solve_cw(0.9, 0.2).unwrap();
        let r = restrict_to_well(&d, &sols[0]).unwrap();
        assert_eq!(r.probabilities(), d.probabilities());
    }

    #[test]
    fn restriction_matches_half_line_cut() {
        let p = cw(8, 1.5, 0.0);
        let d = cw_distribution(&p).unwrap();
        let sols = solve_cw(1.5, 0.0).unwrap();
        let plus = sols.iter().find(|s| s.stable && s.scalar() > 0.0).unwrap();
        let r = restrict_to_well(&d, plus).unwrap();

        // brute force conditional mean over configurations with m ≥ 0
        let (mut z, mut zm) = (0.0, 0.0);
        for bits in 0..256u32 {
            let up = bits.count_ones() as f64;
            let m = (2.0 * up - 8.0) / 8.0;
            if m < 0.0 {
                continue;
            }
            let w = (8.0 * (0.75 * m * m)).exp();
            z += w;
            zm += w * m;
        }
        let restricted = exact_moments(&r).mean[0];
        assert!((restricted - zm / z).abs() < 1e-12, "{restricted} vs {}", zm / z);

        let minus = sols.iter().find(|s| s.stable && s.scalar() < 0.0).unwrap();
        let rm = exact_moments(&restrict_to_well(&d, minus).unwrap()).mean[0];
        assert!(rm < 0.0);
        // the m = 0 cell belongs to the positive well only
        assert_eq!(restrict_to_well(&d, minus).unwrap().probabilities()[4], 0.0);
    }

    #[test]
    fn restricted_mean_approaches_solution() {
        let sols = solve_cw(1.5, 0.0).unwrap();
        let plus = sols.iter().find(|s| s.stable && s.scalar() > 0.0).unwrap();
        let mut prev_gap = f64::INFINITY;
        for n in [50, 200, 1000, 5000] {
            let d = cw_distribution(&cw(n, 1.5, 0.0)).unwrap();
            let mean = exact_moments(&restrict_to_well(&d, plus).unwrap()).mean[0];
            let gap = (mean - plus.scalar()).abs();
            assert!(mean > 0.0 && gap < prev_gap, "n={n}: gap {gap}");
            prev_gap = gap;
        }
        assert!(prev_gap < 1e-3);
    }

    #[test]
    fn restriction_rejects_unstable_solution() {
        let d = cw_distribution(&cw(8, 1.5, 0.0)).unwrap();
        let sols = solve_cw(1.5, 0.0).unwrap();
        assert!(restrict_to_well(&d, &sols[1]).is_err());
    }

    #[test]
    fn empty_well_is_reported() {
        // Point mass on m = -1 restricted to the positive well.
        let model: Model = cw(2, 1.5, 0.0).into();
        let d = MagnetizationDistribution::from_probabilities(model, vec![1.0, 0.0, 0.0]).unwrap();
        let sols = solve_cw(1.5, 0.0).unwrap();
        let plus = sols.iter().find(|s| s.stable && s.scalar() > 0.0).unwrap();
        assert!(matches!(
            restrict_to_well(&d, plus),
            Err(Error::DegenerateRestriction(_))
        ));
    }

    #[test]
    fn csv_layout() {
        let d = ms_distribution(&ms(vec![1, 2], &[vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0])).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "count_1,count_2,magnetization_1,magnetization_2,probability");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines[2].starts_with("0,1,"));
        assert!(lines[4].starts_with("1,0,"));
    }

    #[test]
    fn dominant_well_follows_the_field() {
        let d = cw_distribution(&CwParams::new(500, 1.2, 0.02).unwrap()).unwrap();
        let w = dominant_well(&d).unwrap().unwrap();
        assert!(w.stable && w.scalar() > 0.5);
        let flipped = cw_distribution(&CwParams::new(500, 1.2, -0.02).unwrap()).unwrap();
        assert!(dominant_well(&flipped).unwrap().unwrap().scalar() < -0.5);
        let single = cw_distribution(&CwParams::new(500, 0.6, 0.1).unwrap()).unwrap();
        assert!(dominant_well(&single).unwrap().is_none());
    }
}
