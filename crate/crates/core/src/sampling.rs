//! Independent draws from an exact magnetization distribution.
//!
//! Draws use inverse-CDF lookup (binary search over the cumulative table)
//! driven by ChaCha20 seeded with `ChaCha20Rng::seed_from_u64`. One uniform
//! `f64` in [0, 1) is consumed per draw, so a replicate is a pure function of
//! its seed and `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::exact::{restrict_to_well, MagnetizationDistribution};
use crate::meanfield::MeanFieldSolution;
use crate::model::MagnetizationSample;
use crate::numeric::compensated_sum;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub sample_count: usize,
    pub seed: u64,
    /// Restrict draws to the basin of this stable solution.
    pub well: Option<MeanFieldSolution>,
}

impl SamplerConfig {
    pub fn new(sample_count: usize, seed: u64) -> Self {
        Self {
            sample_count,
            seed,
            well: None,
        }
    }
}

/// SplitMix64 output function.
#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(base + (index + 1) · γ)`. Injective in `index` for a fixed
/// base since γ is odd and the output function is a bijection.
pub fn mix(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seeds for `count` replicates: `mix(base_seed, r)` for `r = 0..count`.
pub fn replicate_seeds(base_seed: u64, count: usize) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(Error::InvalidParams("replicate count must be at least 1".into()));
    }
    Ok((0..count as u64).map(|r| mix(base_seed, r)).collect())
}

/// Cumulative table over a distribution's support, reusable across
/// replicates.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    dist: &'a MagnetizationDistribution,
    cdf: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(dist: &'a MagnetizationDistribution) -> Result<Self> {
        let p = dist.probabilities();
        let total = compensated_sum(p.iter().copied());
        let last = p
            .iter()
            .rposition(|&x| x > 0.0)
            .filter(|_| total > 0.0 && total.is_finite())
            .ok_or_else(|| Error::InvalidParams("distribution has no mass".into()))?;
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = p
            .iter()
            .map(|&x| {
                acc += x;
                acc / total
            })
            .collect();
        cdf[last..].iter_mut().for_each(|c| *c = 1.0);
        Ok(Self { dist, cdf })
    }

    #[inline]
    pub fn draw_cell<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u)
    }

    pub fn draw(&self, sample_count: usize, seed: u64) -> Result<MagnetizationSample> {
        if sample_count == 0 {
            return Err(Error::InvalidParams("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let k = self.dist.species();
        let mut counts = Vec::with_capacity(sample_count * k);
        for _ in 0..sample_count {
            counts.extend(self.dist.counts_of(self.draw_cell(&mut rng)));
        }
        MagnetizationSample::from_counts(self.dist.group_sizes().to_vec(), counts)
    }
}

/// `M` i.i.d. draws from `dist`, restricted to `config.well` when set.
pub fn sample(dist: &MagnetizationDistribution, config: &SamplerConfig) -> Result<MagnetizationSample> {
    match &config.well {
        Some(well) => {
            let restricted = restrict_to_well(dist, well)?;
            Sampler::new(&restricted)?.draw(config.sample_count, config.seed)
        }
        None => Sampler::new(dist)?.draw(config.sample_count, config.seed),
    }
}
