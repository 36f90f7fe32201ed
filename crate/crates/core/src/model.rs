//! Model parameters and sample containers shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Tolerance on `Σ α_l = 1`.
pub const FRACTION_SUM_TOLERANCE: f64 = 1e-12;

/// Lattice membership tolerance when importing real-valued magnetizations.
const LATTICE_TOLERANCE: f64 = 1e-9;

pub trait Validate: Sized {
    /// Returns `self` unchanged when every invariant holds, otherwise the
    /// first violated one.
    fn validate(self) -> Result<Self>;
}

/// Single-population (Curie-Weiss) parameters. The inverse temperature is
/// folded into `coupling` and `field`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwParams {
    pub n_spins: usize,
    pub coupling: f64,
    pub field: f64,
}

impl CwParams {
    pub fn new(n_spins: usize, coupling: f64, field: f64) -> Result<Self> {
        Self {
            n_spins,
            coupling,
            field,
        }
        .validate()
    }

    /// The same model seen as a one-species multi-species model.
    pub fn to_multi(&self) -> MsParams {
        MsParams {
            group_sizes: vec![self.n_spins],
            coupling: Matrix::scalar(self.coupling),
            field: vec![self.field],
        }
    }
}

impl Validate for CwParams {
    fn validate(self) -> Result<Self> {
        if self.n_spins == 0 {
            return Err(Error::InvalidParams("n_spins must be at least 1".into()));
        }
        if u32::try_from(self.n_spins).is_err() {
            return Err(Error::InvalidParams(format!(
                "n_spins = {} exceeds the supported range",
                self.n_spins
            )));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidParams(format!(
                "coupling must be finite, got {}",
                self.coupling
            )));
        }
        if !self.field.is_finite() {
            return Err(Error::InvalidParams(format!(
                "field must be finite, got {}",
                self.field
            )));
        }
        Ok(self)
    }
}

/// Multi-species parameters: group sizes, reduced coupling matrix and one
/// field per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsParams {
    pub group_sizes: Vec<usize>,
    pub coupling: Matrix,
    pub field: Vec<f64>,
}

impl MsParams {
    pub fn new(group_sizes: Vec<usize>, coupling: Matrix, field: Vec<f64>) -> Result<Self> {
        Self {
            group_sizes,
            coupling,
            field,
        }
        .validate()
    }

    #[inline]
    pub fn species(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn total_spins(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn fractions(&self) -> FractionVector {
        FractionVector::from_sizes(&self.group_sizes).expect("validated sizes always give a fraction vector")
    }

    /// Positive diagonal couplings, as assumed for the ferromagnetic
    /// intra-species interaction. Not part of [`Validate`]: the forward
    /// machinery is well defined for any sign.
    pub fn has_ferromagnetic_diagonal(&self) -> bool {
        (0..self.species()).all(|l| self.coupling[(l, l)] > 0.0)
    }
}

impl Validate for MsParams {
    fn validate(self) -> Result<Self> {
        let k = self.group_sizes.len();
        if k == 0 {
            return Err(Error::InvalidParams("at least one group is required".into()));
        }
        if let Some(l) = self.group_sizes.iter().position(|&n| n == 0) {
            return Err(Error::InvalidParams(format!("group {} has non-positive size", l + 1)));
        }
        if u32::try_from(self.total_spins()).is_err() {
            return Err(Error::InvalidParams(
                "total spin count exceeds the supported range".into(),
            ));
        }
        if self.coupling.dim() != k {
            return Err(Error::InvalidParams(format!(
                "coupling matrix is {0}x{0} but there are {k} groups",
                self.coupling.dim()
            )));
        }
        if self.field.len() != k {
            return Err(Error::InvalidParams(format!(
                "field vector has {} entries but there are {k} groups",
                self.field.len()
            )));
        }
        for l in 0..k {
            for s in 0..k {
                if !self.coupling[(l, s)].is_finite() {
                    return Err(Error::InvalidParams(format!(
                        "coupling J[{}][{}] is not finite",
                        l + 1,
                        s + 1
                    )));
                }
            }
        }
        for l in 0..k {
            for s in (l + 1)..k {
                if self.coupling[(l, s)] != self.coupling[(s, l)] {
                    return Err(Error::InvalidParams(format!(
                        "symmetry violated: J[{0}][{1}] = {2} but J[{1}][{0}] = {3}",
                        l + 1,
                        s + 1,
                        self.coupling[(l, s)],
                        self.coupling[(s, l)]
                    )));
                }
            }
        }
        if let Some(l) = self.field.iter().position(|h| !h.is_finite()) {
            return Err(Error::InvalidParams(format!("field h[{}] is not finite", l + 1)));
        }
        Ok(self)
    }
}

/// Either model flavour. Forward and inverse routines that work for any k
/// take this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    CurieWeiss(CwParams),
    MultiSpecies(MsParams),
}

impl Model {
    pub fn to_multi(&self) -> MsParams {
        match self {
            Model::CurieWeiss(p) => p.to_multi(),
            Model::MultiSpecies(p) => p.clone(),
        }
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        match self {
            Model::CurieWeiss(p) => vec![p.n_spins],
            Model::MultiSpecies(p) => p.group_sizes.clone(),
        }
    }

    pub fn species(&self) -> usize {
        match self {
            Model::CurieWeiss(_) => 1,
            Model::MultiSpecies(p) => p.species(),
        }
    }

    pub fn total_spins(&self) -> usize {
        self.group_sizes().iter().sum()
    }
}

impl Validate for Model {
    fn validate(self) -> Result<Self> {
        Ok(match self {
            Model::CurieWeiss(p) => Model::CurieWeiss(p.validate()?),
            Model::MultiSpecies(p) => Model::MultiSpecies(p.validate()?),
        })
    }
}

impl From<CwParams> for Model {
    fn from(p: CwParams) -> Self {
        Model::CurieWeiss(p)
    }
}

impl From<MsParams> for Model {
    fn from(p: MsParams) -> Self {
        Model::MultiSpecies(p)
    }
}

/// Relative group sizes `α_l = N_l / N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionVector {
    fractions: Vec<f64>,
}

impl FractionVector {
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParams("group sizes must be positive".into()));
        }
        let total = sizes.iter().sum::<usize>() as f64;
        Ok(Self {
            fractions: sizes.iter().map(|&n| n as f64 / total).collect(),
        })
    }

    /// Accepts arbitrary fractions as long as they lie in (0, 1] and sum to 1.
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidParams("empty fraction vector".into()));
        }
        if let Some(a) = fractions.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::InvalidParams(format!("fraction {a} outside (0, 1]")));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > FRACTION_SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!("fractions sum to {sum}, not 1")));
        }
        Ok(Self { fractions })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    /// `D_α` as a matrix.
    pub fn diag(&self) -> Matrix {
        Matrix::diagonal(&self.fractions)
    }
}

/// Magnetization of a group with `up` spins up out of `size`.
#[inline]
pub fn lattice_magnetization(up: u32, size: usize) -> f64 {
    (2.0 * up as f64 - size as f64) / size as f64
}

/// `M` draws stored as integer up-spin counts per group, which are the
/// sufficient statistics for every estimator here.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationSample {
    group_sizes: Vec<usize>,
    counts: Vec<u32>,
}

impl MagnetizationSample {
    /// `counts` is row-major, `k` entries per draw.
    pub fn from_counts(group_sizes: Vec<usize>, counts: Vec<u32>) -> Result<Self> {
        let k = group_sizes.len();
        if k == 0 || group_sizes.contains(&0) {
            return Err(Error::InvalidSample("group sizes must be positive".into()));
        }
        if counts.is_empty() || counts.len() % k != 0 {
            return Err(Error::InvalidSample(format!(
                "{} counts cannot be split into draws of {k} groups",
                counts.len()
            )));
        }
        for (i, row) in counts.chunks(k).enumerate() {
            for (l, (&c, &n)) in row.iter().zip(&group_sizes).enumerate() {
                if c as usize > n {
                    return Err(Error::InvalidSample(format!(
                        "draw {i}: group {} has {c} up spins out of {n}",
                        l + 1
                    )));
                }
            }
        }
        Ok(Self { group_sizes, counts })
    }

    /// Imports real magnetizations; each must sit on its group's lattice
    /// `(2c − N_l)/N_l`.
    pub fn from_magnetizations(group_sizes: Vec<usize>, values: &[Vec<f64>]) -> Result<Self> {
        let k = group_sizes.len();
        let mut counts = Vec::with_capacity(values.len() * k);
        for (i, row) in values.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSample(format!(
                    "draw {i} has {} components, expected {k}",
                    row.len()
                )));
            }
            for (l, (&m, &n)) in row.iter().zip(&group_sizes).enumerate() {
                if !(-1.0..=1.0).contains(&m) {
                    return Err(Error::InvalidSample(format!(
                        "draw {i}: m_{} = {m} outside [-1, 1]",
                        l + 1
                    )));
                }
                let up = 0.5 * (m + 1.0) * n as f64;
                let rounded = up.round();
                if (up - rounded).abs() > LATTICE_TOLERANCE * n.max(1) as f64 {
                    return Err(Error::InvalidSample(format!(
                        "draw {i}: m_{} = {m} is not on the lattice of a group of {n}",
                        l + 1
                    )));
                }
                counts.push(rounded as u32);
            }
        }
        Self::from_counts(group_sizes, counts)
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn species(&self) -> usize {
        self.group_sizes.len()
    }

    /// Number of draws `M`.
    pub fn len(&self) -> usize {
        self.counts.len() / self.species()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self, draw: usize) -> &[u32] {
        let k = self.species();
        &self.counts[draw * k..(draw + 1) * k]
    }

    pub fn all_counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn magnetization(&self, draw: usize) -> Vec<f64> {
        self.counts(draw)
            .iter()
            .zip(&self.group_sizes)
            .map(|(&c, &n)| lattice_magnetization(c, n))
            .collect()
    }

    pub fn magnetizations(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.magnetization(i))
    }

    /// Explicit ±1 configuration consistent with draw `i`: within each
    /// group the up spins come first.
    pub fn expand_configuration(&self, draw: usize) -> Vec<i8> {
        let mut spins = Vec::with_capacity(self.group_sizes.iter().sum());
        for (&c, &n) in self.counts(draw).iter().zip(&self.group_sizes) {
            spins.extend(std::iter::repeat_n(1i8, c as usize));
            spins.extend(std::iter::repeat_n(-1i8, n - c as usize));
        }
        spins
    }
}
