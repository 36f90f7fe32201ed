//! Thermodynamic-limit machinery: fixed points of `m = tanh(J D_α m + h)`,
//! their stability, and the limiting susceptibility.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::FractionVector;

/// Damping factor of the fixed-point iteration.
pub const DAMPING: f64 = 0.5;
/// Convergence threshold on the max-norm of one damped update.
pub const UPDATE_TOLERANCE: f64 = 1e-14;
/// Iteration budget per seed.
pub const ITERATION_BUDGET: usize = 1_000_000;
/// Fixed points closer than this in max norm are the same solution.
pub const DEDUP_TOLERANCE: f64 = 1e-8;
/// Accepted residual of a returned solution.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Half-width of the marginal band around spectral radius 1.
pub const MARGINAL_BAND: f64 = 1e-9;
/// Smallest |1 − J(1 − m²)| accepted by [`chi_cw`].
pub const CRITICAL_DENOMINATOR: f64 = 1e-12;

const SEED_VALUES: [f64; 3] = [-0.9, 0.0, 0.9];
const NEWTON_BUDGET: usize = 200;
const SCAN_POINTS: usize = 20_001;

/// One fixed point of the self-consistency map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub magnetization: Vec<f64>,
    pub residual: f64,
    pub stable: bool,
    pub marginal: bool,
    pub jacobian_radius: f64,
}

impl MeanFieldSolution {
    pub fn scalar(&self) -> f64 {
        self.magnetization[0]
    }
}

/// `∂m_l/∂h_s`; a 1×1 matrix for the single-population model.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SusceptibilityMatrix(pub Matrix);

impl SusceptibilityMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn scalar(&self) -> f64 {
        self.0[(0, 0)]
    }
}

/// The self-consistency map `m ↦ tanh(J D_α m + h)` of one model.
#[derive(Debug, Clone)]
pub(crate) struct MeanFieldMap {
    /// `J D_α`, so that the local field is `jd · m + h`.
    jd: Matrix,
    coupling: Matrix,
    alpha: Vec<f64>,
    field: Vec<f64>,
}

impl MeanFieldMap {
    pub(crate) fn new(alpha: &FractionVector, coupling: &Matrix, field: &[f64]) -> Result<Self> {
        let k = alpha.len();
        if coupling.dim() != k || field.len() != k {
            return Err(Error::InvalidParams(format!(
                "dimension mismatch: {k} fractions, {0}x{0} coupling, {1} fields",
                coupling.dim(),
                field.len()
            )));
        }
        if !coupling.is_finite() || field.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParams("non-finite coupling or field".into()));
        }
        if coupling.asymmetry() > 0.0 {
            return Err(Error::InvalidParams("symmetry violated in coupling matrix".into()));
        }
        let ones = vec![1.0; k];
        Ok(Self {
            jd: coupling.scale_rows_cols(&ones, alpha.as_slice()),
            coupling: coupling.clone(),
            alpha: alpha.as_slice().to_vec(),
            field: field.to_vec(),
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.field.len()
    }

    pub(crate) fn apply(&self, m: &[f64]) -> Vec<f64> {
        self.jd
            .mul_vec(m)
            .iter()
            .zip(&self.field)
            .map(|(x, h)| (x + h).tanh())
            .collect()
    }

    pub(crate) fn residual(&self, m: &[f64]) -> f64 {
        max_dist(m, &self.apply(m))
    }

    /// One damped step; returns the max-norm of the update.
    pub(crate) fn damped_step(&self, m: &mut [f64]) -> f64 {
        let image = self.apply(m);
        let mut delta: f64 = 0.0;
        for (mi, ti) in m.iter_mut().zip(image) {
            let next = (1.0 - DAMPING) * *mi + DAMPING * ti;
            delta = delta.max((next - *mi).abs());
            *mi = next;
        }
        delta
    }

    fn damped_iterate(&self, seed: &[f64]) -> Option<Vec<f64>> {
        let mut m = seed.to_vec();
        for _ in 0..ITERATION_BUDGET {
            if self.damped_step(&mut m) < UPDATE_TOLERANCE {
                return Some(m);
            }
        }
        None
    }

    /// Newton on `F(m) = m − tanh(J D m + h)`, with the iterate kept inside
    /// the open cube.
    fn newton(&self, seed: &[f64], budget: usize) -> Option<Vec<f64>> {
        let k = self.dim();
        let mut m = seed.to_vec();
        let mut best = (self.residual(&m), m.clone());
        for _ in 0..budget {
            let image = self.apply(&m);
            let f: Vec<f64> = m.iter().zip(&image).map(|(a, b)| a - b).collect();
            let p: Vec<f64> = image.iter().map(|t| 1.0 - t * t).collect();
            let jac = Matrix::identity(k).sub(&self.jd.scale_rows_cols(&p, &vec![1.0; k]));
            let Ok(inv) = jac.inverse() else { break };
            let step = inv.mul_vec(&f);
            for (mi, si) in m.iter_mut().zip(&step) {
                *mi = (*mi - si).clamp(-1.0 + 1e-300, 1.0 - 1e-300);
            }
            let r = self.residual(&m);
            if r < best.0 {
                best = (r, m.clone());
            }
            if step.iter().fold(0.0f64, |a, s| a.max(s.abs())) < 1e-16 {
                break;
            }
        }
        (best.0 < RESIDUAL_TOLERANCE).then_some(best.1)
    }

    /// A few guarded Newton steps; keeps the input if they do not help.
    fn polish(&self, m: Vec<f64>) -> Vec<f64> {
        let before = self.residual(&m);
        match self.newton(&m, 8) {
            Some(p) if self.residual(&p) <= before => p,
            _ => m,
        }
    }

    /// Spectral radius of `P J D_α`, via the symmetric similar matrix
    /// `S J S` with `S = diag(sqrt(P_l α_l))`.
    pub(crate) fn jacobian_radius(&self, m: &[f64]) -> f64 {
        let s: Vec<f64> = m
            .iter()
            .zip(&self.alpha)
            .map(|(mi, a)| ((1.0 - mi * mi).max(0.0) * a).sqrt())
            .collect();
        let eig = self.coupling.scale_rows_cols(&s, &s).symmetric_eigenvalues();
        eig.iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    pub(crate) fn classify(&self, m: Vec<f64>) -> MeanFieldSolution {
        let residual = self.residual(&m);
        let radius = self.jacobian_radius(&m);
        let marginal = (radius - 1.0).abs() <= MARGINAL_BAND;
        MeanFieldSolution {
            residual,
            stable: radius < 1.0 && !marginal,
            marginal,
            jacobian_radius: radius,
            magnetization: m,
        }
    }

    fn seeds(&self) -> Vec<Vec<f64>> {
        let k = self.dim();
        let total = 3usize.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                (0..k)
                    .map(|_| {
                        let v = SEED_VALUES[idx % 3];
                        idx /= 3;
                        v
                    })
                    .collect()
            })
            .collect()
    }

    /// Every fixed point reachable from the seed grid.
    pub(crate) fn solve(&self) -> Result<Vec<MeanFieldSolution>> {
        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut failed_seeds = 0usize;
        for seed in self.seeds() {
            match self.damped_iterate(&seed) {
                Some(m) => found.push(self.polish(m)),
                None => failed_seeds += 1,
            }
            if let Some(m) = self.newton(&seed, NEWTON_BUDGET) {
                found.push(m);
            }
        }
        if self.dim() == 1 {
            found.extend(self.scan_scalar_roots());
        }
        let solutions = self.finish(found);
        if solutions.is_empty() {
            return Err(Error::Numerical(format!(
                "no fixed point converged ({failed_seeds} damped seeds exhausted {ITERATION_BUDGET} iterations)"
            )));
        }
        Ok(solutions)
    }

    /// Bracketing scan of `tanh(a m + h) − m` over [−1, 1] for k = 1; finds
    /// unstable roots that the damped iteration is repelled from.
    fn scan_scalar_roots(&self) -> Vec<Vec<f64>> {
        let g = |m: f64| self.apply(&[m])[0] - m;
        let mut roots = Vec::new();
        let grid = |i: usize| -1.0 + 2.0 * i as f64 / (SCAN_POINTS - 1) as f64;
        let mut prev_x = grid(0);
        let mut prev_g = g(prev_x);
        if prev_g == 0.0 {
            roots.push(vec![prev_x]);
        }
        for i in 1..SCAN_POINTS {
            let x = grid(i);
            let gx = g(x);
            if gx == 0.0 {
                roots.push(vec![x]);
            } else if prev_g != 0.0 && (gx > 0.0) != (prev_g > 0.0) {
                let (mut lo, mut hi, lo_pos) = (prev_x, x, prev_g > 0.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    let gm = g(mid);
                    if gm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (gm > 0.0) == lo_pos {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
                roots.push(self.polish(vec![root]));
            }
            prev_x = x;
            prev_g = gx;
        }
        roots
    }

    fn finish(&self, found: Vec<Vec<f64>>) -> Vec<MeanFieldSolution> {
        let mut unique: Vec<Vec<f64>> = Vec::new();
        for m in found {
            if self.residual(&m) >= RESIDUAL_TOLERANCE {
                continue;
            }
            match unique.iter_mut().find(|u| max_dist(u, &m) < DEDUP_TOLERANCE) {
                Some(u) => {
                    if self.residual(&m) < self.residual(u) {
                        *u = m;
                    }
                }
                None => unique.push(m),
            }
        }
        unique.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        unique.into_iter().map(|m| self.classify(m)).collect()
    }
}

pub(crate) fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// All fixed points of `m = tanh(J m + h)`, ascending.
pub fn solve_cw(coupling: f64, field: f64) -> Result<Vec<MeanFieldSolution>> {
    let alpha = FractionVector::new(vec![1.0])?;
    MeanFieldMap::new(&alpha, &Matrix::scalar(coupling), &[field])?.solve()
}

/// All fixed points of the k-species system reachable from the `3^k` seed
/// grid, in lexicographic order.
pub fn solve_ms(alpha: &FractionVector, coupling: &Matrix, field: &[f64]) -> Result<Vec<MeanFieldSolution>> {
    MeanFieldMap::new(alpha, coupling, field)?.solve()
}

/// The unique stable solution, or an error naming how many there are.
pub fn unique_stable(solutions: &[MeanFieldSolution]) -> Result<&MeanFieldSolution> {
    let mut stable = solutions.iter().filter(|s| s.stable);
    match (stable.next(), stable.next()) {
        (Some(s), None) => Ok(s),
        (None, _) => Err(Error::Numerical("no stable mean-field solution".into())),
        (Some(_), Some(_)) => Err(Error::Numerical(format!(
            "{} stable mean-field solutions; the unique-solution regime is required",
            solutions.iter().filter(|s| s.stable).count()
        ))),
    }
}

fn require_stable(solution: &MeanFieldSolution) -> Result<()> {
    if solution.marginal {
        return Err(Error::Singular(format!(
            "marginal solution (spectral radius {})",
            solution.jacobian_radius
        )));
    }
    if !solution.stable {
        return Err(Error::Numerical(format!(
            "susceptibility requested at an unstable fixed point (spectral radius {})",
            solution.jacobian_radius
        )));
    }
    Ok(())
}

/// `χ = (1 − m²) / (1 − J(1 − m²))`.
pub fn chi_cw(coupling: f64, solution: &MeanFieldSolution) -> Result<SusceptibilityMatrix> {
    require_stable(solution)?;
    let m = solution.scalar();
    let p = 1.0 - m * m;
    let denom = 1.0 - coupling * p;
    if denom.abs() < CRITICAL_DENOMINATOR {
        return Err(Error::Singular(format!("1 - J(1 - m^2) = {denom:e}")));
    }
    Ok(SusceptibilityMatrix(Matrix::scalar(p / denom)))
}

/// `χ = (I − P J D_α)⁻¹ P`, the solution of `χ = P(I + J D_α χ)`.
pub fn chi_ms(alpha: &FractionVector, coupling: &Matrix, solution: &MeanFieldSolution) -> Result<SusceptibilityMatrix> {
    require_stable(solution)?;
    let k = alpha.len();
    if coupling.dim() != k || solution.magnetization.len() != k {
        return Err(Error::InvalidParams("dimension mismatch in chi_ms".into()));
    }
    let p: Vec<f64> = solution.magnetization.iter().map(|m| 1.0 - m * m).collect();
    let system = Matrix::identity(k).sub(&coupling.scale_rows_cols(&p, alpha.as_slice()));
    let inv = system.inverse()?;
    Ok(SusceptibilityMatrix(inv.scale_rows_cols(&vec![1.0; k], &p)))
}
