//! The canonical list of twenty two-species recovery cases.
//!
//! Cases 1 and 18 are fixed. The other eighteen were drawn by
//! [`draw_cases`] with [`CASE_SEED`] and are stored literally so the list
//! does not depend on the generator's behavior across versions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::meanfield::solve_ms;
use crate::model::{FractionVector, MsParams};

pub const CASE_SEED: u64 = 20;

const GROUP_SIZE: usize = 1000;
/// Drawn cases keep the linearized map this far from criticality.
const MAX_RADIUS: f64 = 0.85;
/// Smallest accepted `|J_12|`.
const MIN_CROSS_COUPLING: f64 = 0.25;

/// `(J_11, J_12, J_22, h_1, h_2)`.
type Row = (f64, f64, f64, f64, f64);

const CASE_1: Row = (1.2, 0.98, 0.8, 0.1, 0.2);
const CASE_18: Row = (0.6, -0.8, 0.9, -0.2, -0.3);

const DRAWN: [Row; 18] = [
    (0.81, 0.83, 0.73, 0.1, -0.26),
    (1.07, 0.49, 0.85, 0.1, 0.02),
    (0.75, 0.93, 0.7, -0.07, -0.05),
    (1.15, -0.44, 0.73, -0.2, 0.03),
    (0.67, -0.57, 0.69, 0.11, 0.26),
    (0.71, -0.59, 1.1, 0.25, 0.0),
    (0.83, 0.64, 0.65, -0.04, 0.05),
    (0.66, 0.57, 0.86, -0.15, -0.2),
    (0.57, 0.29, 0.97, -0.21, 0.09),
    (0.71, 0.48, 0.81, 0.16, 0.14),
    (1.07, -0.52, 1.13, 0.11, -0.19),
    (0.89, 0.64, 0.57, -0.29, 0.0),
    (0.7, -0.49, 0.8, 0.26, 0.05),
    (0.71, 0.76, 1.05, -0.18, -0.01),
    (0.87, 0.68, 1.02, -0.22, -0.19),
    (0.74, 0.76, 0.97, -0.09, 0.22),
    (1.06, 0.83, 0.79, -0.2, -0.05),
    (0.74, 0.33, 0.55, 0.02, 0.17),
];

fn params(row: Row) -> MsParams {
    let (j11, j12, j22, h1, h2) = row;
    MsParams::new(
        vec![GROUP_SIZE, GROUP_SIZE],
        Matrix::from_fn(2, |a, b| match (a, b) {
            (0, 0) => j11,
            (1, 1) => j22,
            _ => j12,
        }),
        vec![h1, h2],
    )
    .expect("canonical cases are valid")
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn accept(row: Row) -> Result<bool> {
    let (j11, j12, j22, h1, h2) = row;
    if j12.abs() < MIN_CROSS_COUPLING {
        return Ok(false);
    }
    let j = Matrix::from_fn(2, |a, b| match (a, b) {
        (0, 0) => j11,
        (1, 1) => j22,
        _ => j12,
    });
    let sols = solve_ms(&FractionVector::new(vec![0.5, 0.5])?, &j, &[h1, h2])?;
    Ok(sols.len() == 1 && sols[0].stable && sols[0].jacobian_radius <= MAX_RADIUS)
}

/// `count` cases drawn uniformly from `J_11, J_22 ∈ [0.55, 1.2]`,
/// `J_12 ∈ [−0.6, 1.1]`, `h ∈ [−0.3, 0.3]`, rounded to two decimals, keeping
/// those with a single, well-stable mean-field solution and `|J_12| ≥ 0.25`.
pub fn draw_cases(seed: u64, count: usize) -> Result<Vec<MsParams>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let row = (
            round2(rng.random_range(0.55..=1.2)),
            round2(rng.random_range(-0.6..=1.1)),
            round2(rng.random_range(0.55..=1.2)),
            round2(rng.random_range(-0.3..=0.3)),
            round2(rng.random_range(-0.3..=0.3)),
        );
        if accept(row)? {
            out.push(params(row));
        }
    }
    Ok(out)
}

/// Twenty cases with `N_1 = N_2 = 1000`, in case-id order.
pub fn canonical_cases() -> Vec<MsParams> {
    let mut drawn = DRAWN.iter().copied();
    (1..=20)
        .map(|id| match id {
            1 => params(CASE_1),
            18 => params(CASE_18),
            _ => params(drawn.next().expect("eighteen drawn cases")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_cases_in_place() {
        let cases = canonical_cases();
        assert_eq!(cases.len(), 20);
        assert_eq!(cases[0].coupling[(0, 1)], 0.98);
        assert_eq!(cases[17].field, vec![-0.2, -0.3]);
        assert!(cases.iter().all(|c| c.group_sizes == vec![1000, 1000]));
    }

    #[test]
    fn generator_reproduces_table() {
        let drawn = draw_cases(CASE_SEED, 18).unwrap();
        let table: Vec<MsParams> = DRAWN.iter().map(|&r| params(r)).collect();
        assert_eq!(drawn, table);
    }
}
