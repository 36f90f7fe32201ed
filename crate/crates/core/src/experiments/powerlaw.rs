use serde::Serialize;

use crate::error::{Error, Result};

/// `y ≈ amplitude · x^exponent`, fitted by least squares on `(ln x, ln y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// Coefficient of determination of the log-log regression.
    pub r_squared: f64,
    pub exponent_std_error: f64,
    /// Delta-method standard error, `amplitude · se(ln amplitude)`.
    pub amplitude_std_error: f64,
}

pub fn powerlaw_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParams(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Arity(format!(
            "a power-law fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if let Some((x, y)) = xs
        .iter()
        .zip(ys)
        .find(|(x, y)| !(x.is_finite() && y.is_finite() && **x > 0.0 && **y > 0.0))
    {
        return Err(Error::Domain(format!(
            "power-law fit needs strictly positive data, got ({x}, {y})"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    // Constant data: zero residual by convention.
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    let sigma2 = ss_res / (n - 2.0);
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / n + mx * mx / sxx)).sqrt();
    let amplitude = intercept.exp();
    Ok(PowerLawFit {
        amplitude,
        exponent: slope,
        r_squared,
        exponent_std_error: slope_se,
        amplitude_std_error: amplitude * intercept_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_inverse_law() {
        let xs = [1.0, 2.0, 5.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 / x).collect();
        let fit = powerlaw_fit(&xs, &ys).unwrap();
        assert!((fit.amplitude - 2.0).abs() < 1e-12);
        assert!((fit.exponent + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_data() {
        let fit = powerlaw_fit(&[1.0, 10.0, 100.0], &[3.0, 3.0, 3.0]).unwrap();
        assert!(fit.exponent.abs() < 1e-15);
        assert_eq!(fit.r_squared, 1.0);
        assert!((fit.amplitude - 3.0).abs() < 1e-14);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(powerlaw_fit(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Arity(_))));
        assert!(matches!(
            powerlaw_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            powerlaw_fit(&[-1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]),
            Err(Error::Domain(_))
        ));
    }

    proptest! {
        #[test]
        fn scale_covariance(
            c in 1e-3f64..1e3,
            b in -2.0f64..2.0,
            noise in prop::collection::vec(-0.2f64..0.2, 5),
        ) {
            let xs = [10.0f64, 30.0, 100.0, 300.0, 1000.0];
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x.powf(b) * e.exp()).collect();
            let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
            let f = powerlaw_fit(&xs, &ys).unwrap();
            let g = powerlaw_fit(&xs, &scaled).unwrap();
            prop_assert!((g.amplitude / f.amplitude - c).abs() <= 1e-12 * c);
            prop_assert!((g.exponent - f.exponent).abs() <= 1e-12);
            prop_assert!((g.r_squared - f.r_squared).abs() <= 1e-12);
        }
    }
}
