//! Goodness of fit and re-simulation from estimated coefficients.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lti::IoCoefficients;
use crate::plant::integrate;

/// `100 (1 − ‖y − ŷ‖ / ‖y − ȳ‖)`.
pub fn fit_percent(y: &[f64], y_model: &[f64]) -> Result<f64> {
    if y.len() != y_model.len() || y.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "fit needs equal lengths ≥ 2, got {} and {}",
            y.len(),
            y_model.len()
        )));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let den: f64 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::DegenerateSignal("measured output is constant".into()));
    }
    let num: f64 = y.iter().zip(y_model).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(100.0 * (1.0 - num / den))
}

/// Output of the canonical realization of `c` driven by the held input `u`,
/// started at rest at `y0` (`x̄(0) = [y0, 0, …]`).
pub fn resimulate(c: &IoCoefficients, u: &[f64], ts: f64, y0: f64) -> Result<Vec<f64>> {
    let sys = c.canonical_realization();
    let mut x0 = DVector::zeros(c.order());
    x0[0] = y0;
    let xs = integrate(&sys, 1.0, u, &x0, ts, 4)?;
    Ok(xs.iter().map(|x| x[0]).collect())
}
