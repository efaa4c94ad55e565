//! Power-law fitting of optimal-squeezing trends.

use crate::{CliError, Result};

/// Result of a least-squares line in (ln N, ln ξ²): ξ² ≈ a·N^b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub prefactor: f64,
    pub exponent: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
    pub points: usize,
}

/// Fit ξ² = a·N^b through (N, ξ²) points. Needs at least three strictly
/// positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(CliError::Invalid(format!(
            "power-law fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(n, v)| n <= 0.0 || v <= 0.0) {
        return Err(CliError::Invalid(
            "power-law fit requires strictly positive coordinates".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 * sxx.abs().max(1.0) {
        return Err(CliError::Invalid(
            "power-law fit is degenerate: all abscissae coincide".into(),
        ));
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    let residual = (logs
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(FitResult {
        prefactor: intercept.exp(),
        exponent: slope,
        residual,
        points: points.len(),
    })
}
