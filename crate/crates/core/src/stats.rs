//! Goodness-of-fit statistics for histogrammed detector counts.

use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Adjacent bins are pooled until each carries at least this expected count.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    /// Degrees of freedom, pooled bins minus one.
    pub dof: usize,
    pub p_value: f64,
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
/// A zero-dof statistic carries no evidence, so its p-value is 1.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 || x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Pearson chi-square test of `observed` against the cell probabilities
/// `probs`, pooling neighbouring cells (in order) until every pooled cell
/// expects at least [`MIN_EXPECTED`] events. A trailing remainder is merged
/// into the last pooled cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidInput("observed and probability lengths differ".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidInput("cell probabilities must be finite and nonnegative".into()));
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = probs.iter().sum();
    if total == 0 || mass <= 0.0 {
        return Err(Error::EmptySupport);
    }
    let n = total as f64;

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        obs += o as f64;
        exp += n * p / mass;
        if exp >= MIN_EXPECTED {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if obs > 0.0 || exp > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }

    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    Ok(ChiSquare { statistic, dof, p_value: chi_square_sf(statistic, dof) })
}
