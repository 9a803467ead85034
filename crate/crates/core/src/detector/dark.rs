//! Exponential dark-count law and its least-squares fit.

use serde::Serialize;

use super::{DarkCountLaw, DetectorModel};
use crate::error::{Error, Result};

/// Dark-count rate [1/s] at the model's operating bias.
pub fn dark_count_rate(model: &DetectorModel) -> f64 {
    model.dark_counts.rate(model.bias_ratio())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DarkLawFit {
    pub law: DarkCountLaw,
    /// RMS residual of `ln(rate)`.
    pub log_residual: f64,
}

/// Fits `rate = r0·exp(slope·i)` to `(i, rate)` samples by linear least
/// squares on `ln(rate)`.
pub fn fit_dark_law(samples: &[(f64, f64)]) -> Result<DarkLawFit> {
    if samples.len() < 3 {
        return Err(Error::domain(format!("dark-count fit needs >= 3 samples, got {}", samples.len())));
    }
    if let Some(&(i, r)) = samples.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::domain(format!("non-positive dark-count rate {r} at bias ratio {i}")));
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::domain("dark-count fit needs >= 3 distinct bias ratios"));
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1.ln()).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = samples.iter().map(|s| (s.1.ln() - intercept - slope * s.0).powi(2)).sum();
    Ok(DarkLawFit { law: DarkCountLaw { r0_per_s: intercept.exp(), slope }, log_residual: (rss / n).sqrt() })
}
