//! Timing-jitter arithmetic in the Gaussian quadrature model.

use crate::error::{Error, Result};

/// Intrinsic jitter `sqrt(total² - source²)`.
pub fn jitter_deconvolve(total: f64, source: f64) -> Result<f64> {
    if !(source >= 0.0) || !(total >= 0.0) {
        return Err(Error::domain("jitter values must be non-negative"));
    }
    if source > total {
        return Err(Error::domain(format!(
            "source jitter {source:e} exceeds total jitter {total:e}: inconsistent measurement"
        )));
    }
    Ok(((total - source) * (total + source)).sqrt())
}

/// Quadrature sum `sqrt(a² + b²)`.
pub fn jitter_convolve(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// FWHM of a sample set from a Gaussian fitted to its histogram.
///
/// The fit is the count-weighted least-squares parabola through the log of
/// the non-empty bins.
pub fn histogram_fwhm(samples: &[f64], bins: usize) -> Result<f64> {
    if samples.len() < 3 || bins < 3 {
        return Err(Error::domain("histogram FWHM needs >= 3 samples and >= 3 bins"));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::domain("histogram FWHM needs samples with nonzero spread"));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in samples {
        let k = (((s - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    // Weighted normal equations for ln(c) = a + b·x + c2·x², x centred.
    let mid = 0.5 * (lo + hi);
    let mut m = [[0.0f64; 3]; 3];
    let mut v = [0.0f64; 3];
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x = (lo + (k as f64 + 0.5) * width - mid) / width;
        let w = c as f64;
        let y = w.ln();
        let p = [1.0, x, x * x];
        for r in 0..3 {
            for s in 0..3 {
                m[r][s] += w * p[r] * p[s];
            }
            v[r] += w * p[r] * y;
        }
    }
    let coeffs = solve3(m, v).ok_or_else(|| Error::domain("degenerate histogram"))?;
    if !(coeffs[2] < 0.0) {
        return Err(Error::domain("histogram is not peaked"));
    }
    let sigma = (-1.0 / (2.0 * coeffs[2])).sqrt() * width;
    Ok(2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * sigma)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
