//! Grid-refinement study of a mode solve.

use num_complex::Complex64;
use serde::Serialize;

use super::{solve_cross_section, ModeSelector, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::CrossSection;
use crate::grid::ResolutionPolicy;

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLevel {
    /// Base cell size of the level [m].
    pub cell_size: f64,
    pub cells: usize,
    pub n_eff: Complex64,
    pub alpha_per_cm: f64,
    /// `|α_k - α_{k-1}| / |α_k|` (absent on the first level).
    pub relative_delta_alpha: Option<f64>,
    pub delta_n_eff: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub levels: Vec<ConvergenceLevel>,
    /// Richardson order estimated from the last three levels of `α`
    /// (or of `Re n_eff` for lossless structures).
    pub order: Option<f64>,
    /// Set when a level failed; the table holds the levels before it.
    pub error: Option<String>,
}

/// Solves `xs` on each policy of `ladder` (coarse to fine) and tracks the
/// selected mode.
pub fn convergence_study(
    xs: &CrossSection,
    ladder: &[ResolutionPolicy],
    config: &SolverConfig,
    selector: ModeSelector,
) -> Result<ConvergenceTable> {
    if ladder.len() < 3 {
        return Err(Error::config(format!("convergence study needs >= 3 levels, got {}", ladder.len())));
    }
    let mut levels: Vec<ConvergenceLevel> = Vec::new();
    let mut error = None;
    for policy in ladder {
        let outcome = solve_cross_section(xs, policy, config).and_then(|(grid, modes)| {
            let mode = selector
                .pick(&modes)
                .ok_or_else(|| Error::domain(format!("no {selector:?} mode found at cell size {:.2e}", policy.base)))?;
            Ok((grid.cell_count(), mode.n_eff, mode.alpha_per_cm()))
        });
        match outcome {
            Ok((cells, n_eff, alpha)) => {
                let prev = levels.last();
                levels.push(ConvergenceLevel {
                    cell_size: policy.base,
                    cells,
                    n_eff,
                    alpha_per_cm: alpha,
                    relative_delta_alpha: prev
                        .map(|p| (alpha - p.alpha_per_cm).abs() / alpha.abs().max(f64::MIN_POSITIVE)),
                    delta_n_eff: prev.map(|p| (n_eff - p.n_eff).norm()),
                });
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let order = if levels.len() >= 3 {
        let k = levels.len();
        let l = &levels[k - 3..];
        let lossy = l.iter().all(|v| v.alpha_per_cm.abs() > 0.0);
        let f: Vec<f64> = l.iter().map(|v| if lossy { v.alpha_per_cm } else { v.n_eff.re }).collect();
        let h: Vec<f64> = l.iter().map(|v| v.cell_size).collect();
        richardson_order([h[0], h[1], h[2]], [f[0], f[1], f[2]])
    } else {
        None
    };
    Ok(ConvergenceTable { levels, order, error })
}

/// Order `p` such that `f(h) = f* + c·h^p` passes through three samples,
/// found by bisection. `None` if the differences are not monotone.
pub fn richardson_order(h: [f64; 3], f: [f64; 3]) -> Option<f64> {
    let d1 = f[0] - f[1];
    let d2 = f[1] - f[2];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let target = d1 / d2;
    let g = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p)) - target;
    let (mut lo, mut hi) = (1e-3, 12.0);
    if g(lo).signum() == g(hi).signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == g(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
