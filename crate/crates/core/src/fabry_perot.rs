//! Fabry-Perot fringes of a cleaved waveguide with symmetric facets and
//! couplers, and the inverse extraction of facet reflectivity and coupling.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fiber-to-fiber transmission at round-trip phase `phase`.
///
/// `reflectivity` is the facet power reflectivity, `mode_match` the
/// per-facet fiber-to-mode overlap and `single_pass` the one-way power
/// transmission of the waveguide.
pub fn fp_transmission(reflectivity: f64, mode_match: f64, single_pass: f64, phase: f64) -> f64 {
    let (r, a) = (reflectivity, single_pass);
    let s = (phase / 2.0).sin();
    mode_match * mode_match * (1.0 - r).powi(2) * a / ((1.0 - r * a).powi(2) + 4.0 * r * a * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeData {
    pub t_max: f64,
    pub t_min: f64,
    /// Single-pass power transmission; 1 means lossless.
    #[serde(default = "one")]
    pub single_pass: f64,
}

fn one() -> f64 {
    1.0
}

impl FringeData {
    pub fn new(t_max: f64, t_min: f64) -> Self {
        Self { t_max, t_min, single_pass: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.t_min && self.t_min < self.t_max && self.t_max <= 1.0) {
            return Err(Error::domain(format!(
                "fringe extrema need 0 < T_min < T_max <= 1 (got {}, {})",
                self.t_min, self.t_max
            )));
        }
        if !(self.single_pass > 0.0 && self.single_pass <= 1.0) {
            return Err(Error::domain(format!("single-pass transmission {} outside (0, 1]", self.single_pass)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub reflectivity: f64,
    pub mode_match: f64,
    /// `mode_match · (1 - reflectivity)`.
    pub coupling: f64,
    /// `sqrt(T_max / T_min)`.
    pub contrast: f64,
}

pub fn extract_coupling(f: &FringeData) -> Result<CouplingResult> {
    f.validate()?;
    let a = f.single_pass;
    let k = (f.t_max / f.t_min).sqrt();
    let ra = (k - 1.0) / (k + 1.0);
    let r = ra / a;
    if r >= 1.0 {
        return Err(Error::Inconsistency(format!(
            "fringe contrast {k:.4} with single-pass transmission {a} implies facet reflectivity {r:.4} >= 1"
        )));
    }
    let mode_match = f.t_max.sqrt() * (1.0 - ra) / ((1.0 - r) * a.sqrt());
    if mode_match > 1.0 {
        return Err(Error::Inconsistency(format!("extracted mode-match efficiency {mode_match:.4} exceeds 1")));
    }
    Ok(CouplingResult { reflectivity: r, mode_match, coupling: mode_match * (1.0 - r), contrast: k })
}

/// Normal-incidence reflectivity `((n-1)/(n+1))²` of a facet with index `n`.
pub fn fresnel_reflectivity(n_eff: f64) -> f64 {
    ((n_eff - 1.0) / (n_eff + 1.0)).powi(2)
}

/// Reads a fringe scan CSV with `wavelength_nm,transmission` columns.
/// Lines starting with `#` and a non-numeric header row are skipped.
pub fn read_fringe_scan(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            return Err(Error::config(format!("{}:{}: expected two columns", path.display(), lineno + 1)));
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(w), Ok(t)) => out.push((w, t)),
            _ if out.is_empty() => continue,
            _ => return Err(Error::config(format!("{}:{}: non-numeric value", path.display(), lineno + 1))),
        }
    }
    if out.len() < 2 {
        return Err(Error::config(format!("{}: fringe scan needs >= 2 samples", path.display())));
    }
    Ok(out)
}

/// Linear-interpolated percentile (`q` in [0, 100]) of `values`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Robust fringe extrema: 95th and 5th percentiles of the transmission.
pub fn fringe_extrema(scan: &[(f64, f64)], single_pass: f64) -> FringeData {
    let t: Vec<f64> = scan.iter().map(|s| s.1).collect();
    FringeData { t_max: percentile(&t, 95.0), t_min: percentile(&t, 5.0), single_pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn paper_fringes() {
        let c = extract_coupling(&FringeData::new(0.061, 0.018)).unwrap();
        assert!((c.reflectivity - 0.296).abs() < 1e-3, "{}", c.reflectivity);
        assert!((c.mode_match - 0.247).abs() < 1e-3);
        assert!((c.coupling - 0.174).abs() < 1e-3);
        assert!((fp_transmission(c.reflectivity, c.mode_match, 1.0, 0.0) - 0.061).abs() < 1e-12);
        assert!((fp_transmission(c.reflectivity, c.mode_match, 1.0, PI) - 0.018).abs() < 1e-12);
    }

    #[test]
    fn forward_examples() {
        for phi in [0.0, 0.3, PI, 5.0] {
            assert_eq!(fp_transmission(0.0, 1.0, 1.0, phi), 1.0);
        }
        let t = fp_transmission(0.296, 0.247, 1.0, 0.0);
        assert!((t - 0.061).abs() < 5e-4);
        let t = fp_transmission(0.296, 0.247, 1.0, PI);
        assert!((t - 0.018).abs() < 5e-4);
    }

    #[test]
    fn constructed_inverse() {
        for r in [0.1f64, 0.3, 0.7] {
            let t = 0.05;
            let c = extract_coupling(&FringeData::new(t, t * ((1.0 - r) / (1.0 + r)).powi(2))).unwrap();
            assert_relative_eq!(c.reflectivity, r, max_relative = 1e-12);
        }
    }

    #[test]
    fn fresnel_examples() {
        assert!((fresnel_reflectivity(3.2) - 0.274).abs() < 1e-3);
        assert_eq!(fresnel_reflectivity(1.0), 0.0);
        assert!((fresnel_reflectivity(100.0) - 0.961).abs() < 1e-3);
    }

    #[test]
    fn impossible_fringes_rejected() {
        assert!(extract_coupling(&FringeData::new(0.02, 0.03)).is_err());
        assert!(extract_coupling(&FringeData { t_max: 0.06, t_min: 0.001, single_pass: 0.3 }).is_err());
        let lossy = FringeData { t_max: 1.0, t_min: 0.9, single_pass: 0.9 };
        assert!(matches!(extract_coupling(&lossy), Err(Error::Inconsistency(_))));
    }

    #[test]
    fn percentile_extrema() {
        let scan: Vec<(f64, f64)> = (0..=1000)
            .map(|k| {
                let phase = k as f64 * 0.05;
                (1300.0 + k as f64 * 1e-3, fp_transmission(0.3, 0.25, 1.0, phase))
            })
            .collect();
        let f = fringe_extrema(&scan, 1.0);
        assert!(f.t_max <= fp_transmission(0.3, 0.25, 1.0, 0.0));
        assert!(f.t_max > 0.95 * fp_transmission(0.3, 0.25, 1.0, 0.0));
        assert!(f.t_min >= fp_transmission(0.3, 0.25, 1.0, PI));
        assert!(f.t_min < 1.1 * fp_transmission(0.3, 0.25, 1.0, PI));
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 50.0), 2.0);
    }
}
