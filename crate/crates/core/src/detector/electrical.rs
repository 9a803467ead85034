//! Kinetic inductance, bias recovery and the output pulse.

use std::path::Path;

use serde::Serialize;

use super::DetectorModel;
use crate::error::{Error, Result};

/// Series kinetic inductance `L□ · squares` [H].
pub fn kinetic_inductance(model: &DetectorModel) -> Result<f64> {
    if !(model.wire_width_m > 0.0) {
        return Err(Error::domain("wire width must be positive"));
    }
    let squares = model.wire_count as f64 * model.wire_length_m / model.wire_width_m;
    Ok(model.sheet_inductance_h * squares)
}

/// `τ = L_kin / R` [s].
pub fn recovery_time_constant(model: &DetectorModel) -> Result<f64> {
    if !(model.load_resistance_ohm > 0.0) {
        return Err(Error::domain("load resistance must be positive"));
    }
    Ok(kinetic_inductance(model)? / model.load_resistance_ohm)
}

/// Fraction of the bias current restored a time `t` after a detection.
pub fn recovery_fraction(t: f64, tau: f64) -> f64 {
    -(-t / tau).exp_m1()
}

/// `1 / (3τ)` [1/s].
pub fn max_count_rate(model: &DetectorModel) -> Result<f64> {
    Ok(1.0 / (3.0 * recovery_time_constant(model)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct PulseTrace {
    pub dt: f64,
    pub time: Vec<f64>,
    /// Peak-normalized amplitude.
    pub voltage: Vec<f64>,
    pub peak_time: f64,
    pub fwhm: f64,
    /// 1/e time of the tail from a log-linear fit.
    pub decay_time: f64,
    pub rise_time_constant: f64,
    pub fall_time_constant: f64,
}

impl PulseTrace {
    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut out = String::new();
        for h in header {
            out.push_str(&format!("# {h}\n"));
        }
        out.push_str("t_s,v\n");
        for (t, v) in self.time.iter().zip(&self.voltage) {
            out.push_str(&format!("{t:.9e},{v:.9e}\n"));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn two_exp(t: f64, tau_r: f64, tau_f: f64) -> f64 {
    (-t / tau_f).exp() - (-t / tau_r).exp()
}

fn analytic_peak(tau_r: f64, tau_f: f64) -> f64 {
    tau_r * tau_f / (tau_f - tau_r) * (tau_f / tau_r).ln()
}

/// Full width at half maximum of the continuous two-exponential pulse.
fn model_fwhm(tau_r: f64, tau_f: f64) -> f64 {
    let tp = analytic_peak(tau_r, tau_f);
    let half = 0.5 * two_exp(tp, tau_r, tau_f);
    let f = |t: f64| two_exp(t, tau_r, tau_f) - half;
    let bisect = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut far = tp + tau_f;
    while f(far) > 0.0 {
        far += tau_f;
    }
    bisect(tp, far) - bisect(0.0, tp)
}

/// Samples `V(t) ∝ exp(-t/τ_f) - exp(-t/τ_r)` over `[0, horizon]` with step
/// `τ_f/1000` and extracts its metrics. `horizon` defaults to `10·τ_f`.
pub fn pulse_shape(model: &DetectorModel, tau_rise: f64, horizon: Option<f64>) -> Result<PulseTrace> {
    let tau_f = recovery_time_constant(model)?;
    pulse_from_constants(tau_rise, tau_f, horizon)
}

pub fn pulse_from_constants(tau_r: f64, tau_f: f64, horizon: Option<f64>) -> Result<PulseTrace> {
    if !(tau_r > 0.0 && tau_r < tau_f) {
        return Err(Error::config(format!("rise constant {tau_r:e} s must lie in (0, {tau_f:e}) s")));
    }
    let horizon = horizon.unwrap_or(10.0 * tau_f);
    if !(horizon > analytic_peak(tau_r, tau_f)) {
        return Err(Error::config("pulse horizon ends before the peak"));
    }
    let dt = tau_f / 1000.0;
    let n = (horizon / dt).round() as usize + 1;
    let time: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let raw: Vec<f64> = time.iter().map(|&t| two_exp(t, tau_r, tau_f)).collect();
    let (ipk, vpk) = raw.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let voltage: Vec<f64> = raw.iter().map(|v| v / vpk).collect();

    // Half-maximum crossings by linear interpolation between samples.
    let cross = |range: Box<dyn Iterator<Item = usize>>| -> Option<f64> {
        for k in range {
            let (a, b) = (voltage[k] - 0.5, voltage[k + 1] - 0.5);
            if a.signum() != b.signum() {
                return Some(time[k] + dt * a / (a - b));
            }
        }
        None
    };
    let rise = cross(Box::new(0..ipk)).unwrap_or(0.0);
    let fall = cross(Box::new(ipk..n - 1)).unwrap_or(horizon);
    let fwhm = fall - rise;

    // Tail: fit ln V over samples between 30% and 2% of the peak.
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in ipk..n {
        let v = voltage[k];
        if (0.02..=0.3).contains(&v) {
            let (x, y) = (time[k], v.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += 1.0;
        }
    }
    if m < 3.0 {
        return Err(Error::config("pulse horizon too short to fit the tail"));
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok(PulseTrace {
        dt,
        time,
        voltage,
        peak_time: ipk as f64 * dt,
        fwhm,
        decay_time: -1.0 / slope,
        rise_time_constant: tau_r,
        fall_time_constant: tau_f,
    })
}

/// Rise constant that gives the continuous model a FWHM of `target_fwhm`.
pub fn fit_rise_for_fwhm(tau_f: f64, target_fwhm: f64) -> Result<f64> {
    let (mut lo, mut hi) = (tau_f * 1e-6, tau_f * (1.0 - 1e-6));
    let (flo, fhi) = (model_fwhm(lo, tau_f), model_fwhm(hi, tau_f));
    if !(flo < target_fwhm && target_fwhm < fhi) {
        return Err(Error::domain(format!(
            "FWHM {target_fwhm:e} s unreachable for fall constant {tau_f:e} s (range {flo:e}..{fhi:e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model_fwhm(mid, tau_f) < target_fwhm {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
