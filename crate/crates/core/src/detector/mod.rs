//! Detector figures of merit: absorptance, efficiency chain, electrical
//! response, dark counts, jitter and photon-counting statistics.

pub mod counting;
pub mod dark;
pub mod electrical;
pub mod jitter;

use serde::{Deserialize, Serialize};

pub use counting::{
    analyze_power_sweep, expected_count_rate, simulate_counting, CountRecord, EventKind, PowerSweepFit, SourceSpec,
};
pub use dark::{dark_count_rate, fit_dark_law, DarkLawFit};
pub use electrical::{
    fit_rise_for_fwhm, kinetic_inductance, max_count_rate, pulse_shape, recovery_fraction, recovery_time_constant,
    PulseTrace,
};
pub use jitter::{histogram_fwhm, jitter_convolve, jitter_deconvolve};

use crate::error::{Error, Result};

/// Logistic internal efficiency `η_max / (1 + exp(-(i - i0)/w))` in the
/// normalized bias `i = I_b/I_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalEfficiencyCurve {
    pub eta_max: f64,
    pub midpoint: f64,
    pub width: f64,
}

impl InternalEfficiencyCurve {
    pub fn at(&self, bias_ratio: f64) -> f64 {
        self.eta_max / (1.0 + (-(bias_ratio - self.midpoint) / self.width).exp())
    }
}

/// `R_dc = r0 · exp(slope · I_b/I_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkCountLaw {
    pub r0_per_s: f64,
    pub slope: f64,
}

impl DarkCountLaw {
    pub fn rate(&self, bias_ratio: f64) -> f64 {
        self.r0_per_s * (self.slope * bias_ratio).exp()
    }
}

/// Film characterization carried along for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmMetadata {
    pub tc_k: f64,
    pub delta_tc_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub wire_count: usize,
    /// Length of each wire [m].
    pub wire_length_m: f64,
    pub wire_width_m: f64,
    /// Sheet kinetic inductance [H/square].
    pub sheet_inductance_h: f64,
    pub load_resistance_ohm: f64,
    pub critical_current_a: f64,
    pub bias_current_a: f64,
    pub internal_efficiency: InternalEfficiencyCurve,
    pub dark_counts: DarkCountLaw,
    /// Overrides the default dead time of three recovery time constants [s].
    #[serde(default)]
    pub dead_time_s: Option<f64>,
    #[serde(default)]
    pub film: Option<FilmMetadata>,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            wire_count: 4,
            wire_length_m: 50e-6,
            wire_width_m: 100e-9,
            sheet_inductance_h: 90e-12,
            load_resistance_ohm: 50.0,
            critical_current_a: 16.9e-6,
            bias_current_a: 0.95 * 16.9e-6,
            internal_efficiency: InternalEfficiencyCurve { eta_max: 0.25, midpoint: 0.85, width: 0.04 },
            dark_counts: DarkCountLaw { r0_per_s: 1e-4, slope: 15.0 },
            dead_time_s: None,
            film: Some(FilmMetadata { tc_k: 10.0, delta_tc_k: 0.6 }),
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.wire_count == 0 || !pos(self.wire_length_m) {
            return Err(Error::domain("wire count and length must be positive"));
        }
        if !pos(self.wire_width_m) {
            return Err(Error::domain("wire width must be positive"));
        }
        if !pos(self.sheet_inductance_h) || !pos(self.load_resistance_ohm) {
            return Err(Error::domain("sheet inductance and load resistance must be positive"));
        }
        if !(pos(self.bias_current_a) && self.bias_current_a < self.critical_current_a) {
            return Err(Error::domain("bias current must lie in (0, I_c)"));
        }
        let e = self.internal_efficiency;
        if !(e.eta_max > 0.0 && e.eta_max <= 1.0 && pos(e.width)) {
            return Err(Error::domain("internal efficiency needs eta_max in (0, 1] and width > 0"));
        }
        if !(self.dark_counts.r0_per_s >= 0.0) {
            return Err(Error::domain("dark-count prefactor must be non-negative"));
        }
        if let Some(d) = self.dead_time_s {
            if !(d >= 0.0) {
                return Err(Error::domain("dead time must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn bias_ratio(&self) -> f64 {
        self.bias_current_a / self.critical_current_a
    }

    pub fn internal_efficiency_at_bias(&self) -> f64 {
        self.internal_efficiency.at(self.bias_ratio())
    }

    pub fn dead_time(&self) -> Result<f64> {
        match self.dead_time_s {
            Some(d) => Ok(d),
            None => Ok(3.0 * recovery_time_constant(self)?),
        }
    }
}

/// Fraction of guided power absorbed after `length_cm` at `alpha_per_cm`.
pub fn absorptance(alpha_per_cm: f64, length_cm: f64) -> Result<f64> {
    if !(alpha_per_cm >= 0.0) || !(length_cm >= 0.0) {
        return Err(Error::domain(format!(
            "absorptance needs alpha >= 0 and L >= 0 (got {alpha_per_cm}, {length_cm})"
        )));
    }
    Ok(-(-alpha_per_cm * length_cm).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    pub coupling: f64,
    pub absorptance: f64,
    pub internal: f64,
    /// `absorptance · internal`.
    pub dqe: f64,
    /// `coupling · dqe`.
    pub sqe: f64,
}

pub fn efficiency_chain(coupling: f64, absorptance: f64, internal: f64) -> Result<EfficiencyBudget> {
    for (name, v) in [("coupling", coupling), ("absorptance", absorptance), ("internal efficiency", internal)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} {v} outside [0, 1]")));
        }
    }
    let dqe = absorptance * internal;
    Ok(EfficiencyBudget { coupling, absorptance, internal, dqe, sqe: coupling * dqe })
}

/// Internal efficiency implied by a measured DQE and a computed absorptance.
pub fn invert_internal(dqe: f64, absorptance: f64) -> Result<f64> {
    if !(absorptance > 0.0 && absorptance <= 1.0) || !(0.0..=1.0).contains(&dqe) {
        return Err(Error::domain(format!(
            "invert_internal needs DQE in [0, 1] and A in (0, 1] (got {dqe}, {absorptance})"
        )));
    }
    let eta = dqe / absorptance;
    if eta > 1.0 {
        return Err(Error::Inconsistency(format!(
            "DQE {dqe} exceeds absorptance {absorptance}: implied internal efficiency {eta:.4} > 1"
        )));
    }
    Ok(eta)
}
