//! Photon-counting statistics: expected rates and a Monte Carlo experiment.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::photon_flux;
use crate::error::{Error, Result};

/// Non-paralyzable detected rate for a true rate `rate_true` and dead time
/// `dead_time`.
pub fn dead_time_rate(rate_true: f64, dead_time: f64) -> f64 {
    rate_true / (1.0 + rate_true * dead_time)
}

/// Count rate [1/s] for `power` [W] at `wavelength` [m].
pub fn expected_count_rate(power: f64, wavelength: f64, sqe: f64, dead_time: f64, dark_rate: f64) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::domain(format!("optical power {power} must be non-negative")));
    }
    let raw = sqe * photon_flux(power, wavelength) + dark_rate;
    Ok(dead_time_rate(raw, dead_time))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub power_w: f64,
    pub wavelength_m: f64,
    pub duration_s: f64,
    /// Standard deviation of the Gaussian timing jitter [s].
    pub jitter_sigma_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Photon,
    Dark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountMetadata {
    pub power_w: f64,
    pub wavelength_m: f64,
    pub duration_s: f64,
    pub sqe: f64,
    pub dark_rate_per_s: f64,
    pub dead_time_s: f64,
    pub jitter_sigma_s: f64,
    pub bias_ratio: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    /// Recorded (jittered) timestamps [s], sorted.
    pub timestamps: Vec<f64>,
    pub kinds: Vec<EventKind>,
    pub metadata: CountMetadata,
}

impl CountRecord {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.len() as f64 / self.metadata.duration_s
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    /// Writes `<stem>.csv` (`timestamp_s,flag`) and `<stem>.json` metadata.
    pub fn write(&self, dir: &Path, stem: &str, header: &[String]) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut out = String::new();
        for h in header {
            out.push_str(&format!("# {h}\n"));
        }
        out.push_str("timestamp_s,flag\n");
        for (t, k) in self.timestamps.iter().zip(&self.kinds) {
            let flag = match k {
                EventKind::Photon => "photon",
                EventKind::Dark => "dark",
            };
            out.push_str(&format!("{t:.12e},{flag}\n"));
        }
        std::fs::write(dir.join(format!("{stem}.csv")), out)?;
        let json = serde_json::json!({ "header": header, "metadata": self.metadata, "events": self.len() });
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&json)?)?;
        Ok(())
    }
}

/// Simulates a counting run: merged Poisson photon (rate `sqe·Φ`) and dark
/// streams, non-paralyzable dead time, then Gaussian jitter on the recorded
/// timestamps (re-sorted afterwards).
pub fn simulate_counting(
    source: &SourceSpec,
    sqe: f64,
    dark_rate: f64,
    dead_time: f64,
    seed: u64,
) -> Result<CountRecord> {
    if !(source.power_w >= 0.0 && source.duration_s > 0.0 && source.jitter_sigma_s >= 0.0) {
        return Err(Error::domain("source needs power >= 0, duration > 0 and jitter >= 0"));
    }
    if !(0.0..=1.0).contains(&sqe) || !(dark_rate >= 0.0) || !(dead_time >= 0.0) {
        return Err(Error::domain("counting needs SQE in [0, 1], dark rate >= 0 and dead time >= 0"));
    }
    let photon_rate = sqe * photon_flux(source.power_w, source.wavelength_m);
    let total = photon_rate + dark_rate;
    let metadata = CountMetadata {
        power_w: source.power_w,
        wavelength_m: source.wavelength_m,
        duration_s: source.duration_s,
        sqe,
        dark_rate_per_s: dark_rate,
        dead_time_s: dead_time,
        jitter_sigma_s: source.jitter_sigma_s,
        bias_ratio: None,
        seed,
    };
    let mut events: Vec<(f64, EventKind)> = Vec::new();
    if total > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = Exp::new(total).map_err(|e| Error::domain(e.to_string()))?;
        let p_photon = photon_rate / total;
        let mut t = 0.0;
        let mut ready_at = f64::NEG_INFINITY;
        loop {
            t += gap.sample(&mut rng);
            if t >= source.duration_s {
                break;
            }
            let kind = if rng.random::<f64>() < p_photon { EventKind::Photon } else { EventKind::Dark };
            if t >= ready_at {
                events.push((t, kind));
                ready_at = t + dead_time;
            }
        }
        if source.jitter_sigma_s > 0.0 {
            let jitter = Normal::new(0.0, source.jitter_sigma_s).map_err(|e| Error::domain(e.to_string()))?;
            for e in &mut events {
                e.0 += jitter.sample(&mut rng);
            }
            events.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }
    let (timestamps, kinds) = events.into_iter().unzip();
    Ok(CountRecord { timestamps, kinds, metadata })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSweepFit {
    /// Fitted counts per second per watt.
    pub slope_per_w: f64,
    pub intercept_per_s: f64,
    /// `slope / (λ / hc)`.
    pub sqe: f64,
    /// Dead-time-corrected rates [1/s], one per record.
    pub corrected_rates: Vec<f64>,
}

/// Least-squares line through dead-time-corrected count rates versus power.
pub fn analyze_power_sweep(records: &[CountRecord]) -> Result<PowerSweepFit> {
    if records.len() < 2 {
        return Err(Error::domain("power sweep analysis needs >= 2 records"));
    }
    let wavelength = records[0].metadata.wavelength_m;
    let mut pts = Vec::with_capacity(records.len());
    for r in records {
        let m = r.rate();
        let busy = m * r.metadata.dead_time_s;
        if busy >= 1.0 {
            return Err(Error::Inconsistency(format!("measured rate {m:e}/s saturates the dead time")));
        }
        pts.push((r.metadata.power_w, m / (1.0 - busy)));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("power sweep needs distinct powers"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(PowerSweepFit {
        slope_per_w: slope,
        intercept_per_s: my - slope * mx,
        sqe: slope / photon_flux(1.0, wavelength),
        corrected_rates: pts.into_iter().map(|p| p.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expected_rate_examples() {
        let r = expected_count_rate(1e-12, 1300e-9, 0.034, 0.0, 0.0).unwrap();
        assert_relative_eq!(r, 2.225e5, max_relative = 2e-3);
        assert_eq!(expected_count_rate(0.0, 1300e-9, 0.034, 1e-8, 0.0).unwrap(), 0.0);
        let sat = expected_count_rate(1e-3, 1300e-9, 0.5, 1e-8, 0.0).unwrap();
        assert!(sat < 1e8 && sat > 0.999e8);
        assert!(expected_count_rate(-1.0, 1300e-9, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn empty_without_light_or_dark() {
        let s = SourceSpec { power_w: 0.0, wavelength_m: 1300e-9, duration_s: 1.0, jitter_sigma_s: 1e-11 };
        assert!(simulate_counting(&s, 0.03, 0.0, 1e-8, 1).unwrap().is_empty());
    }

    #[test]
    fn deterministic_and_sorted() {
        let s = SourceSpec { power_w: 1e-12, wavelength_m: 1300e-9, duration_s: 0.1, jitter_sigma_s: 26e-12 };
        let a = simulate_counting(&s, 0.034, 100.0, 10.8e-9, 42).unwrap();
        let b = simulate_counting(&s, 0.034, 100.0, 10.8e-9, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.timestamps.windows(2).all(|w| w[0] < w[1]));
        assert!(a.count(EventKind::Dark) > 0 && a.count(EventKind::Photon) > a.count(EventKind::Dark));
        let c = simulate_counting(&s, 0.034, 100.0, 10.8e-9, 43).unwrap();
        assert_ne!(a, c);
    }
}
