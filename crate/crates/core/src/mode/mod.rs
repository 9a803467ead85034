//! Full-vector finite-difference eigenmode solver.
//!
//! Reported quantities use the `exp(i(βz - ωt))` convention: an absorbing
//! mode has `Im(n_eff) > 0` and power decays as `exp(-α z)` with
//! `α = 2·k0·Im(n_eff)`.

pub mod convergence;
pub mod eigen;
pub mod operator;
pub mod sparse;

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use convergence::{convergence_study, ConvergenceLevel, ConvergenceTable};
pub use eigen::{ArnoldiOptions, EigenPair};
pub use operator::{assemble_operator, ModeOperator, YeeLayout};

use crate::constants::{wavenumber, VACUUM_IMPEDANCE};
use crate::error::{Error, Result};
use crate::geometry::CrossSection;
use crate::grid::{rasterize, write_matrix, PermittivityGrid, ResolutionPolicy};

type C = Complex64;
const ZERO: C = C { re: 0.0, im: 0.0 };

/// Outer boundary of the computational window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// All field components vanish on and outside the window walls.
    #[default]
    ZeroField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub num_modes: usize,
    /// Effective index around which modes are sought; defaults to 0.98 times
    /// the highest stack-layer index.
    pub target_index: Option<f64>,
    pub tolerance: f64,
    /// Krylov restarts before giving up.
    pub max_iterations: usize,
    pub krylov_dim: usize,
    pub seed: u64,
    pub boundary: Boundary,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            num_modes: 6,
            target_index: None,
            tolerance: 1e-10,
            max_iterations: 60,
            krylov_dim: 40,
            seed: 0x5eed,
            boundary: Boundary::ZeroField,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, max_index: f64) -> Result<()> {
        if self.num_modes == 0 {
            return Err(Error::config("num_modes must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config("eigensolver tolerance must be positive"));
        }
        if let Some(t) = self.target_index {
            if !(t > 1.0 && t < max_index) {
                return Err(Error::config(format!("target index {t} outside (1, {max_index:.4})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    #[serde(rename = "TE-like")]
    TeLike,
    #[serde(rename = "TM-like")]
    TmLike,
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarization::TeLike => "TE-like",
            Polarization::TmLike => "TM-like",
        })
    }
}

/// One field component sampled on its own staggered lattice. `values` is
/// row-major: sample `(ix, iy)` at `iy * x.len() + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldComponent {
    pub name: &'static str,
    pub unit: &'static str,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<C>,
}

impl FieldComponent {
    pub fn at(&self, ix: usize, iy: usize) -> C {
        self.values[iy * self.x.len() + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub n_eff: C,
    pub wavelength: f64,
    /// Electric field [V/m] and magnetic field [A/m] at 1 W guided power.
    pub ex: FieldComponent,
    pub ey: FieldComponent,
    pub ez: FieldComponent,
    pub hx: FieldComponent,
    pub hy: FieldComponent,
    pub te_fraction: f64,
    pub polarization: Polarization,
    pub normalized: bool,
    /// Relative eigen-residual in shift-invert form.
    pub residual: f64,
    ex_areas: Vec<f64>,
    ey_areas: Vec<f64>,
}

impl ModeSolution {
    /// Propagation constant [1/m].
    pub fn beta(&self) -> C {
        self.n_eff * wavenumber(self.wavelength)
    }

    /// Power absorption coefficient [1/m].
    pub fn alpha(&self) -> f64 {
        2.0 * wavenumber(self.wavelength) * self.n_eff.im
    }

    pub fn alpha_per_cm(&self) -> f64 {
        modal_absorption(self.n_eff.im, self.wavelength)
    }

    /// Guided power `½ Re ∫ (E × H*)·ẑ dA` [W].
    pub fn power(&self) -> f64 {
        let px: f64 = self
            .ex
            .values
            .iter()
            .zip(&self.hy.values)
            .zip(&self.ex_areas)
            .map(|((e, h), a)| (e * h.conj()).re * a)
            .sum();
        let py: f64 = self
            .ey
            .values
            .iter()
            .zip(&self.hx.values)
            .zip(&self.ey_areas)
            .map(|((e, h), a)| (e * h.conj()).re * a)
            .sum();
        0.5 * (px - py)
    }

    pub fn components(&self) -> [&FieldComponent; 5] {
        [&self.ex, &self.ey, &self.ez, &self.hx, &self.hy]
    }

    /// Writes `<stem>_<component>_{re,im}.csv` matrices (rows along y) and a
    /// `<stem>.json` header with the mode summary and sample coordinates.
    pub fn export(&self, dir: &Path, stem: &str, header: &[String]) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for f in self.components() {
            for (part, pick) in [("re", (|v: &C| v.re) as fn(&C) -> f64), ("im", |v: &C| v.im)] {
                let path = dir.join(format!("{stem}_{}_{part}.csv", f.name));
                let mut lines = header.to_vec();
                lines.push(format!("{} {part} [{}]; rows: y ascending, columns: x ascending", f.name, f.unit));
                let nx = f.x.len();
                let rows: Vec<Vec<f64>> = f.values.chunks(nx).map(|r| r.iter().map(pick).collect()).collect();
                write_matrix(&path, &lines, rows)?;
                written.push(path);
            }
        }
        let coords: serde_json::Map<String, serde_json::Value> = self
            .components()
            .iter()
            .map(|f| (f.name.to_string(), serde_json::json!({ "x_m": f.x, "y_m": f.y })))
            .collect();
        let json = serde_json::json!({
            "header": header,
            "wavelength_m": self.wavelength,
            "n_eff": { "re": self.n_eff.re, "im": self.n_eff.im },
            "alpha_per_cm": self.alpha_per_cm(),
            "polarization": self.polarization,
            "te_fraction": self.te_fraction,
            "power_w": self.power(),
            "residual": self.residual,
            "coordinates": coords,
        });
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
        written.push(path);
        Ok(written)
    }
}

/// α [1/cm] from the extinction part of the effective index.
pub fn modal_absorption(im_n_eff: f64, wavelength: f64) -> f64 {
    4.0 * std::f64::consts::PI * im_n_eff / wavelength / 100.0
}

/// TE-like iff the horizontal component holds more than half of the
/// transverse electric energy (ties go to TE).
pub fn classify_polarization(mode: &ModeSolution) -> (Polarization, f64) {
    let f = mode.te_fraction;
    (if f >= 0.5 { Polarization::TeLike } else { Polarization::TmLike }, f)
}

/// Solves for guided modes near the configured target. Returns them sorted
/// by descending `Re(n_eff)`; an empty list means nothing guided was found.
pub fn solve_modes(op: &ModeOperator, config: &SolverConfig, core_index: f64) -> Result<Vec<ModeSolution>> {
    config.validate(op.max_index)?;
    let target = config.target_index.unwrap_or(0.98 * core_index);
    let nev = config.num_modes.min(op.dim().saturating_sub(1));
    let opts = ArnoldiOptions {
        nev,
        krylov_dim: config.krylov_dim.max(2 * nev + 2),
        tol: config.tolerance,
        max_restarts: config.max_iterations,
        seed: config.seed,
    };
    let pairs = eigen::eigs_near(&op.a, C::new(target * target, 0.0), &opts)?;
    let mut modes: Vec<ModeSolution> = pairs
        .into_iter()
        .map(|p| build_mode(op, p))
        .filter(|m| m.n_eff.re > op.cladding_index && m.n_eff.re < op.max_index)
        .collect();
    modes.sort_by(|a, b| b.n_eff.re.total_cmp(&a.n_eff.re));
    Ok(modes)
}

fn build_mode(op: &ModeOperator, pair: EigenPair) -> ModeSolution {
    let l = &op.layout;
    let (n_ex, n_ey) = (l.n_ex(), l.n_ey());
    // Internal convention exp(iωt - γz): n_eff = n' - iκ.
    let n_int = pair.value.sqrt();
    let gamma = C::new(0.0, 1.0) * n_int;
    let e = pair.vector;
    let h_norm: Vec<C> = op.q.matvec(&e).into_iter().map(|v| v / gamma).collect();
    let (ex, ey) = e.split_at(n_ex);
    let (hx_n, hy_n) = h_norm.split_at(n_ey);

    let dex: Vec<C> = ex.iter().zip(&op.eps_xx).map(|(a, b)| a * b).collect();
    let dey: Vec<C> = ey.iter().zip(&op.eps_yy).map(|(a, b)| a * b).collect();
    let div_x = op.div_x.matvec(&dex);
    let div_y = op.div_y.matvec(&dey);
    let ez: Vec<C> = (0..l.n_centers()).map(|c| (div_x[c] + div_y[c]) / (gamma * op.eps_zz[c])).collect();

    let to_h = C::new(0.0, 1.0 / VACUUM_IMPEDANCE);
    let mut hx: Vec<C> = hx_n.iter().map(|v| v * to_h).collect();
    let mut hy: Vec<C> = hy_n.iter().map(|v| v * to_h).collect();
    let (mut ex, mut ey, mut ez) = (ex.to_vec(), ey.to_vec(), ez);

    let a_ex = l.ex_areas();
    let a_ey = l.ey_areas();
    let p_raw = 0.5
        * (ex.iter().zip(&hy).zip(&a_ex).map(|((e, h), a)| (e * h.conj()).re * a).sum::<f64>()
            - ey.iter().zip(&hx).zip(&a_ey).map(|((e, h), a)| (e * h.conj()).re * a).sum::<f64>());
    let w_ex: f64 = ex.iter().zip(&a_ex).map(|(v, a)| v.norm_sqr() * a).sum();
    let w_ey: f64 = ey.iter().zip(&a_ey).map(|(v, a)| v.norm_sqr() * a).sum();
    let te_fraction = if w_ex + w_ey > 0.0 { w_ex / (w_ex + w_ey) } else { 0.5 };

    // Unit power, then rotate so the largest transverse E sample is real and
    // positive; finally conjugate into the reported time convention.
    let normalized = p_raw.is_finite() && p_raw.abs() > 0.0;
    let scale = if normalized { 1.0 / p_raw.abs().sqrt() } else { 1.0 };
    let peak = ex.iter().chain(ey.iter()).copied().fold(ZERO, |best, v| if v.norm() > best.norm() { v } else { best });
    let phase = if peak.norm() > 0.0 { peak.conj() / peak.norm() } else { C::new(1.0, 0.0) };
    let factor = phase * scale;
    for v in ex.iter_mut().chain(ey.iter_mut()).chain(ez.iter_mut()).chain(hx.iter_mut()).chain(hy.iter_mut()) {
        *v = (*v * factor).conj();
    }

    let xc = l.x_centers();
    let yc = l.y_centers();
    let xi = l.x_edges[1..l.nx].to_vec();
    let yi = l.y_edges[1..l.ny].to_vec();
    let comp = |name, unit, x: &Vec<f64>, y: &Vec<f64>, values| FieldComponent {
        name,
        unit,
        x: x.clone(),
        y: y.clone(),
        values,
    };
    let mut mode = ModeSolution {
        n_eff: n_int.conj(),
        wavelength: op.wavelength,
        ex: comp("Ex", "V/m", &xi, &yc, ex),
        ey: comp("Ey", "V/m", &xc, &yi, ey),
        ez: comp("Ez", "V/m", &xc, &yc, ez),
        hx: comp("Hx", "A/m", &xc, &yi, hx),
        hy: comp("Hy", "A/m", &xi, &yc, hy),
        te_fraction,
        polarization: Polarization::TeLike,
        normalized,
        residual: pair.residual,
        ex_areas: a_ex,
        ey_areas: a_ey,
    };
    mode.polarization = classify_polarization(&mode).0;
    mode
}

/// Which solved mode a caller is after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSelector {
    /// Highest-index TE-like mode.
    FundamentalTe,
    /// Highest-index TM-like mode.
    FirstTm,
}

impl ModeSelector {
    pub fn pick<'a>(&self, modes: &'a [ModeSolution]) -> Option<&'a ModeSolution> {
        let want = match self {
            ModeSelector::FundamentalTe => Polarization::TeLike,
            ModeSelector::FirstTm => Polarization::TmLike,
        };
        modes.iter().find(|m| m.polarization == want)
    }
}

/// Rasterizes, assembles and solves in one go.
pub fn solve_cross_section(
    xs: &CrossSection,
    policy: &ResolutionPolicy,
    config: &SolverConfig,
) -> Result<(PermittivityGrid, Vec<ModeSolution>)> {
    let grid = rasterize(xs, policy)?;
    let op = assemble_operator(&grid, xs.wavelength)?;
    let modes = solve_modes(&op, config, grid.core_index)?;
    Ok((grid, modes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn absorption_formula() {
        assert_relative_eq!(modal_absorption(4.666e-3, 1300e-9), 451.0, max_relative = 1e-3);
        assert_eq!(modal_absorption(0.0, 1300e-9), 0.0);
        assert_relative_eq!(modal_absorption(9.33e-3, 1300e-9), 902.0, max_relative = 1e-3);
    }

    #[test]
    fn config_rejects_bad_values() {
        let bad_tol = SolverConfig { tolerance: 0.0, ..Default::default() };
        assert!(bad_tol.validate(3.5).is_err());
        let bad_target = SolverConfig { target_index: Some(4.0), ..Default::default() };
        assert!(bad_target.validate(3.5).is_err());
        assert!(SolverConfig::default().validate(3.5).is_ok());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SolverConfig { target_index: Some(3.3), ..Default::default() };
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SolverConfig>(&s).unwrap(), cfg);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
