//! Project configuration: a JSON document with unit-suffixed keys, converted
//! to SI core types at the edge.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wspd_core::detector::{DarkCountLaw, FilmMetadata, InternalEfficiencyCurve};
use wspd_core::geometry::{CapLayer, CrossSection, Layer, LayerStack, NanowireArray, RidgeSpec, Window};
use wspd_core::materials::IndexSample;
use wspd_core::{
    DetectorModel, Error, FringeData, Material, MaterialLibrary, ModeSelector, Parameter, ParameterRange,
    ResolutionPolicy, Result, SolverConfig, SweepSpec,
};

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.json");
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub materials: Vec<MaterialConfig>,
    pub cross_section: CrossSectionConfig,
    pub resolution: ResolutionConfig,
    pub solver: SolverSettings,
    pub detector: DetectorConfig,
    pub experiments: ExperimentConfig,
    #[serde(default)]
    pub sweeps: Vec<SweepConfig>,
    pub checks: CheckConfig,
}

/// Either a constant index (`n`, `k`) or a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<IndexPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexPoint {
    pub wavelength_nm: f64,
    pub n: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSectionConfig {
    pub wavelength_nm: f64,
    pub substrate: String,
    pub ambient: String,
    /// Bottom to top.
    pub layers: Vec<LayerConfig>,
    pub ridge: RidgeConfig,
    #[serde(default)]
    pub wires: Option<WireConfig>,
    /// Fitted automatically when absent.
    #[serde(default)]
    pub window: Option<WindowConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub material: String,
    pub thickness_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeConfig {
    pub width_nm: f64,
    pub etch_depth_nm: f64,
    #[serde(default)]
    pub center_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireConfig {
    pub count: usize,
    pub width_nm: f64,
    pub pitch_nm: f64,
    pub thickness_nm: f64,
    pub material: String,
    #[serde(default)]
    pub offset_nm: f64,
    #[serde(default)]
    pub cap: Option<LayerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub width_um: f64,
    pub bottom_um: f64,
    pub top_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    pub base_nm: f64,
    pub fine_nm: f64,
    pub band_nm: f64,
    pub far_nm: f64,
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub num_modes: usize,
    #[serde(default)]
    pub target_index: Option<f64>,
    pub tolerance: f64,
    pub max_restarts: usize,
    pub krylov_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub wire_count: usize,
    pub wire_length_um: f64,
    pub wire_width_nm: f64,
    #[serde(rename = "sheet_inductance_pH_per_sq")]
    pub sheet_inductance_ph_per_sq: f64,
    pub load_resistance_ohm: f64,
    pub critical_current_ua: f64,
    pub bias_current_ua: f64,
    pub internal_efficiency: InternalEfficiencyConfig,
    pub dark_counts: DarkCountConfig,
    #[serde(default)]
    pub dead_time_ns: Option<f64>,
    #[serde(default)]
    pub film: Option<FilmConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalEfficiencyConfig {
    pub eta_max: f64,
    /// Logistic midpoint in units of I_b/I_c.
    pub midpoint_ic: f64,
    pub width_ic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkCountConfig {
    pub r0_per_s: f64,
    pub slope_per_ic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmConfig {
    pub tc_k: f64,
    pub delta_tc_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub absorption_lengths_um: Vec<f64>,
    pub fringes: FringeConfig,
    pub measured_dqe: f64,
    pub jitter: JitterConfig,
    pub pulse: PulseConfig,
    pub counting: CountingConfig,
    pub tm_design: TmDesignConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    pub t_max: f64,
    pub t_min: f64,
    #[serde(default = "one")]
    pub single_pass: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    pub total_ps: f64,
    pub source_ps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub rise_ps: f64,
    #[serde(default)]
    pub measured_fwhm_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    pub powers_pw: Vec<f64>,
    pub duration_s: f64,
    /// Gaussian timing jitter applied to recorded events, as a FWHM.
    pub jitter_fwhm_ps: f64,
    /// SQE of the simulated detector; the efficiency chain result when absent.
    #[serde(default)]
    pub sqe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmDesignConfig {
    pub core_thickness_increase_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub ranges: Vec<RangeConfig>,
    pub mode: ModeSelector,
    pub min_margin_um: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    /// Refinement stop for `optimize`.
    #[serde(default = "default_tolerance_nm")]
    pub tolerance_nm: f64,
}

fn default_max_points() -> usize {
    SweepSpec::DEFAULT_MAX_POINTS
}

fn default_tolerance_nm() -> f64 {
    5.0
}

/// Bounds in the unit named by `parameter` (e.g. `gaas_thickness_nm`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Acceptance band; a missing bound is open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub target: f64,
    #[serde(default)]
    pub lower: Option<f64>,
    #[serde(default)]
    pub upper: Option<f64>,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && self.lower.is_none_or(|l| v >= l) && self.upper.is_none_or(|u| v <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub mode_alpha_per_cm: Band,
    pub absorptance: Vec<Band>,
    pub kinetic_inductance_nh: Band,
    pub recovery_time_ns: Band,
    pub recovery_fraction_3tau: Band,
    pub max_count_rate_mhz: Band,
    pub pulse_decay_ns: Band,
    pub coupling_efficiency: Band,
    pub sqe: Band,
    pub intrinsic_jitter_ps: Band,
    /// Ratio of recovered to simulated SQE.
    pub counting_sqe_ratio: Band,
    pub tm_alpha_per_cm: Band,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg_err(format!("{name} must be > 0 (got {v})")))
    }
}

impl ProjectConfig {
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    /// Parses and validates; no computation happens on an invalid document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ProjectConfig = serde_json::from_str(text).map_err(|e| cfg_err(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::parse(&text)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let d = Sha256::digest(&canonical);
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.cross_section()?;
        self.policy()?;
        self.solver_config().validate(f64::INFINITY)?;
        self.detector_model()?.validate().map_err(|e| cfg_err(e.to_string()))?;
        let e = &self.experiments;
        for &l in &e.absorption_lengths_um {
            positive("absorption_lengths_um", l)?;
        }
        if e.absorption_lengths_um.len() != self.checks.absorptance.len() {
            return Err(cfg_err("checks.absorptance needs one band per absorption length"));
        }
        self.fringes().validate().map_err(|e| cfg_err(e.to_string()))?;
        if !(0.0..=1.0).contains(&e.measured_dqe) {
            return Err(cfg_err("measured_dqe must lie in [0, 1]"));
        }
        positive("jitter.total_ps", e.jitter.total_ps)?;
        if !(e.jitter.source_ps >= 0.0) {
            return Err(cfg_err("jitter.source_ps must be >= 0"));
        }
        positive("pulse.rise_ps", e.pulse.rise_ps)?;
        if let Some(f) = e.pulse.measured_fwhm_ns {
            positive("pulse.measured_fwhm_ns", f)?;
        }
        let c = &e.counting;
        if c.powers_pw.len() < 2 || c.powers_pw.iter().any(|p| !(*p >= 0.0)) {
            return Err(cfg_err("counting.powers_pw needs >= 2 non-negative powers"));
        }
        positive("counting.duration_s", c.duration_s)?;
        if !(c.jitter_fwhm_ps >= 0.0) {
            return Err(cfg_err("counting.jitter_fwhm_ps must be >= 0"));
        }
        if let Some(s) = c.sqe {
            if !(0.0..=1.0).contains(&s) {
                return Err(cfg_err("counting.sqe must lie in [0, 1]"));
            }
        }
        if !(e.tm_design.core_thickness_increase_nm.is_finite()) {
            return Err(cfg_err("tm_design.core_thickness_increase_nm must be finite"));
        }
        for (i, s) in self.sweeps.iter().enumerate() {
            if self.sweeps[..i].iter().any(|o| o.name == s.name) {
                return Err(cfg_err(format!("sweep name '{}' used twice", s.name)));
            }
            s.spec()?.validate()?;
            positive("tolerance_nm", s.tolerance_nm)?;
        }
        Ok(())
    }

    pub fn materials(&self) -> Result<MaterialLibrary> {
        let mut lib = MaterialLibrary::standard();
        for m in &self.materials {
            let mat = match (m.n, m.k, m.table.is_empty()) {
                (Some(n), k, true) => Material::constant(&m.name, n, k.unwrap_or(0.0))?,
                (None, None, false) => Material::new(
                    &m.name,
                    m.table
                        .iter()
                        .map(|p| IndexSample { wavelength: p.wavelength_nm * 1e-9, n: p.n, k: p.k })
                        .collect(),
                )?,
                _ => return Err(cfg_err(format!("material '{}' needs either n/k or a table", m.name))),
            };
            lib.insert(mat);
        }
        Ok(lib)
    }

    pub fn cross_section(&self) -> Result<CrossSection> {
        let c = &self.cross_section;
        let nm = 1e-9;
        for l in &c.layers {
            positive(&format!("thickness_nm of layer '{}'", l.material), l.thickness_nm)?;
        }
        let stack = LayerStack::new(
            c.substrate.clone(),
            c.layers.iter().map(|l| Layer { material: l.material.clone(), thickness: l.thickness_nm * nm }).collect(),
            c.ambient.clone(),
        )?;
        let ridge = RidgeSpec {
            width: c.ridge.width_nm * nm,
            etch_depth: c.ridge.etch_depth_nm * nm,
            center: c.ridge.center_nm * nm,
        };
        let wires = match &c.wires {
            Some(w) => {
                positive("wires.thickness_nm", w.thickness_nm)?;
                if let Some(cap) = &w.cap {
                    positive("wires.cap.thickness_nm", cap.thickness_nm)?;
                }
                Some(NanowireArray {
                    count: w.count,
                    width: w.width_nm * nm,
                    pitch: w.pitch_nm * nm,
                    thickness: w.thickness_nm * nm,
                    material: w.material.clone(),
                    cap: w
                        .cap
                        .as_ref()
                        .map(|cap| CapLayer { material: cap.material.clone(), thickness: cap.thickness_nm * nm }),
                    offset: w.offset_nm * nm,
                })
            }
            None => None,
        };
        let placeholder = Window { width: 1.0, bottom: 0.0, top: 1.0 };
        let mut xs = CrossSection {
            materials: self.materials()?,
            stack,
            ridge,
            wires,
            window: placeholder,
            wavelength: positive("wavelength_nm", c.wavelength_nm)? * nm,
        };
        xs.window = match &c.window {
            Some(w) => Window { width: w.width_um * 1e-6, bottom: w.bottom_um * 1e-6, top: w.top_um * 1e-6 },
            None => xs.fitted_window(),
        };
        xs.validate()?;
        Ok(xs)
    }

    pub fn policy(&self) -> Result<ResolutionPolicy> {
        let r = &self.resolution;
        let p = ResolutionPolicy {
            base: r.base_nm * 1e-9,
            fine: r.fine_nm * 1e-9,
            band: r.band_nm * 1e-9,
            far: r.far_nm * 1e-9,
            growth: r.growth,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            num_modes: s.num_modes,
            target_index: s.target_index,
            tolerance: s.tolerance,
            max_iterations: s.max_restarts,
            krylov_dim: s.krylov_dim,
            seed: wspd_core::derive_seed(self.seed, "mode-solver"),
            ..SolverConfig::default()
        }
    }

    pub fn detector_model(&self) -> Result<DetectorModel> {
        let d = &self.detector;
        Ok(DetectorModel {
            wire_count: d.wire_count,
            wire_length_m: d.wire_length_um * 1e-6,
            wire_width_m: d.wire_width_nm * 1e-9,
            sheet_inductance_h: d.sheet_inductance_ph_per_sq * 1e-12,
            load_resistance_ohm: d.load_resistance_ohm,
            critical_current_a: d.critical_current_ua * 1e-6,
            bias_current_a: d.bias_current_ua * 1e-6,
            internal_efficiency: InternalEfficiencyCurve {
                eta_max: d.internal_efficiency.eta_max,
                midpoint: d.internal_efficiency.midpoint_ic,
                width: d.internal_efficiency.width_ic,
            },
            dark_counts: DarkCountLaw { r0_per_s: d.dark_counts.r0_per_s, slope: d.dark_counts.slope_per_ic },
            dead_time_s: d.dead_time_ns.map(|t| t * 1e-9),
            film: d.film.as_ref().map(|f| FilmMetadata { tc_k: f.tc_k, delta_tc_k: f.delta_tc_k }),
        })
    }

    pub fn fringes(&self) -> FringeData {
        let f = &self.experiments.fringes;
        FringeData { t_max: f.t_max, t_min: f.t_min, single_pass: f.single_pass }
    }

    pub fn sweep(&self, name: Option<&str>) -> Result<&SweepConfig> {
        match name {
            Some(n) => self.sweeps.iter().find(|s| s.name == n).ok_or_else(|| cfg_err(format!("no sweep named '{n}'"))),
            None => self.sweeps.first().ok_or_else(|| cfg_err("configuration defines no sweeps")),
        }
    }
}

impl SweepConfig {
    pub fn spec(&self) -> Result<SweepSpec> {
        let ranges = self
            .ranges
            .iter()
            .map(|r| {
                let p = Parameter::from_key(&r.parameter).ok_or_else(|| {
                    let keys: Vec<&str> = Parameter::ALL.iter().map(|p| p.key()).collect();
                    cfg_err(format!("unknown sweep parameter '{}' (expected one of {})", r.parameter, keys.join(", ")))
                })?;
                let s = p.unit_scale();
                Ok(ParameterRange { parameter: p, start: r.start * s, stop: r.stop * s, step: r.step * s })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut spec = SweepSpec::new(ranges, self.mode, self.min_margin_um * 1e-6);
        spec.max_points = self.max_points;
        Ok(spec)
    }
}
