//! Parameter sweeps and constrained maximization of modal absorption.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CrossSection;
use crate::grid::ResolutionPolicy;
use crate::mode::{solve_cross_section, ModeSelector, SolverConfig};

/// Geometry knob varied by a sweep. Values are SI internally; `key` and
/// `unit_scale` describe the user-facing unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// Thickness of the top stack layer (the GaAs core).
    GaasThickness,
    RidgeWidth,
    EtchDepth,
    WireCount,
    ArrayOffset,
    Wavelength,
}

impl Parameter {
    pub const ALL: [Parameter; 6] = [
        Parameter::GaasThickness,
        Parameter::RidgeWidth,
        Parameter::EtchDepth,
        Parameter::WireCount,
        Parameter::ArrayOffset,
        Parameter::Wavelength,
    ];

    /// Column / config key including the unit.
    pub fn key(&self) -> &'static str {
        match self {
            Parameter::GaasThickness => "gaas_thickness_nm",
            Parameter::RidgeWidth => "ridge_width_nm",
            Parameter::EtchDepth => "etch_depth_nm",
            Parameter::WireCount => "wire_count",
            Parameter::ArrayOffset => "array_offset_nm",
            Parameter::Wavelength => "wavelength_nm",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.key() == key)
    }

    /// SI value of one user unit.
    pub fn unit_scale(&self) -> f64 {
        match self {
            Parameter::WireCount => 1.0,
            _ => 1e-9,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Parameter::WireCount)
    }

    /// Returns `base` with this parameter set to `value` (SI). The window is
    /// grown, never shrunk, to keep the minimum clearance.
    pub fn apply(&self, base: &CrossSection, value: f64) -> Result<CrossSection> {
        let mut xs = base.clone();
        match self {
            Parameter::GaasThickness => {
                let top = xs.stack.layers.last_mut().ok_or_else(|| Error::config("layer stack is empty"))?;
                top.thickness = value;
            }
            Parameter::RidgeWidth => xs.ridge.width = value,
            Parameter::EtchDepth => xs.ridge.etch_depth = value,
            Parameter::WireCount => {
                let w = xs.wires.as_mut().ok_or_else(|| Error::config("wire_count sweep needs a wire array"))?;
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::config(format!("wire count {value} must be a positive integer")));
                }
                w.count = value as usize;
            }
            Parameter::ArrayOffset => {
                xs.wires.as_mut().ok_or_else(|| Error::config("array offset sweep needs a wire array"))?.offset = value
            }
            Parameter::Wavelength => xs.wavelength = value,
        }
        if !(value.is_finite()) || (!matches!(self, Parameter::ArrayOffset) && value <= 0.0) {
            return Err(Error::config(format!("{} must be positive", self.key())));
        }
        let fit = xs.fitted_window();
        xs.window.width = xs.window.width.max(fit.width);
        xs.window.top = xs.window.top.max(fit.top);
        xs.window.bottom = xs.window.bottom.min(fit.bottom);
        xs.validate()?;
        Ok(xs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterRange {
    pub parameter: Parameter,
    /// Inclusive bounds and step, SI.
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ParameterRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config(format!("{} step must be > 0", self.parameter.key())));
        }
        if !(self.stop >= self.start) {
            return Err(Error::config(format!("{} range is empty", self.parameter.key())));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.start + k as f64 * self.step).collect())
    }

    fn contains(&self, v: f64) -> bool {
        let eps = 1e-9 * self.step;
        v >= self.start - eps && v <= self.stop + eps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub ranges: Vec<ParameterRange>,
    pub selector: ModeSelector,
    /// Smallest acceptable alignment margin [m].
    pub min_margin: f64,
    pub max_points: usize,
}

impl SweepSpec {
    pub const DEFAULT_MAX_POINTS: usize = 10_000;

    pub fn new(ranges: Vec<ParameterRange>, selector: ModeSelector, min_margin: f64) -> Self {
        Self { ranges, selector, min_margin, max_points: Self::DEFAULT_MAX_POINTS }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_margin >= 0.0) {
            return Err(Error::config("margin constraint must be >= 0"));
        }
        for (i, r) in self.ranges.iter().enumerate() {
            r.values()?;
            if self.ranges[..i].iter().any(|o| o.parameter == r.parameter) {
                return Err(Error::config(format!("parameter {} listed twice", r.parameter.key())));
            }
        }
        Ok(())
    }

    /// Cartesian product, last parameter varying fastest.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let axes: Vec<Vec<f64>> = self.ranges.iter().map(|r| r.values()).collect::<Result<_>>()?;
        let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len())).unwrap_or(usize::MAX);
        if total > self.max_points {
            return Err(Error::config(format!("sweep has {total} points, above the cap of {}", self.max_points)));
        }
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub n_eff: Complex64,
    pub alpha_per_cm: f64,
    pub te_fraction: f64,
}

/// Objective for sweeps; the production implementation runs the mode
/// solver, tests inject analytic stand-ins.
pub trait Evaluator: Sync {
    fn evaluate(&self, xs: &CrossSection, selector: ModeSelector) -> Result<Evaluation>;
}

#[derive(Debug, Clone)]
pub struct ModeSolverEvaluator {
    pub policy: ResolutionPolicy,
    pub config: SolverConfig,
}

impl Evaluator for ModeSolverEvaluator {
    fn evaluate(&self, xs: &CrossSection, selector: ModeSelector) -> Result<Evaluation> {
        let (_, modes) = solve_cross_section(xs, &self.policy, &self.config)?;
        let m = selector.pick(&modes).ok_or_else(|| Error::domain(format!("no guided {selector:?} mode")))?;
        Ok(Evaluation { n_eff: m.n_eff, alpha_per_cm: m.alpha_per_cm(), te_fraction: m.te_fraction })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// SI values in the order of the sweep's ranges.
    pub values: Vec<f64>,
    pub margin: Option<f64>,
    pub feasible: bool,
    pub evaluation: Option<Evaluation>,
    /// `"ok"` or the failure message.
    pub status: String,
}

impl SweepRow {
    fn alpha(&self) -> Option<f64> {
        self.evaluation.map(|e| e.alpha_per_cm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameters: Vec<Parameter>,
    pub rows: Vec<SweepRow>,
    /// Index of the best feasible, successfully evaluated row.
    pub best: Option<usize>,
}

impl SweepResult {
    pub fn best_row(&self) -> Option<&SweepRow> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for h in header {
            writeln!(f, "# {h}")?;
        }
        let mut cols: Vec<&str> = self.parameters.iter().map(|p| p.key()).collect();
        cols.extend(["n_eff_re", "n_eff_im", "alpha_per_cm", "te_fraction", "margin_um", "feasible", "status"]);
        writeln!(f, "{}", cols.join(","))?;
        for r in &self.rows {
            let mut cells: Vec<String> = r
                .values
                .iter()
                .zip(&self.parameters)
                .map(|(v, p)| format!("{}", round_unit(v / p.unit_scale())))
                .collect();
            match r.evaluation {
                Some(e) => cells.extend([
                    format!("{:.9}", e.n_eff.re),
                    format!("{:.9e}", e.n_eff.im),
                    format!("{:.6}", e.alpha_per_cm),
                    format!("{:.6}", e.te_fraction),
                ]),
                None => cells.extend(["", "", "", ""].map(String::from)),
            }
            cells.push(r.margin.map_or(String::new(), |m| format!("{:.6}", m * 1e6)));
            cells.push(r.feasible.to_string());
            cells.push(csv_field(&r.status));
            writeln!(f, "{}", cells.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}

fn round_unit(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn evaluate_point(
    base: &CrossSection,
    params: &[Parameter],
    values: &[f64],
    spec: &SweepSpec,
    evaluator: &dyn Evaluator,
) -> SweepRow {
    let built = params.iter().zip(values).try_fold(base.clone(), |xs, (p, &v)| p.apply(&xs, v));
    let xs = match built {
        Ok(xs) => xs,
        Err(e) => {
            return SweepRow {
                values: values.to_vec(),
                margin: None,
                feasible: false,
                evaluation: None,
                status: e.to_string(),
            }
        }
    };
    let margin = xs.alignment_margin();
    let feasible = margin.is_none_or(|m| m >= spec.min_margin - 1e-12);
    match evaluator.evaluate(&xs, spec.selector) {
        Ok(e) => SweepRow { values: values.to_vec(), margin, feasible, evaluation: Some(e), status: "ok".into() },
        Err(e) => SweepRow { values: values.to_vec(), margin, feasible, evaluation: None, status: e.to_string() },
    }
}

fn best_index(rows: &[SweepRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.feasible)
        .filter_map(|(i, r)| r.alpha().map(|a| (i, a)))
        .fold(None, |best: Option<(usize, f64)>, (i, a)| match best {
            Some((_, b)) if b >= a => best,
            _ => Some((i, a)),
        })
        .map(|(i, _)| i)
}

/// Evaluates every grid point (in parallel, output in grid order).
pub fn run_sweep(base: &CrossSection, spec: &SweepSpec, evaluator: &dyn Evaluator) -> Result<SweepResult> {
    let points = spec.points()?;
    let params: Vec<Parameter> = spec.ranges.iter().map(|r| r.parameter).collect();
    let rows: Vec<SweepRow> = points.par_iter().map(|v| evaluate_point(base, &params, v, spec, evaluator)).collect();
    let best = best_index(&rows);
    Ok(SweepResult { parameters: params, rows, best })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    /// 0 for the coarse grid, then one per halving.
    pub stage: usize,
    /// Probe half-width per parameter at this stage [SI].
    pub step: Vec<f64>,
    pub row: SweepRow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub parameters: Vec<Parameter>,
    pub best: Option<SweepRow>,
    pub trace: Vec<TraceEntry>,
    /// True when no feasible point was found on the coarse grid.
    pub infeasible: bool,
}

/// Coarse grid followed by interval halving around the incumbent until every
/// continuous parameter's probe step is below `tolerance` [m].
pub fn maximize_alpha(
    base: &CrossSection,
    spec: &SweepSpec,
    evaluator: &dyn Evaluator,
    tolerance: f64,
) -> Result<OptimizationResult> {
    if !(1..=2).contains(&spec.ranges.len()) {
        return Err(Error::config(format!("optimization needs 1 or 2 free parameters, got {}", spec.ranges.len())));
    }
    if !(tolerance > 0.0) {
        return Err(Error::config("optimization tolerance must be > 0"));
    }
    let coarse = run_sweep(base, spec, evaluator)?;
    let params = coarse.parameters.clone();
    let mut step: Vec<f64> = spec.ranges.iter().map(|r| if r.parameter.is_integer() { 0.0 } else { r.step }).collect();
    let mut trace: Vec<TraceEntry> =
        coarse.rows.iter().map(|r| TraceEntry { stage: 0, step: step.clone(), row: r.clone() }).collect();
    let key = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    let mut seen: HashMap<Vec<u64>, usize> = trace.iter().enumerate().map(|(i, t)| (key(&t.row.values), i)).collect();
    let Some(b) = coarse.best else {
        return Ok(OptimizationResult { parameters: params, best: None, trace, infeasible: true });
    };
    let mut best = coarse.rows[b].clone();
    let mut stage = 0;
    while step.iter().any(|&s| s >= tolerance) {
        stage += 1;
        for s in step.iter_mut() {
            *s /= 2.0;
        }
        let mut probes: Vec<Vec<f64>> = Vec::new();
        for (d, range) in spec.ranges.iter().enumerate() {
            if step[d] == 0.0 {
                continue;
            }
            for sign in [-1.0, 1.0] {
                let mut v = best.values.clone();
                v[d] += sign * step[d];
                if range.contains(v[d]) && !seen.contains_key(&key(&v)) {
                    probes.push(v);
                }
            }
        }
        let rows: Vec<SweepRow> =
            probes.par_iter().map(|v| evaluate_point(base, &params, v, spec, evaluator)).collect();
        for row in rows {
            seen.insert(key(&row.values), trace.len());
            if row.feasible {
                if let (Some(a), Some(cur)) = (row.alpha(), best.alpha()) {
                    if a > cur {
                        best = row.clone();
                    }
                }
            }
            trace.push(TraceEntry { stage, step: step.clone(), row });
        }
    }
    debug_assert!(best.feasible);
    Ok(OptimizationResult { parameters: params, best: Some(best), trace, infeasible: false })
}
