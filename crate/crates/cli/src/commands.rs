//! Single-responsibility subcommands.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};
use wspd_core::constants::photon_flux;
use wspd_core::detector::electrical::pulse_shape;
use wspd_core::detector::{
    absorptance, analyze_power_sweep, dark_count_rate, efficiency_chain, fit_rise_for_fwhm, invert_internal,
    jitter_deconvolve, kinetic_inductance, max_count_rate, recovery_fraction, recovery_time_constant,
    simulate_counting, SourceSpec,
};
use wspd_core::fabry_perot::{extract_coupling, fringe_extrema, read_fringe_scan};
use wspd_core::{
    derive_seed, maximize_alpha, run_sweep, solve_cross_section, Error, FringeData, ModeSelector, ModeSolverEvaluator,
    Result,
};

use crate::config::ProjectConfig;
use crate::output::{num, Output};

/// Result of a command: machine-readable value plus a human rendering.
pub struct Report {
    pub value: Value,
    pub human: String,
    pub exit_code: i32,
}

impl Report {
    pub fn ok(value: Value, human: String) -> Self {
        Self { value, human, exit_code: 0 }
    }
}

pub struct Context {
    pub config: ProjectConfig,
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct SolveModeArgs {
    /// Index (in descending Re n_eff) of the mode to report and dump; the
    /// fundamental TE-like mode by default.
    #[arg(long)]
    pub mode_index: Option<usize>,
    /// Write field matrices of the selected mode and the permittivity grid.
    #[arg(long)]
    pub dump_fields: bool,
    /// Drop the nanowire array from the configured cross-section.
    #[arg(long)]
    pub no_wires: bool,
}

#[derive(Debug, Serialize)]
struct ModeRow {
    index: usize,
    n_eff_re: f64,
    n_eff_im: f64,
    alpha_per_cm: f64,
    te_fraction: f64,
    polarization: String,
}

pub fn solve_mode(ctx: &mut Context, args: &SolveModeArgs) -> Result<Report> {
    let mut xs = ctx.config.cross_section()?;
    if args.no_wires {
        xs = xs.without_wires();
    }
    let policy = ctx.config.policy()?;
    let t0 = Instant::now();
    let (grid, modes) = solve_cross_section(&xs, &policy, &ctx.config.solver_config())?;
    let runtime = t0.elapsed().as_secs_f64();
    let rows: Vec<ModeRow> = modes
        .iter()
        .enumerate()
        .map(|(i, m)| ModeRow {
            index: i,
            n_eff_re: m.n_eff.re,
            n_eff_im: m.n_eff.im,
            alpha_per_cm: m.alpha_per_cm(),
            te_fraction: m.te_fraction,
            polarization: m.polarization.to_string(),
        })
        .collect();
    let selected = match args.mode_index {
        Some(i) if i >= modes.len() => {
            return Err(Error::Domain(format!("mode index {i} out of range ({} guided modes)", modes.len())))
        }
        Some(i) => Some(i),
        None => ModeSelector::FundamentalTe
            .pick(&modes)
            .and_then(|m| modes.iter().position(|o| std::ptr::eq(o, m)))
            .or((!modes.is_empty()).then_some(0)),
    };
    let mut files = Vec::new();
    if args.dump_fields {
        if let Some(i) = selected {
            let header = ctx.out.header();
            let dir = ctx.out.ensure_dir()?.to_path_buf();
            let written = modes[i].export(&dir, &format!("mode{i}"), &header)?;
            files.extend(written.iter().map(|p| p.display().to_string()));
            ctx.out.record(written);
            let written = grid.export(&dir, "permittivity", &header)?;
            files.extend(written.iter().map(|p| p.display().to_string()));
            ctx.out.record(written);
        }
    }
    let mut human = format!(
        "grid {} x {} cells, solved in {:.1} s\n{:>3}  {:>12}  {:>12}  {:>12}  {:>8}  {}\n",
        grid.nx(),
        grid.ny(),
        runtime,
        "#",
        "Re n_eff",
        "Im n_eff",
        "alpha [1/cm]",
        "TE frac",
        "polarization"
    );
    for r in &rows {
        let mark = if Some(r.index) == selected { "*" } else { " " };
        human.push_str(&format!(
            "{:>2}{mark}  {:>12.8}  {:>12.4e}  {:>12.3}  {:>8.4}  {}\n",
            r.index, r.n_eff_re, r.n_eff_im, r.alpha_per_cm, r.te_fraction, r.polarization
        ));
    }
    if rows.is_empty() {
        human.push_str("no guided modes found\n");
    }
    let value = json!({
        "grid": { "nx": grid.nx(), "ny": grid.ny() },
        "runtime_s": runtime,
        "modes": rows,
        "selected": selected,
        "files": files,
    });
    Ok(Report::ok(value, human))
}

#[derive(Debug, Args)]
pub struct AbsorptanceArgs {
    #[arg(long)]
    pub alpha_per_cm: f64,
    #[arg(long, num_args = 1.., required = true)]
    pub length_um: Vec<f64>,
}

pub fn absorptance_cmd(args: &AbsorptanceArgs) -> Result<Report> {
    let mut rows = Vec::new();
    let mut human = format!("alpha = {} 1/cm\n", args.alpha_per_cm);
    for &l in &args.length_um {
        let a = absorptance(args.alpha_per_cm, l * 1e-4)?;
        human.push_str(&format!("L = {l} um: A = {a:.6}\n"));
        rows.push(json!({ "length_um": l, "absorptance": a }));
    }
    Ok(Report::ok(json!({ "alpha_per_cm": args.alpha_per_cm, "results": rows }), human))
}

#[derive(Debug, Args)]
pub struct PulseArgs {
    #[arg(long)]
    pub lsq_ph_per_sq: Option<f64>,
    #[arg(long)]
    pub wires: Option<usize>,
    #[arg(long)]
    pub length_um: Option<f64>,
    #[arg(long)]
    pub width_nm: Option<f64>,
    #[arg(long)]
    pub rload_ohm: Option<f64>,
    /// Rise time constant of the two-exponential pulse.
    #[arg(long)]
    pub rise_ps: Option<f64>,
    /// Also report the rise constant that reproduces this FWHM.
    #[arg(long)]
    pub fwhm_target_ns: Option<f64>,
    /// Write the sampled trace as CSV.
    #[arg(long)]
    pub write_trace: bool,
}

pub fn pulse_cmd(ctx: &mut Context, args: &PulseArgs) -> Result<Report> {
    let mut model = ctx.config.detector_model()?;
    if let Some(v) = args.lsq_ph_per_sq {
        model.sheet_inductance_h = v * 1e-12;
    }
    if let Some(v) = args.wires {
        model.wire_count = v;
    }
    if let Some(v) = args.length_um {
        model.wire_length_m = v * 1e-6;
    }
    if let Some(v) = args.width_nm {
        model.wire_width_m = v * 1e-9;
    }
    if let Some(v) = args.rload_ohm {
        model.load_resistance_ohm = v;
    }
    let lk = kinetic_inductance(&model)?;
    let tau = recovery_time_constant(&model)?;
    let rate = max_count_rate(&model)?;
    let rise = args.rise_ps.unwrap_or(ctx.config.experiments.pulse.rise_ps) * 1e-12;
    let trace = pulse_shape(&model, rise, None)?;
    let fitted = args.fwhm_target_ns.map(|f| fit_rise_for_fwhm(tau, f * 1e-9)).transpose()?;
    let mut files = Vec::new();
    if args.write_trace {
        let path = ctx.out.path("pulse_trace.csv")?;
        trace.write_csv(&path, &ctx.out.header())?;
        files.push(path.display().to_string());
    }
    let value = json!({
        "kinetic_inductance_nh": lk * 1e9,
        "recovery_time_ns": tau * 1e9,
        "max_count_rate_mhz": rate * 1e-6,
        "dead_time_ns": model.dead_time()? * 1e9,
        "recovery_fraction_3tau": recovery_fraction(3.0 * tau, tau),
        "pulse": {
            "rise_ps": rise * 1e12,
            "peak_ns": trace.peak_time * 1e9,
            "fwhm_ns": trace.fwhm * 1e9,
            "decay_ns": trace.decay_time * 1e9,
        },
        "fitted_rise_ps": fitted.map(|r| r * 1e12),
        "files": files,
    });
    let mut human = format!(
        "L_kin = {:.3} nH\ntau = {:.4} ns\nmax count rate = {:.2} MHz\nrecovery after 3 tau = {:.4}\n\
         pulse (rise {:.0} ps): FWHM {:.3} ns, tail 1/e {:.4} ns\n",
        lk * 1e9,
        tau * 1e9,
        rate * 1e-6,
        recovery_fraction(3.0 * tau, tau),
        rise * 1e12,
        trace.fwhm * 1e9,
        trace.decay_time * 1e9
    );
    if let Some(r) = fitted {
        human.push_str(&format!("rise constant for the target FWHM: {:.1} ps\n", r * 1e12));
    }
    Ok(Report::ok(value, human))
}

#[derive(Debug, Args)]
pub struct FpExtractArgs {
    #[arg(long, required_unless_present = "scan")]
    pub tmax: Option<f64>,
    #[arg(long, required_unless_present = "scan")]
    pub tmin: Option<f64>,
    /// One-way power transmission of the waveguide.
    #[arg(long, default_value_t = 1.0)]
    pub single_pass: f64,
    /// Fringe scan CSV (wavelength_nm,transmission); extrema from its 95th/5th percentiles.
    #[arg(long, conflicts_with_all = ["tmax", "tmin"])]
    pub scan: Option<PathBuf>,
}

pub fn fp_extract(args: &FpExtractArgs) -> Result<Report> {
    let fringes = match &args.scan {
        Some(p) => fringe_extrema(&read_fringe_scan(p)?, args.single_pass),
        None => FringeData {
            t_max: args.tmax.unwrap_or(0.0),
            t_min: args.tmin.unwrap_or(0.0),
            single_pass: args.single_pass,
        },
    };
    let c = extract_coupling(&fringes)?;
    let value = json!({
        "t_max": fringes.t_max,
        "t_min": fringes.t_min,
        "single_pass": fringes.single_pass,
        "contrast": c.contrast,
        "facet_reflectivity": c.reflectivity,
        "mode_match": c.mode_match,
        "coupling_efficiency": c.coupling,
    });
    let human = format!(
        "T_max = {}, T_min = {}, a = {}\nfacet reflectivity R = {:.4}\nmode match = {:.4}\ncoupling efficiency = {:.4}\n",
        fringes.t_max, fringes.t_min, fringes.single_pass, c.reflectivity, c.mode_match, c.coupling
    );
    Ok(Report::ok(value, human))
}

#[derive(Debug, Args)]
pub struct EfficiencyArgs {
    #[arg(long)]
    pub coupling: f64,
    #[arg(long)]
    pub absorptance: f64,
    #[arg(long, required_unless_present = "dqe", conflicts_with = "dqe")]
    pub internal: Option<f64>,
    /// Measured DQE; the internal efficiency is derived from it.
    #[arg(long)]
    pub dqe: Option<f64>,
}

pub fn efficiency_cmd(args: &EfficiencyArgs) -> Result<Report> {
    let internal = match (args.internal, args.dqe) {
        (Some(i), _) => i,
        (None, Some(d)) => invert_internal(d, args.absorptance)?,
        (None, None) => unreachable!("clap enforces one of --internal/--dqe"),
    };
    let b = efficiency_chain(args.coupling, args.absorptance, internal)?;
    let human = format!(
        "coupling {:.4} x absorptance {:.4} x internal {:.4}\nDQE = {:.4} ({:.2}%)\nSQE = {:.4} ({:.2}%)\n",
        b.coupling,
        b.absorptance,
        b.internal,
        b.dqe,
        b.dqe * 100.0,
        b.sqe,
        b.sqe * 100.0
    );
    Ok(Report::ok(serde_json::to_value(b)?, human))
}

#[derive(Debug, Args)]
pub struct JitterArgs {
    #[arg(long)]
    pub total_ps: f64,
    #[arg(long)]
    pub source_ps: f64,
}

pub fn jitter_cmd(args: &JitterArgs) -> Result<Report> {
    let j = jitter_deconvolve(args.total_ps * 1e-12, args.source_ps * 1e-12)? * 1e12;
    Ok(Report::ok(
        json!({ "total_ps": args.total_ps, "source_ps": args.source_ps, "intrinsic_ps": j }),
        format!("intrinsic jitter = {j:.2} ps\n"),
    ))
}

#[derive(Debug, Args)]
pub struct CountsArgs {
    /// Optical powers at the fiber input; the configured sweep by default.
    #[arg(long, num_args = 1..)]
    pub power_pw: Vec<f64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// SQE of the simulated detector.
    #[arg(long)]
    pub sqe: Option<f64>,
    #[arg(long)]
    pub jitter_fwhm_ps: Option<f64>,
    /// Overrides the configured global seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// SQE used by the counting experiment when none is configured:
/// facet coupling times the measured DQE.
pub fn default_counting_sqe(cfg: &ProjectConfig) -> Result<f64> {
    Ok(extract_coupling(&cfg.fringes())?.coupling * cfg.experiments.measured_dqe)
}

pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Serialize)]
pub struct CountingOutcome {
    pub sqe_input: f64,
    pub sqe_recovered: f64,
    pub dark_rate_per_s: f64,
    pub dead_time_ns: f64,
    pub rows: Vec<CountRow>,
    pub seeds: Vec<(String, u64)>,
}

#[derive(Debug, Serialize)]
pub struct CountRow {
    pub power_pw: f64,
    pub events: usize,
    pub rate_per_s: f64,
    pub corrected_rate_per_s: f64,
}

pub fn run_counting(
    cfg: &ProjectConfig,
    out: &mut Output,
    powers_pw: &[f64],
    duration_s: f64,
    sqe: f64,
    jitter_fwhm_ps: f64,
    global_seed: u64,
) -> Result<CountingOutcome> {
    let model = cfg.detector_model()?;
    let dark = dark_count_rate(&model);
    let dead = model.dead_time()?;
    let wavelength = cfg.cross_section.wavelength_nm * 1e-9;
    if powers_pw.is_empty() {
        return Err(Error::Domain("counting needs at least one power".into()));
    }
    let mut records = Vec::new();
    let mut seeds = Vec::new();
    for (k, &p) in powers_pw.iter().enumerate() {
        let label = format!("counts-{k}");
        let seed = derive_seed(global_seed, &label);
        let source = SourceSpec {
            power_w: p * 1e-12,
            wavelength_m: wavelength,
            duration_s,
            jitter_sigma_s: jitter_fwhm_ps * 1e-12 / FWHM_PER_SIGMA,
        };
        let mut rec = simulate_counting(&source, sqe, dark, dead, seed)?;
        rec.metadata.bias_ratio = Some(model.bias_ratio());
        out.ensure_dir()?;
        let dir = out.dir.clone();
        rec.write(&dir, &label, &out.header())?;
        out.record([dir.join(format!("{label}.csv")), dir.join(format!("{label}.json"))]);
        seeds.push((label, seed));
        records.push(rec);
    }
    // One power has no slope to fit; subtract the known dark rate instead.
    let (sqe_recovered, corrected) = if records.len() >= 2 {
        let fit = analyze_power_sweep(&records)?;
        (fit.sqe, fit.corrected_rates)
    } else {
        let r = &records[0];
        let corrected = r.rate() / (1.0 - r.rate() * dead);
        ((corrected - dark) / photon_flux(r.metadata.power_w, wavelength), vec![corrected])
    };
    let rows: Vec<CountRow> = records
        .iter()
        .zip(&corrected)
        .map(|(r, &c)| CountRow {
            power_pw: r.metadata.power_w * 1e12,
            events: r.len(),
            rate_per_s: r.rate(),
            corrected_rate_per_s: c,
        })
        .collect();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![num(r.power_pw), r.events.to_string(), num(r.rate_per_s), num(r.corrected_rate_per_s)])
        .collect();
    out.write_csv("count_rate_vs_power.csv", &["power_pw", "events", "rate_per_s", "corrected_rate_per_s"], &csv_rows)?;
    Ok(CountingOutcome { sqe_input: sqe, sqe_recovered, dark_rate_per_s: dark, dead_time_ns: dead * 1e9, rows, seeds })
}

pub fn counts_cmd(ctx: &mut Context, args: &CountsArgs) -> Result<Report> {
    let c = &ctx.config.experiments.counting;
    let powers = if args.power_pw.is_empty() { c.powers_pw.clone() } else { args.power_pw.clone() };
    let sqe = match args.sqe.or(c.sqe) {
        Some(s) => s,
        None => default_counting_sqe(&ctx.config)?,
    };
    let duration = args.duration_s.unwrap_or(c.duration_s);
    let jitter = args.jitter_fwhm_ps.unwrap_or(c.jitter_fwhm_ps);
    let seed = args.seed.unwrap_or(ctx.config.seed);
    let config = ctx.config.clone();
    let outcome = run_counting(&config, &mut ctx.out, &powers, duration, sqe, jitter, seed)?;
    let mut human = format!(
        "SQE in {:.5}, recovered {:.5} ({:+.2}%)\ndark {:.1}/s, dead time {:.2} ns\n{:>10}  {:>9}  {:>12}\n",
        outcome.sqe_input,
        outcome.sqe_recovered,
        (outcome.sqe_recovered / outcome.sqe_input - 1.0) * 100.0,
        outcome.dark_rate_per_s,
        outcome.dead_time_ns,
        "P [pW]",
        "events",
        "rate [1/s]"
    );
    for r in &outcome.rows {
        human.push_str(&format!("{:>10.4}  {:>9}  {:>12.1}\n", r.power_pw, r.events, r.rate_per_s));
    }
    Ok(Report::ok(serde_json::to_value(&outcome)?, human))
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep name from the configuration; the first one by default.
    #[arg(long)]
    pub name: Option<String>,
}

fn evaluator(cfg: &ProjectConfig) -> Result<ModeSolverEvaluator> {
    Ok(ModeSolverEvaluator { policy: cfg.policy()?, config: cfg.solver_config() })
}

pub fn sweep_cmd(ctx: &mut Context, args: &SweepArgs) -> Result<Report> {
    let sc = ctx.config.sweep(args.name.as_deref())?.clone();
    let spec = sc.spec()?;
    let base = ctx.config.cross_section()?;
    let result = run_sweep(&base, &spec, &evaluator(&ctx.config)?)?;
    let path = ctx.out.path(&format!("sweep_{}.csv", sc.name))?;
    result.write_csv(&path, &ctx.out.header())?;
    let mut human = format!("{} points written to {}\n", result.rows.len(), path.display());
    match result.best_row() {
        Some(b) => human.push_str(&format!(
            "best feasible: {} -> alpha {:.2} 1/cm\n",
            describe(&result.parameters, &b.values),
            b.evaluation.map_or(f64::NAN, |e| e.alpha_per_cm)
        )),
        None => human.push_str("no feasible point\n"),
    }
    let value = json!({ "name": sc.name, "result": result, "file": path.display().to_string() });
    Ok(Report::ok(value, human))
}

fn describe(params: &[wspd_core::Parameter], values: &[f64]) -> String {
    params
        .iter()
        .zip(values)
        .map(|(p, v)| format!("{} = {}", p.key(), (v / p.unit_scale() * 1e6).round() / 1e6))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub name: Option<String>,
    /// Stop refining once the probe step is below this.
    #[arg(long)]
    pub tolerance_nm: Option<f64>,
}

pub fn optimize_cmd(ctx: &mut Context, args: &OptimizeArgs) -> Result<Report> {
    let sc = ctx.config.sweep(args.name.as_deref())?.clone();
    let spec = sc.spec()?;
    let base = ctx.config.cross_section()?;
    let tol = args.tolerance_nm.unwrap_or(sc.tolerance_nm) * 1e-9;
    let result = maximize_alpha(&base, &spec, &evaluator(&ctx.config)?, tol)?;
    let mut columns: Vec<&str> = vec!["stage"];
    columns.extend(result.parameters.iter().map(|p| p.key()));
    columns.extend(["alpha_per_cm", "margin_um", "feasible", "status"]);
    let rows: Vec<Vec<String>> = result
        .trace
        .iter()
        .map(|t| {
            let mut r = vec![t.stage.to_string()];
            r.extend(t.row.values.iter().zip(&result.parameters).map(|(v, p)| num(v / p.unit_scale())));
            r.push(t.row.evaluation.map_or(String::new(), |e| num(e.alpha_per_cm)));
            r.push(t.row.margin.map_or(String::new(), |m| num(m * 1e6)));
            r.push(t.row.feasible.to_string());
            r.push(format!("\"{}\"", t.row.status.replace('"', "\"\"")));
            r
        })
        .collect();
    let path = ctx.out.write_csv(&format!("optimize_{}_trace.csv", sc.name), &columns, &rows)?;
    let human = match &result.best {
        Some(b) => format!(
            "optimum after {} evaluations: {} -> alpha {:.2} 1/cm (margin {:.3} um)\n",
            result.trace.len(),
            describe(&result.parameters, &b.values),
            b.evaluation.map_or(f64::NAN, |e| e.alpha_per_cm),
            b.margin.unwrap_or(f64::NAN) * 1e6
        ),
        None => format!("infeasible: no grid point satisfies the {} um margin\n", sc.min_margin_um),
    };
    let value = json!({
        "name": sc.name,
        "infeasible": result.infeasible,
        "best": result.best,
        "evaluations": result.trace.len(),
        "file": path.display().to_string(),
    });
    Ok(Report::ok(value, human))
}
