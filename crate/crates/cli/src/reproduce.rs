//! End-to-end pipeline: every stage runs (unless skipped), each result is
//! compared with its configured band, and a manifest lists what was written.

use std::collections::BTreeMap;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use wspd_core::detector::electrical::pulse_shape;
use wspd_core::detector::{
    absorptance, efficiency_chain, invert_internal, jitter_deconvolve, kinetic_inductance, max_count_rate,
    recovery_fraction, recovery_time_constant,
};
use wspd_core::fabry_perot::extract_coupling;
use wspd_core::{derive_seed, solve_cross_section, Error, ModeSelector, Result};

use crate::commands::{default_counting_sqe, run_counting, Context, Report};
use crate::config::Band;
use crate::output::{now_unix_s, num, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    ModeSolver,
    Absorptance,
    FpCoupling,
    Efficiency,
    Pulse,
    Jitter,
    Counting,
    TmDesign,
}

impl Stage {
    pub const ORDER: [Stage; 8] = [
        Stage::ModeSolver,
        Stage::Absorptance,
        Stage::FpCoupling,
        Stage::Efficiency,
        Stage::Pulse,
        Stage::Jitter,
        Stage::Counting,
        Stage::TmDesign,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::ModeSolver => "mode-solver",
            Stage::Absorptance => "absorptance",
            Stage::FpCoupling => "fp-coupling",
            Stage::Efficiency => "efficiency",
            Stage::Pulse => "pulse",
            Stage::Jitter => "jitter",
            Stage::Counting => "counting",
            Stage::TmDesign => "tm-design",
        }
    }

    fn depends_on(&self) -> &'static [Stage] {
        match self {
            Stage::Absorptance => &[Stage::ModeSolver],
            Stage::Efficiency => &[Stage::Absorptance, Stage::FpCoupling],
            Stage::Counting => &[Stage::Efficiency],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Error,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub stage: Stage,
    pub value: Option<f64>,
    pub target: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ok,
    Error,
    Skipped,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub runtime_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub command: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
    pub outputs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Stage to leave out; checks that need it are reported as not run.
    #[arg(long, value_enum)]
    pub skip: Vec<Stage>,
}

/// Values handed from one stage to the next.
#[derive(Default)]
struct Carry {
    alpha_per_cm: Option<f64>,
    absorptance: Option<f64>,
    coupling: Option<f64>,
    sqe: Option<f64>,
}

struct Run<'a> {
    ctx: &'a mut Context,
    checks: Vec<CheckResult>,
    seeds: BTreeMap<String, u64>,
    carry: Carry,
}

impl Run<'_> {
    fn check(&mut self, id: &str, stage: Stage, band: Band, value: f64) {
        let status = if band.contains(value) { CheckStatus::Pass } else { CheckStatus::Fail };
        self.checks.push(CheckResult {
            id: id.into(),
            stage,
            value: Some(value),
            target: band.target,
            lower: band.lower,
            upper: band.upper,
            status,
            note: None,
        });
    }

    fn bands(&self, stage: Stage) -> Vec<(String, Band)> {
        let c = &self.ctx.config.checks;
        match stage {
            Stage::ModeSolver => vec![("mode_alpha_per_cm".into(), c.mode_alpha_per_cm)],
            Stage::Absorptance => self
                .ctx
                .config
                .experiments
                .absorption_lengths_um
                .iter()
                .zip(&c.absorptance)
                .map(|(l, b)| (format!("absorptance_{l}um"), *b))
                .collect(),
            Stage::FpCoupling => vec![("coupling_efficiency".into(), c.coupling_efficiency)],
            Stage::Efficiency => vec![("sqe".into(), c.sqe)],
            Stage::Pulse => vec![
                ("kinetic_inductance_nh".into(), c.kinetic_inductance_nh),
                ("recovery_time_ns".into(), c.recovery_time_ns),
                ("recovery_fraction_3tau".into(), c.recovery_fraction_3tau),
                ("max_count_rate_mhz".into(), c.max_count_rate_mhz),
                ("pulse_decay_ns".into(), c.pulse_decay_ns),
            ],
            Stage::Jitter => vec![("intrinsic_jitter_ps".into(), c.intrinsic_jitter_ps)],
            Stage::Counting => vec![("counting_sqe_ratio".into(), c.counting_sqe_ratio)],
            Stage::TmDesign => vec![("tm_alpha_per_cm".into(), c.tm_alpha_per_cm)],
        }
    }

    fn mark(&mut self, stage: Stage, status: CheckStatus, note: &str) {
        for (id, band) in self.bands(stage) {
            self.checks.push(CheckResult {
                id,
                stage,
                value: None,
                target: band.target,
                lower: band.lower,
                upper: band.upper,
                status,
                note: Some(note.into()),
            });
        }
    }

    fn run_stage(&mut self, stage: Stage) -> Result<()> {
        let cfg = self.ctx.config.clone();
        let header = self.ctx.out.header();
        match stage {
            Stage::ModeSolver => {
                let xs = cfg.cross_section()?;
                let (_, modes) = solve_cross_section(&xs, &cfg.policy()?, &cfg.solver_config())?;
                self.seeds.insert("mode-solver".into(), cfg.solver_config().seed);
                let m = ModeSelector::FundamentalTe
                    .pick(&modes)
                    .ok_or_else(|| Error::Domain("no guided TE-like mode".into()))?;
                let dir = self.ctx.out.ensure_dir()?.to_path_buf();
                let files = m.export(&dir, "fundamental_te", &header)?;
                self.ctx.out.record(files);
                let alpha = m.alpha_per_cm();
                self.carry.alpha_per_cm = Some(alpha);
                self.check("mode_alpha_per_cm", stage, cfg.checks.mode_alpha_per_cm, alpha);
            }
            Stage::Absorptance => {
                let alpha = self.carry.alpha_per_cm.expect("dependency ran");
                let lengths = &cfg.experiments.absorption_lengths_um;
                for (l, band) in lengths.iter().zip(&cfg.checks.absorptance) {
                    let a = absorptance(alpha, l * 1e-4)?;
                    self.check(&format!("absorptance_{l}um"), stage, *band, a);
                }
                self.carry.absorptance = Some(absorptance(alpha, lengths[0] * 1e-4)?);
                let rows: Vec<Vec<String>> = (0..=300)
                    .map(|k| {
                        let l = k as f64 * 0.5;
                        vec![num(l), num(absorptance(alpha, l * 1e-4).expect("valid inputs"))]
                    })
                    .collect();
                self.ctx.out.write_csv("absorptance_vs_length.csv", &["length_um", "absorptance"], &rows)?;
            }
            Stage::FpCoupling => {
                let c = extract_coupling(&cfg.fringes())?;
                self.carry.coupling = Some(c.coupling);
                self.check("coupling_efficiency", stage, cfg.checks.coupling_efficiency, c.coupling);
            }
            Stage::Efficiency => {
                let a = self.carry.absorptance.expect("dependency ran");
                let internal = invert_internal(cfg.experiments.measured_dqe, a)?;
                let b = efficiency_chain(self.carry.coupling.expect("dependency ran"), a, internal)?;
                self.carry.sqe = Some(b.sqe);
                self.check("sqe", stage, cfg.checks.sqe, b.sqe);
                self.ctx.out.write_json("efficiency_budget.json", &b)?;
            }
            Stage::Pulse => {
                let model = cfg.detector_model()?;
                let tau = recovery_time_constant(&model)?;
                let trace = pulse_shape(&model, cfg.experiments.pulse.rise_ps * 1e-12, None)?;
                let path = self.ctx.out.path("pulse_trace.csv")?;
                trace.write_csv(&path, &header)?;
                let c = &cfg.checks;
                self.check("kinetic_inductance_nh", stage, c.kinetic_inductance_nh, kinetic_inductance(&model)? * 1e9);
                self.check("recovery_time_ns", stage, c.recovery_time_ns, tau * 1e9);
                self.check(
                    "recovery_fraction_3tau",
                    stage,
                    c.recovery_fraction_3tau,
                    recovery_fraction(3.0 * tau, tau),
                );
                self.check("max_count_rate_mhz", stage, c.max_count_rate_mhz, max_count_rate(&model)? * 1e-6);
                self.check("pulse_decay_ns", stage, c.pulse_decay_ns, trace.decay_time * 1e9);
            }
            Stage::Jitter => {
                let j = &cfg.experiments.jitter;
                let v = jitter_deconvolve(j.total_ps * 1e-12, j.source_ps * 1e-12)? * 1e12;
                self.check("intrinsic_jitter_ps", stage, cfg.checks.intrinsic_jitter_ps, v);
            }
            Stage::Counting => {
                let c = &cfg.experiments.counting;
                let sqe = match c.sqe {
                    Some(s) => s,
                    None => self.carry.sqe.map_or_else(|| default_counting_sqe(&cfg), Ok)?,
                };
                let seed = derive_seed(cfg.seed, "counting");
                let o = run_counting(&cfg, &mut self.ctx.out, &c.powers_pw, c.duration_s, sqe, c.jitter_fwhm_ps, seed)?;
                self.seeds.insert("counting".into(), seed);
                self.seeds.extend(o.seeds.iter().cloned());
                self.check("counting_sqe_ratio", stage, cfg.checks.counting_sqe_ratio, o.sqe_recovered / o.sqe_input);
            }
            Stage::TmDesign => {
                let mut xs = cfg.cross_section()?;
                let dt = cfg.experiments.tm_design.core_thickness_increase_nm * 1e-9;
                let t = xs.stack.top_layer().thickness + dt;
                xs = wspd_core::Parameter::GaasThickness.apply(&xs, t)?;
                let (_, modes) = solve_cross_section(&xs, &cfg.policy()?, &cfg.solver_config())?;
                let m = ModeSelector::FirstTm
                    .pick(&modes)
                    .ok_or_else(|| Error::Domain("no guided TM-like mode in the thickened design".into()))?;
                let dir = self.ctx.out.ensure_dir()?.to_path_buf();
                let files = m.export(&dir, "thick_first_tm", &header)?;
                self.ctx.out.record(files);
                self.check("tm_alpha_per_cm", stage, cfg.checks.tm_alpha_per_cm, m.alpha_per_cm());
            }
        }
        Ok(())
    }
}

pub fn reproduce(ctx: &mut Context, args: &ReproduceArgs) -> Result<Report> {
    let started = now_unix_s();
    let mut run = Run { ctx, checks: Vec::new(), seeds: BTreeMap::new(), carry: Carry::default() };
    let mut stages: Vec<StageRecord> = Vec::new();
    for stage in Stage::ORDER {
        let before = run.ctx.out.written().len();
        let t0 = Instant::now();
        let blocked =
            stage.depends_on().iter().find(|d| stages.iter().any(|r| r.stage == **d && r.status != StageStatus::Ok));
        let (status, message) = if args.skip.contains(&stage) {
            run.mark(stage, CheckStatus::NotRun, "stage skipped");
            (StageStatus::Skipped, None)
        } else if let Some(dep) = blocked {
            let msg = format!("needs stage {}", dep.name());
            run.mark(stage, CheckStatus::NotRun, &msg);
            (StageStatus::NotRun, Some(msg))
        } else {
            match run.run_stage(stage) {
                Ok(()) => (StageStatus::Ok, None),
                Err(e) => {
                    // Checks recorded before the failure stay; the rest are errors.
                    let done: Vec<String> =
                        run.checks.iter().filter(|c| c.stage == stage).map(|c| c.id.clone()).collect();
                    for (id, band) in run.bands(stage) {
                        if !done.contains(&id) {
                            run.checks.push(CheckResult {
                                id,
                                stage,
                                value: None,
                                target: band.target,
                                lower: band.lower,
                                upper: band.upper,
                                status: CheckStatus::Error,
                                note: Some(e.to_string()),
                            });
                        }
                    }
                    (StageStatus::Error, Some(e.to_string()))
                }
            }
        };
        let outputs = run.ctx.out.written()[before..].to_vec();
        stages.push(StageRecord { stage, status, runtime_s: t0.elapsed().as_secs_f64(), message, outputs });
    }
    let Run { ctx, checks, seeds, .. } = run;
    let all_passed = checks.iter().all(|c| matches!(c.status, CheckStatus::Pass | CheckStatus::NotRun));

    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            let opt = |v: Option<f64>| v.map_or(String::new(), num);
            vec![
                c.id.clone(),
                c.stage.name().into(),
                opt(c.value),
                num(c.target),
                opt(c.lower),
                opt(c.upper),
                serde_json::to_value(c.status).expect("serializable").as_str().unwrap_or_default().into(),
            ]
        })
        .collect();
    ctx.out.write_csv("summary.csv", &["check", "stage", "value", "target", "lower", "upper", "status"], &rows)?;
    let mut outputs = ctx.out.written();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        tool_version: VERSION.into(),
        config_digest: ctx.out.digest.clone(),
        started_unix_s: started,
        finished_unix_s: now_unix_s(),
        command: "reproduce-paper".into(),
        seeds,
        stages,
        checks,
        all_passed,
        outputs,
    };
    ctx.out.write_json("manifest.json", &manifest)?;

    let mut human = String::new();
    for s in &manifest.stages {
        let st = serde_json::to_value(&s.status).expect("serializable");
        human.push_str(&format!(
            "stage {:<12} {:<8} {:>7.2} s",
            s.stage.name(),
            st.as_str().unwrap_or(""),
            s.runtime_s
        ));
        if let Some(m) = &s.message {
            human.push_str(&format!("  ({m})"));
        }
        human.push('\n');
    }
    for c in &manifest.checks {
        let st = serde_json::to_value(c.status).expect("serializable");
        let band = format!("[{}, {}]", c.lower.map_or("-inf".into(), num), c.upper.map_or("+inf".into(), num));
        human.push_str(&format!(
            "{:<8} {:<24} {:>14} target {} {}\n",
            st.as_str().unwrap_or("").to_uppercase(),
            c.id,
            c.value.map_or("-".into(), |v| format!("{v:.6}")),
            num(c.target),
            band
        ));
    }
    human.push_str(if manifest.all_passed { "all checks passed\n" } else { "some checks failed\n" });
    let exit_code = if manifest.all_passed { 0 } else { crate::EXIT_CHECK_FAILED };
    Ok(Report { value: serde_json::to_value(&manifest)?, human, exit_code })
}
