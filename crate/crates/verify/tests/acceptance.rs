//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::time::Instant;

use clap::Parser;
use common::{layered_grid, stack_root_continued, symmetric_slab_te, Pol};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wspd_cli::config::ProjectConfig;
use wspd_cli::{execute, Cli};
use wspd_core::constants::photon_flux;
use wspd_core::design::{Evaluation, Evaluator};
use wspd_core::detector::{
    absorptance, analyze_power_sweep, efficiency_chain, invert_internal, jitter_deconvolve, kinetic_inductance,
    max_count_rate, recovery_fraction, recovery_time_constant, simulate_counting, CountRecord, SourceSpec,
};
use wspd_core::fabry_perot::{extract_coupling, fp_transmission, FringeData};
use wspd_core::geometry::CrossSection;
use wspd_core::mode::{assemble_operator, solve_modes, ModeSolution, Polarization};
use wspd_core::{
    derive_seed, maximize_alpha, solve_cross_section, DetectorModel, Error, ModeSelector, Parameter, ParameterRange,
    Result, SolverConfig, SweepSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Solved {
    alpha: f64,
    seconds: f64,
}

fn solve(
    xs: &CrossSection,
    cfg: &ProjectConfig,
    policy_factor: f64,
    selector: ModeSelector,
) -> Result<(Solved, ModeSolution)> {
    let policy = cfg.policy()?.refined(policy_factor);
    let t0 = Instant::now();
    let (_, modes) = solve_cross_section(xs, &policy, &cfg.solver_config())?;
    let seconds = t0.elapsed().as_secs_f64();
    let m = selector.pick(&modes).cloned().ok_or_else(|| Error::Domain(format!("no {selector:?} mode")))?;
    Ok((Solved { alpha: m.alpha_per_cm(), seconds }, m))
}

fn criterion_1(cfg: &ProjectConfig, reference: &mut Option<f64>) -> Result<Outcome> {
    let xs = cfg.cross_section()?;
    let (s, m) = solve(&xs, cfg, 1.0, ModeSelector::FundamentalTe)?;
    *reference = Some(s.alpha);
    let pass = (383.0..=519.0).contains(&s.alpha) && s.seconds < 60.0 && m.polarization == Polarization::TeLike;
    Ok(outcome(
        pass,
        format!(
            "alpha = {:.1} 1/cm (band [383, 519]), Im n_eff = {:.4e}, TE fraction {:.3}, {:.1} s",
            s.alpha, m.n_eff.im, m.te_fraction, s.seconds
        ),
    ))
}

fn criterion_2(cfg: &ProjectConfig, reference: Option<f64>) -> Result<Outcome> {
    let xs = cfg.cross_section()?;
    let base = match reference {
        Some(a) => a,
        None => solve(&xs, cfg, 1.0, ModeSelector::FundamentalTe)?.0.alpha,
    };
    let (fine, _) = solve(&xs, cfg, 2.0, ModeSelector::FundamentalTe)?;
    let mut wide = xs.clone();
    wide.window = xs.window.enlarged(1.25);
    let (big, _) = solve(&wide, cfg, 1.0, ModeSelector::FundamentalTe)?;
    let d_ref = (fine.alpha - base).abs() / base;
    let d_win = (big.alpha - base).abs() / base;
    Ok(outcome(
        d_ref < 0.02 && d_win < 0.01,
        format!(
            "2x refinement: {:.1} -> {:.1} 1/cm ({:.2}%, limit 2%); window +25%: {:.1} 1/cm ({:.3}%, limit 1%)",
            base,
            fine.alpha,
            d_ref * 100.0,
            big.alpha,
            d_win * 100.0
        ),
    ))
}

fn criterion_3() -> Result<Outcome> {
    const LAMBDA: f64 = 1.3e-6;
    let re = |n: f64| C::new(n, 0.0);
    // Symmetric slab, laterally uniform over a 60 um window.
    let (n1, n2, d) = (3.413, 3.03, 300e-9);
    let layers = [(re(n2), 2e-6, 40e-9), (re(n1), d, 2.5e-9), (re(n2), 2e-6, 40e-9)];
    let grid = layered_grid(&layers, 1e-9, 60e-6, 24, LAMBDA, n2);
    let op = assemble_operator(&grid, LAMBDA)?;
    let cfg = SolverConfig { num_modes: 4, target_index: Some(n1 - 0.05), ..Default::default() };
    let modes = solve_modes(&op, &cfg, n1)?;
    let te = modes
        .iter()
        .find(|m| m.polarization == Polarization::TeLike)
        .ok_or_else(|| Error::Domain("no TE slab mode".into()))?;
    let exact = symmetric_slab_te(n1, n2, d, LAMBDA);
    let dn = (te.n_eff.re - exact).abs();
    let max_im = modes.iter().map(|m| m.n_eff.im.abs()).fold(0.0, f64::max);

    // Absorbing film stack against the transfer-matrix root.
    let (gaas, algaas, nbn, siox, air) = (re(3.413), re(3.03), C::new(5.23, -5.82), re(1.447), re(1.0));
    let stack = [
        (algaas, 1.5e-6, 40e-9),
        (gaas, 300e-9, 5e-9),
        (nbn, 4.3e-9, 0.5e-9),
        (siox, 100e-9, 10e-9),
        (air, 1.5e-6, 40e-9),
    ];
    let grid = layered_grid(&stack, 0.5e-9, 60e-6, 24, LAMBDA, 3.03);
    let op = assemble_operator(&grid, LAMBDA)?;
    let film_layers = [(gaas, 300e-9), (nbn, 4.3e-9), (siox, 100e-9)];
    let exact_film = stack_root_continued(algaas, &film_layers, air, LAMBDA, Pol::Te, 3.15, 3.25).conj();
    let cfg = SolverConfig { num_modes: 2, target_index: Some(exact_film.re), ..Default::default() };
    let film = solve_modes(&op, &cfg, 3.413)?;
    let ft = film
        .iter()
        .find(|m| m.polarization == Polarization::TeLike)
        .ok_or_else(|| Error::Domain("no TE film mode".into()))?;
    let dn_film = (ft.n_eff.re - exact_film.re).abs();
    let rel_alpha = (ft.n_eff.im - exact_film.im).abs() / exact_film.im;

    Ok(outcome(
        dn <= 1e-4 && max_im < 1e-9 && dn_film <= 1e-4 && rel_alpha < 5e-3,
        format!(
            "slab |dn| = {dn:.2e} (limit 1e-4), lossless max |Im n_eff| = {max_im:.1e} (limit 1e-9), \
             absorbing film |dn| = {dn_film:.2e}, alpha error {:.3}%",
            rel_alpha * 100.0
        ),
    ))
}

fn criterion_4() -> Result<Outcome> {
    let a1 = absorptance(451.0, 51e-4)?;
    let a2 = absorptance(451.0, 102e-4)?;
    Ok(outcome(
        (a1 - 0.90).abs() <= 0.005 && (a2 - 0.99).abs() <= 0.002,
        format!("A(51 um) = {a1:.4} (0.90 +/- 0.005), A(102 um) = {a2:.4} (0.99 +/- 0.002)"),
    ))
}

fn criterion_5() -> Result<Outcome> {
    let m = DetectorModel::default();
    let lk = kinetic_inductance(&m)?;
    let tau = recovery_time_constant(&m)?;
    let rf = recovery_fraction(3.0 * tau, tau);
    let rate = max_count_rate(&m)?;
    let pass = (lk - 180e-9).abs() <= 1e-9 * 180e-9
        && (tau - 3.6e-9).abs() <= 1e-9 * 3.6e-9
        && (rf - 0.950).abs() <= 0.001
        && (rate * 1e-6 - 92.6).abs() < 0.05;
    Ok(outcome(
        pass,
        format!(
            "L_kin = {:.6} nH, tau = {:.6} ns, recovery(3 tau) = {rf:.4}, max rate = {:.2} MHz",
            lk * 1e9,
            tau * 1e9,
            rate * 1e-6
        ),
    ))
}

fn criterion_6() -> Result<Outcome> {
    let c = extract_coupling(&FringeData::new(0.061, 0.018))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(6, "fp-round-trip"));
    let cases = 2000;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let r = rng.random_range(0.05..0.8);
        let eta = rng.random_range(0.05..1.0);
        let f = FringeData::new(fp_transmission(r, eta, 1.0, 0.0), fp_transmission(r, eta, 1.0, PI));
        let back = extract_coupling(&f)?;
        worst = worst.max((back.reflectivity - r).abs()).max((back.mode_match - eta).abs());
    }
    Ok(outcome(
        (c.coupling - 0.174).abs() <= 0.001 && worst <= 1e-12,
        format!(
            "eta_c = {:.4} (0.174 +/- 0.001); round trip over {cases} cases, max error {worst:.1e} (limit 1e-12)",
            c.coupling
        ),
    ))
}

fn criterion_7() -> Result<Outcome> {
    let internal = invert_internal(0.197, 0.90)?;
    let b = efficiency_chain(0.174, 0.90, internal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, "efficiency-box"));
    let edges = [0.0, 1.0];
    let mut samples: Vec<[f64; 3]> = Vec::new();
    for &x in &edges {
        for &y in &edges {
            for &z in &edges {
                samples.push([x, y, z]);
            }
        }
    }
    samples.extend((0..100_000).map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()]));
    let mut violations = 0;
    for [c, a, i] in &samples {
        let e = efficiency_chain(*c, *a, *i)?;
        if !(e.sqe <= e.dqe && e.dqe <= e.absorptance) {
            violations += 1;
        }
    }
    Ok(outcome(
        (b.sqe - 0.034).abs() <= 0.001 && (internal - 0.219).abs() < 5e-4 && violations == 0,
        format!(
            "eta_int = {internal:.4}, SQE = {:.3}% (3.4 +/- 0.1 pp); ordering violations {violations}/{}",
            b.sqe * 100.0,
            samples.len()
        ),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let j = jitter_deconvolve(73e-12, 40e-12)? * 1e12;
    Ok(outcome((j - 61.1).abs() <= 0.1, format!("intrinsic jitter = {j:.2} ps (61.1 +/- 0.1)")))
}

fn criterion_9() -> Result<Outcome> {
    let (lambda, sqe, dead, dark) = (1300e-9, 0.034, 10.8e-9, 150.0);
    let powers: Vec<f64> = (0..10).map(|k| 1e-13 * 10f64.powf(2.0 * k as f64 / 9.0)).collect();
    let run = |seed_base: u64| -> Result<Vec<CountRecord>> {
        powers
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let s = SourceSpec { power_w: p, wavelength_m: lambda, duration_s: 0.2, jitter_sigma_s: 31e-12 };
                simulate_counting(&s, sqe, dark, dead, derive_seed(seed_base, &format!("power-{k}")))
            })
            .collect()
    };
    let records = run(9)?;
    let fit = analyze_power_sweep(&records)?;
    let slope_err = (fit.sqe / sqe - 1.0).abs();
    let deterministic = run(9)? == records;
    let mut outliers = 0;
    for (r, &p) in records.iter().zip(&powers) {
        let raw = sqe * photon_flux(p, lambda) + dark;
        let mean = raw / (1.0 + raw * dead) * r.metadata.duration_s;
        if (r.len() as f64 - mean).abs() > 4.0 * mean.sqrt() {
            outliers += 1;
        }
    }
    Ok(outcome(
        slope_err < 0.03 && outliers == 0 && deterministic,
        format!(
            "recovered SQE {:.5} vs {sqe} ({:.2}%, limit 3%); counts outside 4 sigma: {outliers}/10; \
             deterministic: {deterministic}",
            fit.sqe,
            slope_err * 100.0
        ),
    ))
}

fn criterion_10(cfg: &ProjectConfig) -> Result<Outcome> {
    let xs = cfg.cross_section()?;
    let thick = Parameter::GaasThickness.apply(&xs, xs.stack.top_layer().thickness + 50e-9)?;
    let (s, m) = solve(&thick, cfg, 1.0, ModeSelector::FirstTm)?;
    Ok(outcome(
        s.alpha > 500.0 && s.seconds < 60.0 && m.polarization == Polarization::TmLike,
        format!(
            "first TM-like mode: alpha = {:.1} 1/cm (> 500), TE fraction {:.3}, {:.1} s",
            s.alpha, m.te_fraction, s.seconds
        ),
    ))
}

struct Bump {
    width_peak: f64,
    depth_peak: f64,
}

impl Evaluator for Bump {
    fn evaluate(&self, xs: &CrossSection, _: ModeSelector) -> Result<Evaluation> {
        let dx = (xs.ridge.width - self.width_peak) / 300e-9;
        let dy = (xs.ridge.etch_depth - self.depth_peak) / 80e-9;
        Ok(Evaluation { n_eff: C::new(3.2, 0.0), alpha_per_cm: 600.0 * (-(dx * dx + dy * dy)).exp(), te_fraction: 1.0 })
    }
}

fn criterion_11(cfg: &ProjectConfig) -> Result<Outcome> {
    let base = cfg.cross_section()?;
    let range = |p, a: f64, b: f64, s: f64| ParameterRange { parameter: p, start: a, stop: b, step: s };
    let mut notes = Vec::new();
    let mut pass = true;
    // Unconstrained optimum inside the feasible region, then one beyond the margin.
    for (wp, dp, expect_w) in [(2.113e-6, 187e-9, 2.113e-6), (1.62e-6, 233e-9, 1.85e-6)] {
        let spec = SweepSpec::new(
            vec![
                range(Parameter::RidgeWidth, 1.5e-6, 2.5e-6, 100e-9),
                range(Parameter::EtchDepth, 100e-9, 300e-9, 50e-9),
            ],
            ModeSelector::FundamentalTe,
            0.5e-6,
        );
        let r = maximize_alpha(&base, &spec, &Bump { width_peak: wp, depth_peak: dp }, 5e-9)?;
        let Some(best) = r.best else {
            pass = false;
            notes.push("no optimum".to_string());
            continue;
        };
        let best_alpha = best.evaluation.map_or(f64::NAN, |e| e.alpha_per_cm);
        let margin_ok = best.margin.is_some_and(|m| m >= 0.5e-6 - 1e-12);
        let dominates = r
            .trace
            .iter()
            .filter(|t| t.row.feasible)
            .filter_map(|t| t.row.evaluation)
            .all(|e| e.alpha_per_cm <= best_alpha);
        let in_range = r
            .trace
            .iter()
            .all(|t| spec.ranges.iter().zip(&t.row.values).all(|(g, v)| *v >= g.start - 1e-15 && *v <= g.stop + 1e-15));
        let dw = (best.values[0] - expect_w).abs();
        let dd = (best.values[1] - dp).abs();
        pass &= margin_ok && dominates && in_range && dw <= 5e-9 && dd <= 5e-9;
        notes.push(format!(
            "peak ({:.0}, {:.0}) nm -> ({:.1}, {:.1}) nm, margin {:.3} um, dominates {} evaluations: {dominates}",
            wp * 1e9,
            dp * 1e9,
            best.values[0] * 1e9,
            best.values[1] * 1e9,
            best.margin.unwrap_or(f64::NAN) * 1e6,
            r.trace.len()
        ));
    }
    Ok(outcome(pass, notes.join("; ")))
}

fn criterion_12() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let t0 = Instant::now();
    let dir_arg = dir.path().to_string_lossy().into_owned();
    let cli = Cli::try_parse_from(["wspd", "--output-dir", &dir_arg, "reproduce-paper"])
        .map_err(|e| Error::Config(e.to_string()))?;
    let report = execute(&cli)?;
    let seconds = t0.elapsed().as_secs_f64();
    let failed: Vec<String> = report.value["checks"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter(|c| c["status"] != "pass")
                .map(|c| format!("{}={}", c["id"].as_str().unwrap_or("?"), c["value"]))
                .collect()
        })
        .unwrap_or_default();
    let manifest = dir.path().join("manifest.json").exists();
    let code = report.exit_code;
    Ok(outcome(
        code == 0 && failed.is_empty() && manifest && seconds < 300.0,
        format!(
            "exit {code}, {:.1} s (limit 300 s), manifest written: {manifest}, failing checks: {}",
            seconds,
            if failed.is_empty() { "none".to_string() } else { failed.join(", ") }
        ),
    ))
}

fn main() {
    let cfg = ProjectConfig::shipped();
    let mut reference = None;
    let titles = [
        "modal absorption",
        "grid and window convergence",
        "slab oracle",
        "absorptance",
        "electrical chain",
        "Fabry-Perot inversion",
        "efficiency chain",
        "jitter",
        "counting round trip",
        "TM design",
        "optimizer contracts",
        "reproduce-paper",
    ];
    let mut passed = 0;
    for (i, title) in titles.iter().enumerate() {
        let t0 = Instant::now();
        let r = match i + 1 {
            1 => criterion_1(&cfg, &mut reference),
            2 => criterion_2(&cfg, reference),
            3 => criterion_3(),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            10 => criterion_10(&cfg),
            11 => criterion_11(&cfg),
            _ => criterion_12(),
        };
        let r = r.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        passed += usize::from(r.pass);
        println!(
            "criterion {:>2} [{}] {title}: {} ({:.1} s)",
            i + 1,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", titles.len());
    if passed != titles.len() {
        std::process::exit(1);
    }
}
