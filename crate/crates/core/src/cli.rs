//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 numerical failure (non-convergence under `--strict`), 4 failed `--check`.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fit::{fit_rate, FitScale};
use crate::grid::{lp_norm, GridFunction, GridSpec};
use crate::io::{cell, parse_config, write_record, PlotKind, RunConfig, RunRecord};
use crate::lp::{band_sum, band_sum_by_pieces, JumpSchedule, MollifierProfile, Side};
use crate::normlab::{
    decay_experiment, geometric_sum_constant, growth_experiment, interpolation_consistency_experiment, opnorm, probe,
    sw1_combine, sw_combine, weight_scaling_experiment, CommutatorSetting, Sw1Variant,
};
use crate::operators::{
    annulus_max, apply_c, apply_t_eps, dini_modulus, dini_norm, kernel_estimate_check, sample_triples,
    second_derivative_constant, second_derivative_ratio, LinearOperator, LipschitzSpec, LipschitzSymbol,
};
use crate::quad::integrate;
use crate::sphere::{SphereSymbol, SymbolSpec};
use crate::weights::{report_with, CubeFamily, Weight, WeightSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "roughsing", version, about = "Calderón commutators with rough kernels: norms, decay and weighted scaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// A_p and A_inf characteristics of the configured weights.
    Weights(RunArgs),
    /// Apply an operator to a seeded probe and store the output.
    Apply(RunArgs),
    /// Estimate an operator norm on each configured weight.
    Opnorm(RunArgs),
    /// Band norms of the commutator pieces against N(j-1).
    Decay(RunArgs),
    /// Weighted band norms normalized by the linear-in-N(j) bound.
    Growth(RunArgs),
    /// Weighted norm of the commutator against [w]_A2 over power weights.
    Scaling(RunArgs),
    /// Annulus maxima of the multipliers m_{i,k}.
    Multiplier(RunArgs),
    /// Size and smoothness ratios of the assembled piece kernels.
    Kernelcheck(RunArgs),
    /// Dini norms of the piece moduli.
    Dini(RunArgs),
    /// Interpolation with change of measure against the measured weighted norm.
    Interp(RunArgs),
    /// Fast invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root directory for `runs/<hash>/`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to ROUGHSING_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate the acceptance thresholds and exit 4 on violation.
    #[arg(long)]
    check: bool,
    /// Machine-readable stdout.
    #[arg(long)]
    json: bool,
    /// Treat non-converged norm estimates as failures.
    #[arg(long)]
    strict: bool,
    /// Skip writing the run directory.
    #[arg(long)]
    no_write: bool,
    #[arg(long)]
    dim: Option<usize>,
    /// Points per axis.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    /// Use `Omega = cos(m theta)`.
    #[arg(long)]
    harmonic: Option<i64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    j: Option<u32>,
    #[arg(long)]
    jmax: Option<u32>,
    /// Power-weight exponent; repeat for several.
    #[arg(long = "alpha", allow_hyphen_values = true)]
    alphas: Vec<f64>,
    #[arg(long)]
    c_n: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct SelftestArgs {
    #[arg(long)]
    json: bool,
    /// Run the suite against a profile whose psi has the wrong sign.
    #[arg(long)]
    inject_fault: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Locked(_) => EXIT_IO,
        Error::NonFinite { .. } | Error::WeightOverflow(_) | Error::InsufficientSamples { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Selftest(a) => selftest(&a),
        Command::Weights(a) => dispatch("weights", a),
        Command::Apply(a) => dispatch("apply", a),
        Command::Opnorm(a) => dispatch("opnorm", a),
        Command::Decay(a) => dispatch("decay", a),
        Command::Growth(a) => dispatch("growth", a),
        Command::Scaling(a) => dispatch("scaling", a),
        Command::Multiplier(a) => dispatch("multiplier", a),
        Command::Kernelcheck(a) => dispatch("kernelcheck", a),
        Command::Dini(a) => dispatch("dini", a),
        Command::Interp(a) => dispatch("interp", a),
    }
}

fn configure_threads(requested: Option<usize>) {
    let n = requested.or_else(|| std::env::var("ROUGHSING_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n.filter(|n| *n > 0) {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn set(obj: &mut Value, path: &[&str], v: Value) {
    let mut cur = obj;
    for key in &path[..path.len() - 1] {
        if !cur.get(*key).is_some_and(Value::is_object) {
            cur[*key] = json!({});
        }
        cur = cur.get_mut(*key).expect("just inserted");
    }
    cur[path[path.len() - 1]] = v;
}

/// Config file (or `{}`) with the command-line overrides applied.
fn effective_config(name: &str, a: &RunArgs) -> Result<RunConfig> {
    let mut doc: Value = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            // validate the file on its own first so duplicate keys are reported against it
            if let Err(e) = parse_config(&text) {
                if !matches!(&e, Error::Config { message, .. } if message.contains("missing field")) {
                    return Err(e);
                }
            }
            serde_json::from_str(&text)?
        }
        None => json!({}),
    };
    if !doc.is_object() {
        return Err(Error::Config { path: ".".into(), message: "config must be a JSON object".into() });
    }
    set(&mut doc, &["experiment", "name"], json!(name));
    if let Some(v) = a.seed {
        set(&mut doc, &["seed"], json!(v));
    }
    if let Some(v) = a.dim {
        set(&mut doc, &["grid", "n"], json!(v));
    }
    if let Some(v) = a.points {
        set(&mut doc, &["grid", "M"], json!(v));
    }
    if let Some(v) = a.half_width {
        set(&mut doc, &["grid", "L"], json!(v));
    }
    if let Some(m) = a.harmonic {
        set(&mut doc, &["Omega"], json!({"type": "harmonic", "m": m}));
    }
    if let Some(v) = a.p {
        set(&mut doc, &["experiment", "p"], json!(v));
    }
    if let Some(v) = &a.side {
        set(&mut doc, &["experiment", "side"], json!(v));
    }
    if let Some(v) = a.j {
        set(&mut doc, &["experiment", "j"], json!(v));
    }
    if let Some(v) = a.jmax {
        set(&mut doc, &["experiment", "jmax"], json!(v));
    }
    if !a.alphas.is_empty() {
        set(&mut doc, &["experiment", "alphas"], json!(a.alphas));
    }
    if let Some(v) = a.c_n {
        set(&mut doc, &["c_n"], json!(v));
    }
    if let Some(v) = a.trials {
        set(&mut doc, &["norm", "trials"], json!(v));
    }
    if let Some(v) = a.max_iterations {
        set(&mut doc, &["norm", "max_iterations"], json!(v));
    }
    parse_config(&doc.to_string())
}

/// Resolved inputs shared by the experiments.
struct Context {
    cfg: RunConfig,
    spec: GridSpec,
    omega: SphereSymbol,
    b: LipschitzSymbol,
    weights: Vec<Weight>,
}

impl Context {
    fn new(cfg: RunConfig) -> Result<Self> {
        let spec = cfg.grid.build()?;
        let omega = cfg.omega.build(spec.dim())?;
        let b = match &cfg.b {
            Some(s) => s.build(&spec)?,
            None => {
                let mut e = vec![0.0; spec.dim()];
                e[0] = 1.0;
                LipschitzSymbol::linear(spec, &e)?
            }
        };
        let weights = if cfg.weights.is_empty() {
            vec![Weight::unit(spec)]
        } else {
            cfg.weights.iter().map(|w| w.build(&spec)).collect::<Result<_>>()?
        };
        Ok(Self { cfg, spec, omega, b, weights })
    }

    fn setting(&self) -> Result<CommutatorSetting> {
        let mut s = CommutatorSetting::new(self.b.clone(), &self.omega, self.cfg.schedule.clone())?;
        s.q = self.cfg.q();
        if let Some((lo, hi)) = self.cfg.krange {
            s.bank = crate::operators::KernelBank::with_range(&self.spec, &self.omega, self.spec.dim() + 1, lo, hi)?;
        }
        Ok(s)
    }

    fn families(&self) -> (CubeFamily, CubeFamily) {
        let e = &self.cfg.experiment;
        let fam = match e.family_max_side {
            Some(s) => CubeFamily::dyadic_up_to(self.spec, s),
            None => CubeFamily::dyadic(self.spec),
        };
        let ainf = match e.ainf_max_side {
            Some(s) => CubeFamily::dyadic_up_to(self.spec, s),
            None => fam.clone(),
        };
        (fam, ainf)
    }

    fn weight_values(&self, w: &Weight) -> Result<Option<Vec<f64>>> {
        if w.is_unit() {
            Ok(None)
        } else {
            Ok(Some(w.values_on(&self.spec)?))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

struct Outcome {
    record: RunRecord,
    checks: Vec<Check>,
    converged: bool,
    /// Extra binary output written next to the record.
    output: Option<GridFunction>,
}

fn dispatch(name: &str, a: RunArgs) -> i32 {
    configure_threads(a.threads);
    let cfg = match effective_config(name, &a) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    eprintln!("effective config: {}", serde_json::to_string(&cfg).expect("serializes"));
    let start = Instant::now();
    let outcome = Context::new(cfg).and_then(|ctx| match name {
        "weights" => run_weights(&ctx),
        "apply" => run_apply(&ctx),
        "opnorm" => run_opnorm(&ctx),
        "decay" => run_decay(&ctx),
        "growth" => run_growth(&ctx),
        "scaling" => run_scaling(&ctx),
        "multiplier" => run_multiplier(&ctx),
        "kernelcheck" => run_kernelcheck(&ctx),
        "dini" => run_dini(&ctx),
        "interp" => run_interp(&ctx),
        _ => unreachable!("subcommands are fixed"),
    });
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let mut paths = Value::Null;
    if !a.no_write {
        match write_record(&outcome.record, &a.out) {
            Ok(p) => {
                if let Some(f) = &outcome.output {
                    if let Err(e) = f.write_binary(&p.dir.join("output.bin")) {
                        eprintln!("error: {e}");
                        return exit_code(&e);
                    }
                }
                paths = json!({"dir": p.dir, "manifest": p.manifest, "results": p.results, "plot": p.plot});
            }
            Err(e) => {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
        }
    }
    eprintln!("{name} finished in {:.2?}", start.elapsed());
    let payload = json!({
        "experiment": name,
        "config_hash": outcome.record.manifest.config_hash,
        "summary": outcome.record.manifest.summary,
        "fits": outcome.record.manifest.fits,
        "checks": outcome.checks,
        "converged": outcome.converged,
        "paths": paths,
    });
    if a.json || name == "weights" {
        println!("{}", if name == "weights" && !a.json { serde_json::to_string_pretty(&outcome.record.manifest.summary) } else { serde_json::to_string(&payload) }.expect("serializes"));
    } else {
        print!("{}", outcome.record.to_csv());
        for f in &outcome.record.manifest.fits {
            println!("fit {} vs {}: slope {:.4} (residual {:.2e}, {} samples)", f.experiment, f.abscissa, f.slope, f.residual, f.samples);
        }
        if a.check {
            for c in &outcome.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
        }
    }
    if a.strict && !outcome.converged {
        eprintln!("error: a norm estimate did not converge");
        return EXIT_NUMERICAL;
    }
    if a.check && outcome.checks.iter().any(|c| !c.passed) {
        for c in outcome.checks.iter().filter(|c| !c.passed) {
            eprintln!("check failed: {} ({})", c.name, c.detail);
        }
        return EXIT_CHECK;
    }
    EXIT_OK
}

fn run_weights(ctx: &Context) -> Result<Outcome> {
    let p = ctx.cfg.experiment.p;
    let (fam, ainf) = ctx.families();
    let mut record = RunRecord::new("weights", &ctx.cfg, &["weight", "p", "ap", "ainf_w", "ainf_sigma", "round", "curly"]);
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    for w in &ctx.weights {
        let r = report_with(w, p, &fam, &ainf)?;
        record.push(vec![r.weight.clone(), cell(p), cell(r.ap), cell(r.ainf_w), cell(r.ainf_sigma), cell(r.round), cell(r.curly)]);
        checks.push(check(&format!("ap_at_least_one[{}]", r.weight), r.ap >= 1.0 - 1e-12, format!("[w]_A_p = {}", r.ap)));
        if w.is_unit() {
            checks.push(check("unit_weight_exact", r.ap == 1.0, format!("[1]_A_p = {}", r.ap)));
        }
        reports.push(r);
    }
    record.manifest.summary = serde_json::to_value(&reports)?;
    Ok(Outcome { record, checks, converged: true, output: None })
}

fn run_apply(ctx: &Context) -> Result<Outcome> {
    let f = probe(&ctx.spec, ctx.cfg.seed);
    let e = &ctx.cfg.experiment;
    let mut record = RunRecord::new("apply", &ctx.cfg, &["k", "band_norm"]);
    let out = match e.operator.as_str() {
        "c" => {
            let r = apply_c(&ctx.b, &ctx.omega, &f, ctx.cfg.krange, false)?;
            for (k, n) in &r.band_norms {
                record.push(vec![k.to_string(), cell(*n)]);
            }
            r.value
        }
        "t_eps" => apply_t_eps(&ctx.omega, &f, e.eps.unwrap_or(ctx.spec.spacing()), ctx.spec.dim())?,
        _ => ctx.setting()?.piece(e.j, e.side)?.apply(&f),
    };
    let norm = lp_norm(&out, 2.0, None)?;
    record.manifest.summary = json!({"operator": e.operator, "input_norm": lp_norm(&f, 2.0, None)?, "output_norm": norm});
    Ok(Outcome { record, checks: Vec::new(), converged: true, output: Some(out) })
}

fn run_opnorm(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let setting = ctx.setting()?;
    let op = match e.operator.as_str() {
        "piece" => setting.piece(e.j, e.side)?,
        _ => setting.full(),
    };
    let mut record = RunRecord::new("opnorm", &ctx.cfg, &["weight", "p", "value", "iterations", "residual", "converged"]);
    let mut converged = true;
    let mut estimates = Vec::new();
    for w in &ctx.weights {
        let wv = ctx.weight_values(w)?;
        let est = opnorm(&op, e.p, wv.as_deref(), &w.descriptor(), &ctx.cfg.norm, ctx.cfg.seed)?;
        converged &= est.converged;
        record.push(vec![est.weight.clone(), cell(e.p), cell(est.value), est.iterations.to_string(), cell(est.residual), est.converged.to_string()]);
        estimates.push(est);
    }
    record.manifest.summary = json!({"operator": op.label(), "estimates": estimates});
    Ok(Outcome { record, checks: Vec::new(), converged, output: None })
}

/// `max |sum_j (T1 + T2 pieces) f - C f| / |C f|` on a seeded probe.
fn decomposition_error(setting: &CommutatorSetting, jmax: u32, seed: u64) -> Result<f64> {
    let f = probe(setting.spec(), seed);
    let full = setting.full().apply(&f);
    let mut sum = GridFunction::zeros(*setting.spec());
    for j in 1..=jmax {
        sum = sum.add(&setting.piece(j, Side::Low)?.apply(&f))?;
        sum = sum.add(&setting.piece(j, Side::High)?.apply(&f))?;
    }
    Ok(lp_norm(&sum.sub(&full)?, 2.0, None)? / lp_norm(&full, 2.0, None)?.max(f64::MIN_POSITIVE))
}

fn run_decay(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let setting = ctx.setting()?;
    let w = &ctx.weights[0];
    let d = decay_experiment(&setting, e.side, e.jmax, e.p, Some(w), &ctx.cfg.norm, ctx.cfg.seed)?;
    let mut record = RunRecord::new("decay", &ctx.cfg, &["j", "n_j", "n_prev", "norm", "iterations", "residual", "converged", "fit_norm"]);
    for r in &d.rows {
        let fit = d.fit.as_ref().map_or(f64::NAN, |f| (f.intercept + f.slope * r.n_prev as f64).exp2());
        record.push(vec![
            r.j.to_string(),
            r.n_j.to_string(),
            r.n_prev.to_string(),
            cell(r.estimate.value),
            r.estimate.iterations.to_string(),
            cell(r.estimate.residual),
            r.estimate.converged.to_string(),
            cell(fit),
        ]);
    }
    record.plot = Some(PlotKind::Decay);
    let converged = d.rows.iter().all(|r| r.estimate.converged);
    let decomposition = decomposition_error(&setting, e.jmax, ctx.cfg.seed)?;
    let rate = d.rate();
    let checks = vec![
        check("strictly_decreasing", d.strictly_decreasing, format!("norms {:?}", d.rows.iter().map(|r| r.estimate.value).collect::<Vec<_>>())),
        check("positive_rate", rate.is_some_and(|r| r > 0.0), format!("rate {rate:?}")),
        check("decomposition", decomposition <= ctx.cfg.tolerances.decomposition, format!("relative error {decomposition:e}")),
    ];
    record.manifest.fits = d.fit.iter().cloned().collect();
    record.manifest.summary = json!({"side": e.side, "rate": rate, "strictly_decreasing": d.strictly_decreasing, "decomposition_error": decomposition});
    Ok(Outcome { record, checks, converged, output: None })
}

fn run_growth(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let setting = ctx.setting()?;
    let w = &ctx.weights[0];
    let (fam, ainf) = ctx.families();
    let report = report_with(w, e.p, &fam, &ainf)?;
    let g = growth_experiment(&setting, e.side, e.jmax, e.p, w, &report, &ctx.cfg.norm, ctx.cfg.seed)?;
    let mut record = RunRecord::new("growth", &ctx.cfg, &["j", "n_j", "norm", "ratio"]);
    for r in &g.rows {
        record.push(vec![r.j.to_string(), r.n_j.to_string(), cell(r.norm), cell(r.ratio)]);
    }
    let checks = vec![check(
        "bounded_ratio",
        g.max_ratio <= ctx.cfg.tolerances.growth_ratio_max,
        format!("max ratio {}", g.max_ratio),
    )];
    record.manifest.fits = g.fit.iter().cloned().collect();
    record.manifest.summary = json!({"report": report, "max_ratio": g.max_ratio});
    Ok(Outcome { record, checks, converged: true, output: None })
}

fn run_scaling(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let setting = ctx.setting()?;
    let (fam, ainf) = ctx.families();
    let r = weight_scaling_experiment(&setting, &e.alphas, e.p, &fam, &ainf, &ctx.cfg.norm, ctx.cfg.seed)?;
    let mut record = RunRecord::new("scaling", &ctx.cfg, &["alpha", "ap", "round", "curly", "norm", "predicted", "ratio", "fit_norm"]);
    for row in &r.rows {
        let fit = (r.fit.intercept + r.fit.slope * row.report.ap.log2()).exp2();
        record.push(vec![
            cell(row.alpha),
            cell(row.report.ap),
            cell(row.report.round),
            cell(row.report.curly),
            cell(row.estimate.value),
            cell(row.predicted),
            cell(row.ratio),
            cell(fit),
        ]);
    }
    record.plot = Some(PlotKind::Scaling);
    let t = &ctx.cfg.tolerances;
    let checks = vec![
        check("slope", r.fit.slope <= t.scaling_slope_max, format!("slope {} <= {}", r.fit.slope, t.scaling_slope_max)),
        check("ratio_spread", r.ratio_spread <= t.ratio_spread_max, format!("spread {} <= {}", r.ratio_spread, t.ratio_spread_max)),
    ];
    let converged = r.rows.iter().all(|row| row.estimate.converged);
    record.manifest.fits = vec![r.fit.clone()];
    record.manifest.summary = json!({"slope": r.fit.slope, "ratio_spread": r.ratio_spread});
    Ok(Outcome { record, checks, converged, output: None })
}

fn run_multiplier(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let profile = MollifierProfile::new();
    let mut record = RunRecord::new("multiplier", &ctx.cfg, &["i", "k", "scale", "max_abs", "d2_ratio", "fit_max_abs"]);
    let is: Vec<i64> = (e.i_range.0..=e.i_range.1).collect();
    let rows: Vec<(i64, f64, f64)> = is
        .iter()
        .map(|&i| {
            (
                i,
                annulus_max(&ctx.omega, e.k, i, e.side, &profile, 24, 64),
                second_derivative_ratio(&ctx.omega, e.k, i, e.side, &profile, 8, 32),
            )
        })
        .collect();
    let x: Vec<f64> = rows.iter().map(|r| 2f64.powi(-r.0 as i32)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fit = fit_rate(&format!("multiplier_{}", e.side.label()), "2^-i", FitScale::LogLog, &x, &y)?;
    for (r, xv) in rows.iter().zip(&x) {
        let f = (fit.intercept + fit.slope * xv.log2()).exp2();
        record.push(vec![r.0.to_string(), e.k.to_string(), cell(*xv), cell(r.1), cell(r.2), cell(f)]);
    }
    record.plot = Some(PlotKind::Multiplier);
    let c = second_derivative_constant(ctx.omega.lq_norm(1.0)?, &profile);
    let d2 = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let slope_ok = match e.side {
        Side::High => fit.slope >= ctx.cfg.tolerances.high_slope_min,
        Side::Low => fit.slope > 0.0,
    };
    let checks = vec![
        check("slope", slope_ok, format!("slope {} ({} side)", fit.slope, e.side.label())),
        check("second_derivative", d2 <= c, format!("max |d2 m| / 2^k = {d2} <= {c}")),
    ];
    record.manifest.fits = vec![fit.clone()];
    record.manifest.summary = json!({"slope": fit.slope, "second_derivative_ratio": d2, "second_derivative_constant": c});
    Ok(Outcome { record, checks, converged: true, output: None })
}

fn run_kernelcheck(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let setting = ctx.setting()?;
    let samples = sample_triples(&ctx.spec, e.samples, ctx.cfg.seed);
    let mut record = RunRecord::new("kernelcheck", &ctx.cfg, &["j", "n_j", "size_ratio", "smooth_ratio", "smooth_ratio_finest"]);
    let mut worst = 0.0f64;
    for j in 1..=e.jmax {
        let r = kernel_estimate_check(&setting.b, &setting.bank, j, e.side, &setting.schedule, &setting.profile, &samples)?;
        worst = worst.max(r.size_ratio).max(r.smooth_ratio);
        record.push(vec![j.to_string(), r.n_of_j.to_string(), cell(r.size_ratio), cell(r.smooth_ratio), cell(r.smooth_ratio_finest)]);
    }
    let t = ctx.cfg.tolerances.kernel_ratio_max;
    let checks = vec![check("bounded_ratios", worst.is_finite() && worst <= t, format!("largest ratio {worst} <= {t}"))];
    record.manifest.summary = json!({"largest_ratio": worst, "samples": samples.len()});
    Ok(Outcome { record, checks, converged: true, output: None })
}

fn run_dini(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let omega_norm = ctx.omega.lq_norm(f64::INFINITY)?;
    let grad = ctx.b.grad_bound();
    let mut record = RunRecord::new("dini", &ctx.cfg, &["j", "n_j", "dini_norm", "quadrature", "scaled"]);
    let mut worst = 0.0f64;
    for j in 0..=e.jmax {
        let n = ctx.cfg.schedule.n(j) as u32;
        let closed = dini_norm(n);
        let split = 2f64.powi(-(n as i32));
        let quad = integrate(|t| dini_modulus(n, 1.0, 1.0).eval(t) / t, 0.0, split, 8) + integrate(|t| 1.0 / t, split, 1.0, 64);
        let quad = if n > 0 { quad } else { integrate(|t| dini_modulus(0, 1.0, 1.0).eval(t) / t, 0.0, 1.0, 8) };
        worst = worst.max((closed - quad).abs() / closed);
        record.push(vec![j.to_string(), n.to_string(), cell(closed), cell(quad), cell(dini_modulus(n, omega_norm, grad).dini_norm())]);
    }
    let checks = vec![check("closed_form", worst <= 1e-8, format!("largest relative gap {worst:e}"))];
    record.manifest.summary = json!({"largest_relative_gap": worst});
    Ok(Outcome { record, checks, converged: true, output: None })
}

fn run_interp(ctx: &Context) -> Result<Outcome> {
    let e = &ctx.cfg.experiment;
    let setting = ctx.setting()?;
    let w = &ctx.weights[0];
    let (fam, ainf) = ctx.families();
    let report = report_with(w, e.p, &fam, &ainf)?;
    let r = interpolation_consistency_experiment(
        &setting,
        e.j,
        e.p,
        w,
        &report,
        ctx.cfg.c_n,
        e.gamma.unwrap_or(0.5),
        ctx.cfg.tolerances.interpolation,
        &ctx.cfg.norm,
        ctx.cfg.seed,
    )?;
    let mut record = RunRecord::new("interp", &ctx.cfg, &["r", "sum", "ratio", "constant"]);
    for g in &r.geometric {
        record.push(vec![cell(g.r), cell(g.sum), cell(g.ratio), cell(r.geometric_constant)]);
    }
    let checks = vec![
        check("interpolation_bound", r.holds, format!("measured {} <= combined {}", r.measured, r.combined_proof)),
        check("geometric_sum", r.geometric_holds, format!("sum / R <= {}", r.geometric_constant)),
    ];
    record.manifest.summary = serde_json::to_value(&r)?;
    Ok(Outcome { record, checks, converged: true, output: None })
}

/// Invariant suite; the profile is injected so a broken identity can be exercised.
pub fn selftest_checks(profile: &MollifierProfile, seed: u64) -> Vec<(String, bool, String)> {
    let mut out = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| out.push((name.to_string(), ok, detail));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let spec = crate::grid::make_grid(2, 64, 4.0).expect("valid grid");
    let f = GridFunction::sample(spec, |x| {
        crate::grid::Complex::new((-(x[0] * x[0] + x[1] * x[1])).exp() * (3.0 * x[0]).cos(), 0.3 * x[1] * (-(x[1] * x[1])).exp())
    })
    .expect("finite");
    let back = f.dft().idft();
    let inv = back.sub(&f).expect("same grid").max_abs() / f.max_abs();
    push("dft_inversion", inv <= 1e-12, format!("relative error {inv:e}"));
    let lhs = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * spec.cell_volume();
    let rhs = f.dft().values().iter().map(|v| v.norm_sqr()).sum::<f64>();
    let pars = (lhs - rhs).abs() / lhs;
    push("parseval", pars <= 1e-12, format!("relative error {pars:e}"));

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r: f64 = rng.random_range(0.0..1.5);
        let d = profile.psi_hat(r).powi(3) + profile.phi_hat(2.0 * r) - profile.phi_hat(r);
        worst = worst.max(d.abs());
    }
    push("partition_of_unity", worst <= 1e-14, format!("largest defect {worst:e}"));

    let sched = JumpSchedule::Pow2;
    let tele = match (band_sum(&f, 0, 2, Side::Low, &sched, profile), band_sum_by_pieces(&f, 0, 2, Side::Low, &sched, profile)) {
        (Ok(a), Ok(b)) => a.sub(&b).expect("same grid").max_abs() / f.max_abs(),
        _ => f64::INFINITY,
    };
    push("telescoping", tele <= 1e-12, format!("relative error {tele:e}"));

    let omega = SphereSymbol::from_harmonic(2, 2, 1.0).expect("valid symbol");
    let m = omega.moments().max_abs();
    push("cancellation_moments", m <= 1e-12, format!("largest moment {m:e}"));
    let c = GridFunction::constant(spec, crate::grid::Complex::new(1.0, 0.0));
    let kill = apply_t_eps(&omega, &c, spec.spacing(), 2).map(|g| g.max_abs()).unwrap_or(f64::INFINITY);
    push("constants_killed", kill <= 1e-12, format!("max |T 1| = {kill:e}"));

    let sw = sw_combine(4.0, 9.0, 0.5);
    let sw1 = sw1_combine(4.0, 9.0, 1.0, Sw1Variant::Proof);
    let eq = (sw1_combine(2.5, 2.5, 0.3, Sw1Variant::Statement) - 2.5).abs();
    push("interpolation_arithmetic", sw == 6.0 && (sw1 - 6.0).abs() < 1e-14 && eq < 1e-14, format!("sw {sw}, sw1 {sw1}"));
    let dn = (dini_norm(4) - (1.0 + 4.0 * std::f64::consts::LN_2)).abs();
    push("dini_closed_form", dn < 1e-15, format!("gap {dn:e}"));
    let gc = geometric_sum_constant(0.5);
    push("geometric_constant", gc.is_finite() && gc > 0.0, format!("C = {gc}"));

    let cfg = r#"{"grid": {"n": 1, "M": 16, "L": 1}, "Omega": {"type": "line", "plus": 1, "minus": -1}}"#;
    let rt = parse_config(cfg).and_then(|c| parse_config(&c.to_json()).map(|d| c == d)).unwrap_or(false);
    push("config_round_trip", rt, String::new());
    let w = WeightSpec::Power { alpha: 0.5 };
    let b = LipschitzSpec::Linear { direction: vec![1.0] };
    let s = SymbolSpec::Line { plus: 1.0, minus: -1.0 };
    push(
        "spec_serialization",
        serde_json::to_string(&w).is_ok() && serde_json::to_string(&b).is_ok() && serde_json::to_string(&s).is_ok(),
        String::new(),
    );
    out
}

fn selftest(a: &SelftestArgs) -> i32 {
    let start = Instant::now();
    let profile = if a.inject_fault { MollifierProfile::with_flipped_psi() } else { MollifierProfile::new() };
    let results = selftest_checks(&profile, a.seed);
    let ok = results.iter().all(|r| r.1);
    if a.json {
        let list: Vec<Value> = results.iter().map(|(n, p, d)| json!({"name": n, "passed": p, "detail": d})).collect();
        println!("{}", json!({"passed": ok, "checks": list, "seconds": start.elapsed().as_secs_f64()}));
    } else {
        for (n, p, d) in &results {
            println!("{} {n} {d}", if *p { "PASS" } else { "FAIL" });
        }
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_CHECK
    }
}
