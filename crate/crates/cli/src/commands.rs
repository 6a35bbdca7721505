use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use flatpop::asymptotics::{self, analyze, SpectralEstimate};
use flatpop::dual_solver::{dual_contraction_check, Grid};
use flatpop::flat_metric::{flat_norm, flat_norm_oracle};
use flatpop::forward_solver::{simulate, simulate_signed, SimConfig, SmoothTent, TestFunction, TestFunctionSeries};
use flatpop::io::{load_trajectory, save_trajectory, write_json};
use flatpop::model_config::validate_assumptions;
use flatpop::{AtomicMeasure, ModelIngredients, NormVariant, PiecewiseLinearFn};

use crate::input::{parse_range, read_json, SchemaError};
use crate::manifest::RunRecord;
use crate::plot::{line_chart, read_csv};
use crate::{Command, Demo, SimulateArgs};

/// A check ran to completion and failed.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

/// 2 for numerical failures, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<flatpop::Error>() {
            return if e.is_numerical() { 2 } else { 1 };
        }
        if cause.is::<SchemaError>() || cause.is::<CheckFailed>() {
            return 1;
        }
    }
    1
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn load_model(path: &Path) -> Result<ModelIngredients> {
    let ing: ModelIngredients = read_json(path)?;
    ing.check().with_context(|| format!("model {}", path.display()))?;
    Ok(ing)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: PathBuf, text: &str, rec: &mut RunRecord) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    rec.output(path);
    Ok(())
}

fn write_json_out<T: serde::Serialize>(path: PathBuf, value: &T, rec: &mut RunRecord) -> Result<()> {
    write_json(&path, value)?;
    rec.output(path);
    Ok(())
}

pub fn run(command: Command, argv: Vec<String>) -> Result<()> {
    match command {
        Command::Validate { model, out } => validate(&model, out.as_deref(), argv),
        Command::Simulate(args) => simulate_cmd(args, argv),
        Command::Distance {
            a,
            b,
            variant,
            oracle_h,
            witness,
            out,
        } => distance(&a, &b, variant.into(), oracle_h, witness.as_deref(), out.as_deref(), argv),
        Command::Dualcheck { model, phi, t, grid, out } => dualcheck(&model, &phi, t, &grid, out.as_deref(), argv),
        Command::Asymptotics { traj, window, tail, out } => {
            let out = out.unwrap_or_else(|| traj.join("asymptotics"));
            asymptotics_cmd(&traj, &window, tail, &out, argv)
        }
        Command::Spectrum { model, xmax, cells, out } => spectrum(&model, xmax, cells, &out, argv),
        Command::Weakcheck {
            traj,
            model,
            phi,
            tent,
            out,
        } => weakcheck(&traj, &model, &phi, &tent, out.as_deref(), argv),
        Command::Plot {
            csv,
            out,
            x,
            y,
            logy,
            title,
        } => {
            let table = read_csv(&csv)?;
            let title = title.unwrap_or_else(|| csv.display().to_string());
            line_chart(&table, &x, &y, logy, &title, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Demo { name, out, dt, t_end } => demo(name, out, dt, t_end, argv),
    }
}

fn validate(model: &Path, out: Option<&Path>, argv: Vec<String>) -> Result<()> {
    let ing: ModelIngredients = read_json(model)?;
    let report = validate_assumptions(&ing);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut rec = RunRecord::new("validate", argv);
        rec.input("model", model)?;
        write_json_out(dir.join("report.json"), &report, &mut rec)?;
        rec.finish(dir)?;
    }
    if !report.passed() {
        bail!(CheckFailed(format!("assumptions violated: {}", report.issues.join("; "))));
    }
    Ok(())
}

fn resolve_config(args: &SimulateArgs) -> Result<SimConfig> {
    let mut cfg: SimConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => SimConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field.clone() { cfg.$field = v; })*
        };
    }
    set!(dt, t_end, splitting, ode_substeps, coalesce_radius, prune, coalesce_every, checkpoint_every, max_particles);
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_cmd(args: SimulateArgs, argv: Vec<String>) -> Result<()> {
    let ing = load_model(&args.model)?;
    let mu0: AtomicMeasure = read_json(&args.mu0)?;
    let cfg = resolve_config(&args)?;
    let mut rec = RunRecord::new("simulate", argv);
    rec.input("model", &args.model)?;
    rec.input("mu0", &args.mu0)?;
    if let Some(p) = &args.config {
        rec.input("config", p)?;
    }
    rec.param("config", &cfg);
    rec.param("signed", args.signed);
    let traj = if args.signed {
        simulate_signed(&mu0, &ing, &cfg)?
    } else {
        simulate(&mu0, &ing, &cfg)?
    };
    create_dir(&args.out)?;
    write_json_out(args.out.join("model.json"), &ing, &mut rec)?;
    write_json_out(args.out.join("config.json"), &cfg, &mut rec)?;
    write_json_out(args.out.join("mu0.json"), &mu0, &mut rec)?;
    rec.outputs(save_trajectory(&args.out, &traj)?);
    rec.finish(&args.out)?;
    let last = traj.last();
    println!(
        "t = {}  mass = {}  atoms = {}  error_bound = {}",
        fmt(last.t),
        fmt(last.mass),
        last.measure.len(),
        fmt(last.error_bound)
    );
    Ok(())
}

fn distance(
    a: &Path,
    b: &Path,
    variant: NormVariant,
    oracle_h: Option<f64>,
    witness: Option<&Path>,
    out: Option<&Path>,
    argv: Vec<String>,
) -> Result<()> {
    let mu: AtomicMeasure = read_json(a)?;
    let nu: AtomicMeasure = read_json(b)?;
    let diff = mu.difference(&nu);
    let (value, wit) = flat_norm(&diff, variant)?;
    println!("{}", fmt(value));
    let oracle = match oracle_h {
        Some(h) => {
            let v = flat_norm_oracle(&diff, variant, h, 1.0)?;
            println!("oracle(h = {}) = {}", fmt(h), fmt(v));
            Some(v)
        }
        None => None,
    };
    if let Some(p) = witness {
        fs::write(p, wit.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut rec = RunRecord::new("distance", argv);
        rec.input("a", a)?;
        rec.input("b", b)?;
        rec.param("variant", variant);
        rec.param("oracle_h", oracle_h);
        let result = json!({"variant": variant, "distance": value, "oracle": oracle});
        write_json_out(dir.join("distance.json"), &result, &mut rec)?;
        write_text(dir.join("witness.csv"), &wit.to_csv(), &mut rec)?;
        rec.finish(dir)?;
    }
    Ok(())
}

fn dualcheck(model: &Path, phi: &Path, t: f64, grid: &str, out: Option<&Path>, argv: Vec<String>) -> Result<()> {
    let ing = load_model(model)?;
    let phi0: PiecewiseLinearFn = read_json(phi)?;
    let grid: Grid = grid.parse()?;
    let check = dual_contraction_check(&phi0, &ing, t, &grid)?;
    println!("norm_t = {}", fmt(check.norm_t));
    println!("bound = {}", fmt(check.bound));
    println!("kappa = {}", fmt(check.kappa));
    println!("{}", if check.pass { "PASS" } else { "FAIL" });
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut rec = RunRecord::new("dualcheck", argv);
        rec.input("model", model)?;
        rec.input("phi", phi)?;
        rec.param("t", t);
        rec.param("grid", grid);
        let psi = flatpop::dual_solver::adjoint_apply(&phi0, &ing.without_births(), t, &grid)?;
        write_json_out(dir.join("dualcheck.json"), &check, &mut rec)?;
        write_text(dir.join("psi.csv"), &psi.to_csv(), &mut rec)?;
        rec.finish(dir)?;
    }
    if !check.pass {
        bail!(CheckFailed(format!(
            "norm {} exceeds bound {} (grid step {})",
            check.norm_t, check.bound, check.grid_step
        )));
    }
    Ok(())
}

fn spectral_json(est: &SpectralEstimate, window: (f64, f64), tail: usize) -> serde_json::Value {
    let epsilon = if est.epsilon.is_infinite() {
        json!("inf")
    } else {
        json!(est.epsilon)
    };
    json!({
        "lambda_star": est.lambda_star,
        "lambda_r2": est.lambda_r2,
        "epsilon": epsilon,
        "M": est.m,
        "aeg_r2": est.aeg_r2,
        "classification": est.classification,
        "window": [window.0, window.1],
        "tail": tail,
    })
}

fn convergence_csv(est: &SpectralEstimate) -> String {
    let mut out = String::from("t,distance,increment\n");
    for (k, (t, d)) in est.tail_distances.iter().enumerate() {
        let inc = est.increments.get(k).map_or(f64::NAN, |p| p.1);
        out.push_str(&format!("{t:.16e},{d:.16e},{inc:.16e}\n"));
    }
    out
}

/// Diagnostics for `traj`, written into `out` (spectral.json, profile.json,
/// convergence.csv).
fn write_asymptotics(
    traj: &flatpop::forward_solver::Trajectory,
    window: (f64, f64),
    tail: usize,
    out: &Path,
    rec: &mut RunRecord,
) -> Result<SpectralEstimate> {
    let est = analyze(traj, window, tail)?;
    create_dir(out)?;
    write_json_out(out.join("spectral.json"), &spectral_json(&est, window, tail), rec)?;
    write_json_out(out.join("profile.json"), &est.profile, rec)?;
    write_text(out.join("convergence.csv"), &convergence_csv(&est), rec)?;
    Ok(est)
}

fn print_estimate(est: &SpectralEstimate) {
    println!("lambda* = {}  (R^2 = {})", fmt(est.lambda_star), fmt(est.lambda_r2));
    println!("epsilon = {}  M = {}  (R^2 = {})", fmt(est.epsilon), fmt(est.m), fmt(est.aeg_r2));
    println!("classification = {}", est.classification);
}

fn asymptotics_cmd(traj_dir: &Path, window: &str, tail: usize, out: &Path, argv: Vec<String>) -> Result<()> {
    let window = parse_range(window)?;
    let traj = load_trajectory(traj_dir)?;
    let mut rec = RunRecord::new("asymptotics", argv);
    rec.input("summary", &traj_dir.join("summary.json"))?;
    rec.param("window", window);
    rec.param("tail", tail);
    let est = write_asymptotics(&traj, window, tail, out, &mut rec)?;
    rec.finish(out)?;
    print_estimate(&est);
    Ok(())
}

fn spectrum(model: &Path, xmax: f64, cells: usize, out: &Path, argv: Vec<String>) -> Result<()> {
    let ing = load_model(model)?;
    let g = asymptotics::generator_matrix(&ing, xmax, cells)?;
    let e = asymptotics::leading_eigenpair(&g)?;
    create_dir(out)?;
    let mut rec = RunRecord::new("spectrum", argv);
    rec.input("model", model)?;
    rec.param("xmax", xmax);
    rec.param("cells", cells);
    let result = json!({
        "lambda_h": e.lambda,
        "h": g.h,
        "cells": g.n,
        "x_max": g.x_max,
        "iterations": e.iterations,
        "residual": e.residual,
    });
    write_json_out(out.join("spectrum.json"), &result, &mut rec)?;
    write_text(out.join("eigenvector.csv"), &e.to_csv(&g), &mut rec)?;
    rec.finish(out)?;
    println!("lambda_h = {}", fmt(e.lambda));
    Ok(())
}

fn parse_tent(s: &str) -> Result<SmoothTent> {
    let parts = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .with_context(|| format!("tent '{s}'"))?;
    let (center, half_width, height, rate) = match parts.as_slice() {
        [c, w, h] => (*c, *w, *h, 0.0),
        [c, w, h, r] => (*c, *w, *h, *r),
        _ => bail!("tent '{s}' must be center:half_width:height[:rate]"),
    };
    if !(half_width > 0.0) {
        bail!("tent '{s}' needs a positive half width");
    }
    Ok(SmoothTent {
        center,
        half_width,
        height,
        rate,
    })
}

fn weakcheck(
    traj_dir: &Path,
    model: &Path,
    phis: &[PathBuf],
    tents: &[String],
    out: Option<&Path>,
    argv: Vec<String>,
) -> Result<()> {
    let ing = load_model(model)?;
    let traj = load_trajectory(traj_dir)?;
    let times = traj.times();
    let mut named: Vec<(String, Box<dyn TestFunction>)> = Vec::new();
    for p in phis {
        let phi: PiecewiseLinearFn = read_json(p)?;
        named.push((p.display().to_string(), Box::new(TestFunctionSeries::stationary(phi, &times))));
    }
    for s in tents {
        named.push((format!("tent {s}"), Box::new(parse_tent(s)?)));
    }
    if named.is_empty() {
        let one = PiecewiseLinearFn::constant(1.0);
        named.push(("phi = 1".into(), Box::new(TestFunctionSeries::stationary(one, &times))));
    }
    let mut results = Vec::new();
    for (name, phi) in &named {
        let r = flatpop::forward_solver::weak_residual(&traj, phi.as_ref(), &ing)?;
        println!("{name}: residual = {}", fmt(r));
        results.push(json!({"test_function": name, "residual": r}));
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut rec = RunRecord::new("weakcheck", argv);
        rec.input("model", model)?;
        rec.input("summary", &traj_dir.join("summary.json"))?;
        for (k, p) in phis.iter().enumerate() {
            rec.input(&format!("phi{k}"), p)?;
        }
        rec.param("tents", tents);
        write_json_out(dir.join("weakcheck.json"), &results, &mut rec)?;
        rec.finish(dir)?;
    }
    Ok(())
}

fn demo(name: Demo, out: Option<PathBuf>, dt: f64, t_end: f64, argv: Vec<String>) -> Result<()> {
    let (beta0, c0, label) = match name {
        Demo::Lotka => (1.0, 0.5, "lotka"),
        Demo::Extinction => (0.2, 0.5, "extinction"),
    };
    let out = out.unwrap_or_else(|| PathBuf::from(format!("demo_{label}")));
    let ing = ModelIngredients::lotka(beta0, c0);
    let mu0 = AtomicMeasure::dirac(1.0);
    let cfg = SimConfig {
        checkpoint_every: ((0.5 / dt).round() as usize).max(1),
        ..SimConfig::new(dt, t_end)
    };
    cfg.validate()?;
    let window = (0.4 * t_end, t_end);
    let mut rec = RunRecord::new("demo", argv);
    rec.param("demo", label);
    rec.param("beta0", beta0);
    rec.param("c0", c0);
    rec.param("config", &cfg);
    rec.param("window", window);

    let traj = simulate(&mu0, &ing, &cfg)?;
    create_dir(&out)?;
    write_json_out(out.join("model.json"), &ing, &mut rec)?;
    write_json_out(out.join("config.json"), &cfg, &mut rec)?;
    write_json_out(out.join("mu0.json"), &mu0, &mut rec)?;
    rec.outputs(save_trajectory(&out, &traj)?);
    let tail = traj.checkpoints.len();
    rec.param("tail", tail);
    let est = write_asymptotics(&traj, window, tail, &out, &mut rec)?;
    let root = asymptotics::lotka_root(&PiecewiseLinearFn::constant(beta0), &ing.c, 1.0)?;
    rec.finish(&out)?;
    print_estimate(&est);
    println!("Euler-Lotka root = {}", fmt(root));
    println!("outputs in {}", out.display());
    Ok(())
}
