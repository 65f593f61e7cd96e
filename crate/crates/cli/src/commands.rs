//! One function per subcommand. Each writes its artifacts atomically under
//! the output directory and returns the summary it wrote.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use mml_core::discrete::{run_adam_da, run_adam_min, StopRule};
use mml_core::harness::compare::compare_models;
use mml_core::harness::error_order::{error_order, DEFAULT_INITS};
use mml_core::harness::svg::render_heatmap;
use mml_core::harness::sweep::{geomspace, linspace, run_sweep, run_sweep_with_workers, InitSpec, SweepAxis, SweepGrid, SweepResult};
use mml_core::harness::{find_stationary_point, random_inits};
use mml_core::igr::{avg_grad_norm_series, k_factor};
use mml_core::report::{fmt_f64, write_atomic, CsvTable};
use mml_core::spectral::{self, SpectralReport};
use mml_core::{AdamParams, JointPoint};

use crate::config::{AxisSpec, Command, GameSpec, Resolved};

/// Files written by a command plus its summary record.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Value,
    /// Checks that failed (selftest only).
    pub failures: usize,
}

/// JSON number, or `null` for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn params_json(p: &AdamParams) -> Value {
    json!({ "h": p.h, "beta": p.beta, "rho": p.rho, "eps": p.eps })
}

fn point_json(p: &JointPoint) -> Value {
    json!({ "x": p.x.as_slice(), "y": p.y.as_slice() })
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Self {
        Writer { dir: dir.to_path_buf(), files: Vec::new() }
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes()).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.text(name, &s)
    }

    fn finish(self, summary: Value) -> Outcome {
        Outcome { files: self.files, summary, failures: 0 }
    }
}

pub fn run(r: &Resolved) -> Result<Outcome> {
    match r.command {
        Command::Simulate => simulate(r),
        Command::Compare => compare(r),
        Command::Threshold => threshold(r),
        Command::Heatmap => heatmap(r),
        Command::EpsSweep => eps_sweep(r),
        Command::ErrorOrder => error_order_cmd(r),
        Command::Igr => igr(r),
        Command::Selftest => selftest(r),
    }
}

fn reference(r: &Resolved) -> JointPoint {
    let (d1, d2) = r.game.dims();
    r.equilibrium.clone().unwrap_or_else(|| JointPoint::origin(d1, d2))
}

fn simulate(r: &Resolved) -> Result<Outcome> {
    let stop = StopRule::default().with_reference(reference(r));
    let (traj, verdict) = if r.minimization {
        run_adam_min(&r.game, &r.params, &r.init, r.steps, &stop)?
    } else {
        run_adam_da(&r.game, &r.params, &r.init, r.steps, &stop)?
    };
    let mut w = Writer::new(&r.output_dir);
    w.text("trajectory.csv", &traj.to_csv())?;
    let summary = json!({
        "command": "simulate",
        "game": r.game_label,
        "algorithm": if r.minimization { "adam" } else { "adam-da" },
        "params": params_json(&r.params),
        "init": point_json(&r.init),
        "reference": point_json(&reference(r)),
        "max_steps": r.steps,
        "status": verdict.status.as_str(),
        "divergence": verdict.divergence.map(|k| format!("{k:?}")),
        "steps_used": verdict.steps_used,
        "initial_distance": num(verdict.initial_distance),
        "final_distance": num(verdict.final_distance),
        "fitted_rate": verdict.fitted_rate.map(num),
        "final_point": traj.last().map(point_json),
    });
    w.json("summary.json", &summary)?;
    Ok(w.finish(summary))
}

fn compare(r: &Resolved) -> Result<Outcome> {
    let c = compare_models(&r.game, &r.params, &r.init, r.steps)?;
    let mut w = Writer::new(&r.output_dir);
    w.text("adam.csv", &c.adam.to_csv())?;
    w.text("ode.csv", &c.ode.to_csv())?;
    w.text("sign.csv", &c.sign.to_csv())?;
    let mut t = CsvTable::new(&["step", "dist_ode", "dist_sign"]);
    for (k, (a, b)) in c.dist_ode.iter().zip(&c.dist_sign).enumerate() {
        t.push_cells([k.to_string(), fmt_f64(*a), fmt_f64(*b)]);
    }
    w.text("distances.csv", t.as_str())?;
    let max = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max);
    let summary = json!({
        "command": "compare",
        "game": r.game_label,
        "params": params_json(&r.params),
        "init": point_json(&r.init),
        "steps": r.steps,
        "truncated": c.truncated,
        "max_dist_ode": num(max(&c.dist_ode)),
        "max_dist_sign": num(max(&c.dist_sign)),
        "final_dist_ode": c.dist_ode.last().copied().map(num),
        "final_dist_sign": c.dist_sign.last().copied().map(num),
    });
    w.json("summary.json", &summary)?;
    Ok(w.finish(summary))
}

fn threshold(r: &Resolved) -> Result<Outcome> {
    let (point, located) = match &r.equilibrium {
        Some(p) => (p.clone(), false),
        None => (find_stationary_point(&r.game, &r.init, 1e-12, 100)?, true),
    };
    let report = SpectralReport::at(&r.game, &point, Some(&r.params))?;
    let th = spectral::threshold_report(&report.spectrum, r.params.beta, r.params.eps);
    let mut t = CsvTable::new(&["lambda_re", "lambda_im", "bound_continuous", "bound_discrete"]);
    for b in &th.per_eigen {
        t.push_cells([
            fmt_f64(b.lambda.re),
            fmt_f64(b.lambda.im),
            b.continuous.map_or_else(|| "none".to_string(), fmt_f64),
            b.discrete.map_or_else(|| "none".to_string(), fmt_f64),
        ]);
    }
    let mut notes = th.notes.clone();
    if located {
        notes.push("stationary point located by Newton iteration from the initial point".into());
    }
    if th.h_star_continuous == 0.0 && th.h_star_discrete == 0.0 {
        notes.push(
            "both thresholds are 0: the spectrum is purely imaginary (bilinear case), so Adam-DA diverges for every h, beta, rho and eps".into(),
        );
    }
    let mut w = Writer::new(&r.output_dir);
    w.text("threshold.csv", t.as_str())?;
    let summary = json!({
        "command": "threshold",
        "game": r.game_label,
        "params": params_json(&r.params),
        "point": point_json(&point),
        "h_star_continuous": num(th.h_star_continuous),
        "h_star_continuous_unconstrained": th.h_star_continuous.is_infinite(),
        "h_star_discrete": num(th.h_star_discrete),
        "h_star_discrete_unconstrained": th.h_star_discrete.is_infinite(),
        "beta_lower": th.beta_lower.map(num),
        "assumption_rotational": report.assumption_rotational,
        "assumption_generic": report.assumption_generic,
        "continuous_rate": num(spectral::continuous_rate(&report.j, &r.params)?),
        "spectral_radius": num(spectral::discrete_spectral_radius(&report.spectrum, r.params.beta, r.params.rho, r.params.eps, r.params.h)),
        "notes": notes,
    });
    w.json("summary.json", &summary)?;
    Ok(w.finish(summary))
}

fn catalog_id(r: &Resolved) -> Result<String> {
    match &r.game_spec {
        GameSpec::Id(id) => Ok(id.clone()),
        GameSpec::Quadratic { .. } => bail!("{} sweeps need a catalog game id", r.command.name()),
    }
}

fn axis(spec: &Option<AxisSpec>, default: Vec<f64>) -> Vec<f64> {
    spec.as_ref().map_or(default, AxisSpec::values)
}

fn sweep_grid(r: &Resolved, axis_kind: SweepAxis, axis_values: Vec<f64>, h_values: Vec<f64>) -> Result<SweepGrid> {
    let mut grid = SweepGrid::heatmap(&catalog_id(r)?, r.mode, vec![0.0], h_values)?;
    grid.axis = axis_kind;
    grid.axis_values = axis_values;
    grid.fixed = r.params;
    grid.seed = r.seed;
    grid.max_steps = r.grid.max_steps.unwrap_or(grid.max_steps);
    grid.init = match r.grid.random_init {
        Some(b) => InitSpec::Random { low: b.low, high: b.high },
        None => InitSpec::Fixed(r.init.clone()),
    };
    grid.validate()?;
    Ok(grid)
}

fn execute(grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    Ok(if workers == 0 { run_sweep(grid)? } else { run_sweep_with_workers(grid, workers)? })
}

fn sweep_summary(r: &Resolved, result: &SweepResult, predicted: Option<Vec<f64>>, seconds: f64) -> Value {
    let boundary: Vec<Value> = result
        .boundary_indices()
        .into_iter()
        .map(|b| b.map_or(Value::Null, |i| num(result.h_values[i])))
        .collect();
    let count = |v: &str| result.cells.iter().filter(|c| c.verdict.as_str() == v).count();
    json!({
        "command": r.command.name(),
        "game": r.game_label,
        "axis": result.axis.label(),
        "axis_values": result.axis_values,
        "h_values": result.h_values,
        "seed": r.seed,
        "fixed_params": params_json(&r.params),
        "boundary_h": boundary,
        "predicted_h_star": predicted.map(|v| v.into_iter().map(num).collect::<Vec<_>>()),
        "converged": count("converged"),
        "diverged": count("diverged"),
        "undecided": count("undecided"),
        "failed": count("failed"),
        "seconds": seconds,
    })
}

fn predicted_thresholds(r: &Resolved, result: &SweepResult) -> Result<Option<Vec<f64>>> {
    let Some(eq) = &r.equilibrium else { return Ok(None) };
    let spectrum = spectral::eigenvalues(&spectral::gda_jacobian(&r.game, eq)?)?;
    let continuous = matches!(r.mode, mml_core::harness::sweep::SweepMode::ContinuousSpectral | mml_core::harness::sweep::SweepMode::ContinuousSimulated);
    Ok(Some(
        result
            .axis_values
            .iter()
            .map(|&a| {
                let (beta, eps) = match result.axis {
                    SweepAxis::Beta => (a, r.params.eps),
                    SweepAxis::Eps => (r.params.beta, a),
                };
                if continuous {
                    spectral::continuous_h_threshold(&spectrum, beta, eps)
                } else {
                    spectral::discrete_h_threshold(&spectrum, beta, eps)
                }
            })
            .collect(),
    ))
}

fn write_sweep(r: &Resolved, name: &str, result: &SweepResult, seconds: f64) -> Result<Outcome> {
    let mut w = Writer::new(&r.output_dir);
    w.text(&format!("{name}.csv"), &result.to_csv())?;
    if r.emit_svg {
        w.text(&format!("{name}.svg"), &render_heatmap(result))?;
    }
    let predicted = if r.minimization { None } else { predicted_thresholds(r, result)? };
    let summary = sweep_summary(r, result, predicted, seconds);
    w.json("summary.json", &summary)?;
    Ok(w.finish(summary))
}

fn heatmap(r: &Resolved) -> Result<Outcome> {
    let betas = axis(&r.grid.beta, linspace(-0.9, 0.9, 40));
    let hs = axis(&r.grid.h, linspace(0.0015, 0.06, 40));
    let grid = sweep_grid(r, SweepAxis::Beta, betas, hs)?;
    let start = Instant::now();
    let result = execute(&grid, r.workers)?;
    write_sweep(r, "heatmap", &result, start.elapsed().as_secs_f64())
}

fn eps_sweep(r: &Resolved) -> Result<Outcome> {
    let eps = axis(&r.grid.eps, vec![1e-4, 4e-4, 1.6e-3, 6.4e-3]);
    let hs = axis(&r.grid.h, geomspace(0.002, 2f64.powf(0.125), 48));
    let grid = sweep_grid(r, SweepAxis::Eps, eps, hs)?;
    let start = Instant::now();
    let result = execute(&grid, r.workers)?;
    write_sweep(r, "eps_sweep", &result, start.elapsed().as_secs_f64())
}

fn error_order_cmd(r: &Resolved) -> Result<Outcome> {
    let spec = &r.error_order;
    let hs = spec.h_values.clone().unwrap_or_else(|| vec![0.02, 0.01, 0.005, 0.0025]);
    let substeps = spec.fine_substeps.unwrap_or(100);
    let count = spec.inits.unwrap_or(DEFAULT_INITS);
    let inits = random_inits(r.seed, count, r.game.dims(), -1.0, 1.0)?;
    let start = Instant::now();
    let study = error_order(&r.game, &r.params, &hs, substeps, &inits)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut t = CsvTable::new(&["h", "warmup", "err_adam_ode", "err_sign_ode"]);
    for i in 0..study.h_values.len() {
        t.push_cells([fmt_f64(study.h_values[i]), study.warmup[i].to_string(), fmt_f64(study.errors_adam_ode[i]), fmt_f64(study.errors_sign_ode[i])]);
    }
    let mut w = Writer::new(&r.output_dir);
    w.text("error_order.csv", t.as_str())?;
    let summary = json!({
        "command": "error-order",
        "game": r.game_label,
        "params": params_json(&r.params),
        "fine_substeps": substeps,
        "inits": count,
        "seed": r.seed,
        "slope_adam_ode": num(study.slope_adam),
        "slope_sign_ode": num(study.slope_sign),
        "r2_adam_ode": num(study.r2_adam),
        "r2_sign_ode": num(study.r2_sign),
        "excluded": study.excluded,
        "seconds": seconds,
    });
    w.json("summary.json", &summary)?;
    Ok(w.finish(summary))
}

fn igr(r: &Resolved) -> Result<Outcome> {
    let betas = axis(&r.grid.beta, vec![0.0, 0.5, 0.9]);
    let rhos = axis(&r.grid.rho, vec![0.5, 0.9, 0.999]);
    let cells: Vec<(f64, f64)> = betas.iter().flat_map(|b| rhos.iter().map(move |p| (*b, *p))).collect();
    for &(b, p) in &cells {
        r.params.with_beta(b).with_rho(p).validate()?;
    }
    // Only blow-up stops a run; every step is recorded.
    let stop = StopRule {
        converge_tol: f64::NEG_INFINITY,
        diverge_factor: f64::INFINITY,
        ..StopRule::default()
    }
    .with_reference(reference(r));
    let series: Vec<_> = cells
        .par_iter()
        .map(|&(b, p)| {
            let params = r.params.with_beta(b).with_rho(p);
            let (traj, _) = run_adam_da(&r.game, &params, &r.init, r.steps, &stop)?;
            Ok(avg_grad_norm_series(&traj, &r.game, Some(params)))
        })
        .collect::<Result<_>>()?;
    let mut w = Writer::new(&r.output_dir);
    let mut summary_csv = CsvTable::new(&["beta", "rho", "k", "final_avg_s"]);
    let mut runs = Vec::new();
    for (&(b, p), s) in cells.iter().zip(&series) {
        let mut t = CsvTable::new(&["step", "avg_s"]);
        for (k, v) in s.steps.iter().zip(&s.avg_s) {
            t.push_cells([k.to_string(), fmt_f64(*v)]);
        }
        let name = format!("igr_beta{}_rho{}.csv", fmt_f64(b), fmt_f64(p));
        w.text(&name, t.as_str())?;
        let last = s.final_value().unwrap_or(f64::NAN);
        summary_csv.push_row(&[b, p, k_factor(b, p), last]);
        runs.push(json!({ "beta": b, "rho": p, "k": k_factor(b, p), "final_avg_s": num(last), "file": name }));
    }
    w.text("igr_summary.csv", summary_csv.as_str())?;
    let summary = json!({
        "command": "igr",
        "game": r.game_label,
        "params": params_json(&r.params),
        "steps": r.steps,
        "runs": runs,
    });
    w.json("summary.json", &summary)?;
    Ok(w.finish(summary))
}

fn selftest(r: &Resolved) -> Result<Outcome> {
    let mut checks = crate::battery::run_all();
    checks.extend(crate::acceptance::run_all());
    for c in &checks {
        println!("{}", c.line());
    }
    let failures = checks.iter().filter(|c| !c.passed).count();
    println!("selftest: {} passed, {} failed", checks.len() - failures, failures);
    let mut w = Writer::new(&r.output_dir);
    let summary = json!({
        "command": "selftest",
        "passed": checks.len() - failures,
        "failed": failures,
        "checks": checks.iter().map(|c| json!({ "id": c.id, "title": c.title, "passed": c.passed, "detail": c.detail })).collect::<Vec<_>>(),
    });
    w.json("selftest.json", &summary)?;
    let mut out = w.finish(summary);
    out.failures = failures;
    Ok(out)
}
