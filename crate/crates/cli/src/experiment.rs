//! Executes validated experiments and produces their artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use pilothop_core::bounds::{r1_bar, r2_bar, r3, ra, R1Evaluator};
use pilothop_core::optimizer::optimize;
use pilothop_core::protocol_sim::{run_frame, simulate, FrameReport, SimConfig};
use pilothop_core::scaling_laws::{solve_ab, verify_scaling, Case};
use pilothop_core::{LargeScaleModel, Method, OperatingPoint, OptimizationResult};
use rayon::prelude::*;

use crate::config::{load, Axis, Experiment, ExperimentKind, SystemConfig};
use crate::error::CliError;
use crate::output::{fmt_sig9, Table};
use crate::trace::{write_frame, write_header, FrameRecord, TraceHeader};

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    fn csv(name: &str, t: &Table) -> Self {
        Self {
            name: name.into(),
            contents: t.to_csv().into_bytes(),
        }
    }

    pub fn text(&self) -> &str {
        std::str::from_utf8(&self.contents).unwrap_or("")
    }
}

/// Reads, validates and runs a spec file, writing its artifacts.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    run(&load(&text)?, opts)
}

/// Runs `exp` and writes its artifacts to the output directory.
pub fn run(exp: &Experiment, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| exp.spec.output.clone());
    let artifacts = compute(exp, opts)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            fs::write(&path, &a.contents).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Runs `exp` and returns its artifacts without touching the filesystem.
pub fn compute(exp: &Experiment, opts: &RunOptions) -> Result<Vec<Artifact>, CliError> {
    let mut exp = exp.clone();
    if let Some(seed) = opts.seed {
        exp.system.seed = seed;
        exp.system.mc.seed = seed;
    }
    match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?
            .install(|| execute(&exp)),
        None => execute(&exp),
    }
}

fn execute(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    match exp.spec.kind {
        ExperimentKind::BoundEval => bound_eval(exp),
        ExperimentKind::Optimize => optimize_kind(exp),
        ExperimentKind::Sweep => sweep(exp),
        ExperimentKind::ScalingVerify => scaling(exp),
        ExperimentKind::Simulate => simulate_kind(exp),
        ExperimentKind::Compare => compare(exp),
    }
}

fn template(sys: &SystemConfig) -> OperatingPoint {
    OperatingPoint {
        m: sys.m,
        k: sys.k,
        tau_u: sys.tau_u,
        tau_p: sys.tau_p.unwrap_or(1).min(sys.tau_u),
        p_a: sys.p_a.unwrap_or(0.0),
    }
}

/// `sys` with the sweep variable set to `v`.
pub fn with_axis(sys: &SystemConfig, axis: Axis, v: f64) -> SystemConfig {
    let mut s = sys.clone();
    let d = sys.model.delta_bar();
    match axis {
        Axis::TauU => s.tau_u = v as usize,
        Axis::M => s.m = v as usize,
        Axis::K => s.k = v as u64,
        Axis::TauP => s.tau_p = Some(v as usize),
        Axis::PA => s.p_a = Some(v),
        Axis::Alpha => {
            s.model = match sys.model {
                LargeScaleModel::Model3 { .. } => LargeScaleModel::model3(d, v),
                _ => LargeScaleModel::model1(d, v),
            }
        }
        Axis::SigmaV2 => s.model = LargeScaleModel::model2(d, v),
        Axis::DeltaBar => {
            s.model = match sys.model {
                LargeScaleModel::Model1 { alpha, .. } => LargeScaleModel::model1(v, alpha),
                LargeScaleModel::Model2 { sigma_v2, .. } => LargeScaleModel::model2(v, sigma_v2),
                LargeScaleModel::Model3 { alpha, .. } => LargeScaleModel::model3(v, alpha),
            }
        }
    }
    s
}

/// Systems along the sweep, or just the base system.
fn sweep_points(exp: &Experiment) -> Vec<(Option<f64>, SystemConfig)> {
    match &exp.spec.sweep {
        Some(w) => w
            .values
            .iter()
            .map(|&v| (Some(v), with_axis(&exp.system, w.axis, v)))
            .collect(),
        None => vec![(None, exp.system.clone())],
    }
}

fn optimize_all(exp: &Experiment, sys: &SystemConfig) -> Result<Vec<OptimizationResult>, CliError> {
    let t = template(sys);
    let grid = exp.spec.grid_for(sys.tau_u, sys.k);
    exp.spec
        .methods
        .iter()
        .map(|&m| Ok(optimize(m, &t, &sys.model, &grid, &sys.mc)?))
        .collect()
}

/// R1 at each operating point from one shared pool of draws.
fn r1_at(sys: &SystemConfig, points: &[OperatingPoint]) -> Result<Vec<(f64, f64)>, CliError> {
    let mut need = 1;
    for p in points {
        need = need.max(R1Evaluator::required_active(p, sys.mc.eps_tail)?);
    }
    let ev = R1Evaluator::new(&sys.model, &sys.mc, need)?;
    points
        .iter()
        .map(|p| {
            let r = ev.evaluate(p)?;
            Ok((r.value, r.mc_std_err))
        })
        .collect()
}

fn int(x: usize) -> String {
    x.to_string()
}

fn sweep_header<'a>(exp: &Experiment, rest: &[&'a str]) -> Vec<&'a str> {
    let mut h: Vec<&str> = exp.spec.sweep.iter().map(|w| w.axis.as_str()).collect();
    h.extend_from_slice(rest);
    h
}

fn sweep_cell(v: Option<f64>) -> Vec<String> {
    v.map(fmt_sig9).into_iter().collect()
}

fn bound_eval(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    let header = sweep_header(
        exp,
        &[
            "point",
            "tau_p",
            "p_aK",
            "R1",
            "R1_std_err",
            "R2",
            "R3",
            "Ra",
        ],
    );
    let mut t = Table::new(&header);
    for (v, sys) in sweep_points(exp) {
        let mut labelled: Vec<(String, OperatingPoint)> = Vec::new();
        if exp.spec.methods.is_empty() {
            labelled.push(("given".into(), template(&sys)));
        } else {
            for r in optimize_all(exp, &sys)? {
                labelled.push((r.method.to_string(), r.apply(&template(&sys))));
            }
        }
        for (label, op) in labelled {
            op.validate()?;
            let r1 = r1_bar(&op, &sys.model, &sys.mc)?;
            let r2 = r2_bar(&op, &sys.model, &sys.mc)?.value;
            // R3 is undefined below one expected active device.
            let r3v = r3(&op, &sys.model)
                .map(|r| fmt_sig9(r.value))
                .unwrap_or_default();
            let rav = ra(&op, &sys.model)?.value;
            let mut row = sweep_cell(v);
            row.extend([
                label,
                int(op.tau_p),
                fmt_sig9(op.pak()),
                fmt_sig9(r1.value),
                fmt_sig9(r1.mc_std_err),
                fmt_sig9(r2),
                r3v,
                fmt_sig9(rav),
            ]);
            t.push(row);
        }
    }
    Ok(vec![Artifact::csv("bounds.csv", &t)])
}

struct MethodRow {
    sweep: Option<f64>,
    method: Method,
    rate: f64,
    std_err: f64,
    tau_p: usize,
    pak: f64,
    method_rate: f64,
    evaluations: usize,
}

fn method_rows(exp: &Experiment) -> Result<Vec<MethodRow>, CliError> {
    let mut rows = Vec::new();
    for (v, sys) in sweep_points(exp) {
        let results = optimize_all(exp, &sys)?;
        let points: Vec<OperatingPoint> =
            results.iter().map(|r| r.apply(&template(&sys))).collect();
        let r1 = r1_at(&sys, &points)?;
        for ((res, op), (rate, se)) in results.iter().zip(&points).zip(r1) {
            rows.push(MethodRow {
                sweep: v,
                method: res.method,
                rate,
                std_err: se,
                tau_p: op.tau_p,
                pak: op.pak(),
                method_rate: res.rate,
                evaluations: res.evaluations,
            });
        }
    }
    Ok(rows)
}

fn optimize_kind(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    let mut t = Table::new(&[
        "method",
        "rate",
        "tau_p_opt",
        "p_aK_opt",
        "mc_std_err",
        "method_rate",
        "evaluations",
    ]);
    for r in method_rows(exp)? {
        t.push(vec![
            r.method.to_string(),
            fmt_sig9(r.rate),
            int(r.tau_p),
            fmt_sig9(r.pak),
            fmt_sig9(r.std_err),
            fmt_sig9(r.method_rate),
            int(r.evaluations),
        ]);
    }
    Ok(vec![Artifact::csv("optimize.csv", &t)])
}

fn sweep(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    let rows = method_rows(exp)?;
    let mut rate = Table::new(&sweep_header(exp, &["method", "rate", "mc_std_err"]));
    let mut tau = Table::new(&sweep_header(exp, &["method", "tau_p_opt"]));
    let mut pak = Table::new(&sweep_header(exp, &["method", "p_aK_opt"]));
    let mut summary = Table::new(&sweep_header(
        exp,
        &[
            "method",
            "rate",
            "tau_p_opt",
            "p_aK_opt",
            "mc_std_err",
            "method_rate",
            "evaluations",
        ],
    ));
    for r in &rows {
        let lead = || {
            let mut c = sweep_cell(r.sweep);
            c.push(r.method.to_string());
            c
        };
        let mut row = lead();
        row.extend([fmt_sig9(r.rate), fmt_sig9(r.std_err)]);
        rate.push(row);
        let mut row = lead();
        row.push(int(r.tau_p));
        tau.push(row);
        let mut row = lead();
        row.push(fmt_sig9(r.pak));
        pak.push(row);
        let mut row = lead();
        row.extend([
            fmt_sig9(r.rate),
            int(r.tau_p),
            fmt_sig9(r.pak),
            fmt_sig9(r.std_err),
            fmt_sig9(r.method_rate),
            int(r.evaluations),
        ]);
        summary.push(row);
    }
    Ok(vec![
        Artifact::csv("rate.csv", &rate),
        Artifact::csv("tau_p.csv", &tau),
        Artifact::csv("pak.csv", &pak),
        Artifact::csv("summary.csv", &summary),
    ])
}

fn scaling(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    let s = exp
        .spec
        .scaling
        .as_ref()
        .expect("validated scaling settings");
    let mut out = Vec::new();
    if !s.ladder.is_empty() {
        let rep = verify_scaling(s.case, &exp.system.model, &s.ladder)?;
        let mut t = Table::new(&[
            "M",
            "tau_u",
            "tau_p_opt",
            "p_aK_opt",
            "rate_opt",
            "tau_p_pred",
            "p_aK_pred",
            "rate_pred",
            "tau_p_err",
            "p_aK_err",
            "rate_err",
            "rate_err_ln2",
        ]);
        for r in &rep.rows {
            t.push(vec![
                int(r.m),
                int(r.tau_u),
                int(r.tau_p_opt),
                fmt_sig9(r.pak_opt),
                fmt_sig9(r.rate_opt),
                fmt_sig9(r.prediction.tau_p),
                fmt_sig9(r.prediction.pak),
                fmt_sig9(r.prediction.rate),
                fmt_sig9(r.tau_p_err),
                fmt_sig9(r.pak_err),
                fmt_sig9(r.rate_err),
                if matches!(s.case, Case::Case2) {
                    fmt_sig9(r.rate_err_log2)
                } else {
                    String::new()
                },
            ]);
        }
        out.push(Artifact::csv("scaling.csv", &t));
    }
    if !s.deltas.is_empty() {
        let mut t = Table::new(&["delta", "a", "b", "rate_scale"]);
        for &d in &s.deltas {
            let ab = solve_ab(d, &exp.system.model)?;
            t.push(vec![
                fmt_sig9(d),
                fmt_sig9(ab.a),
                fmt_sig9(ab.b),
                fmt_sig9(ab.rate_scale),
            ]);
        }
        out.push(Artifact::csv("ab.csv", &t));
    }
    Ok(out)
}

fn sim_config(exp: &Experiment, op: &OperatingPoint) -> SimConfig {
    let s = &exp.spec.simulation;
    let mut c = SimConfig::new(op, s.n_slots);
    c.threshold = s.threshold;
    c.rho = s.rho;
    c.estimator = s.estimator;
    c.beta_error = s.beta_error;
    c
}

/// Operating point for simulations: the first method's optimum, or the
/// configured point.
fn sim_point(exp: &Experiment) -> Result<OperatingPoint, CliError> {
    let t = template(&exp.system);
    match exp.spec.methods.first() {
        Some(&m) => {
            let grid = exp.spec.grid_for(exp.system.tau_u, exp.system.k);
            Ok(optimize(m, &t, &exp.system.model, &grid, &exp.system.mc)?.apply(&t))
        }
        None => Ok(t),
    }
}

fn simulate_kind(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    let op = sim_point(exp)?;
    let mut cfg = sim_config(exp, &op);
    cfg.record_trace = exp.spec.simulation.trace;
    let sys = &exp.system;
    let reports: Vec<FrameReport> = (0..exp.spec.simulation.n_frames as u64)
        .into_par_iter()
        .map(|f| run_frame(&cfg, &sys.model, sys.seed, f))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&[
        "frame",
        "tau_p",
        "p_aK",
        "active",
        "identified",
        "missed",
        "false_identifications",
        "sum_rate",
    ]);
    for r in &reports {
        t.push(vec![
            r.frame.to_string(),
            int(op.tau_p),
            fmt_sig9(op.pak()),
            int(r.active.len()),
            int(r.identified.len()),
            int(r.missed().len()),
            int(r.false_identifications().len()),
            fmt_sig9(r.sum_rate),
        ]);
    }
    let mut out = vec![Artifact::csv("simulate.csv", &t)];
    if cfg.record_trace {
        let mut bytes = Vec::new();
        let header = TraceHeader {
            m: sys.m as u32,
            k: sys.k,
            tau_u: op.tau_u as u32,
            tau_p: op.tau_p as u32,
            seed: sys.seed,
        };
        let io = |e| CliError::Numeric(format!("trace encoding: {e}"));
        write_header(&mut bytes, &header).map_err(io)?;
        for r in &reports {
            let rec = FrameRecord::from_report(r).expect("trace was recorded");
            write_frame(&mut bytes, &rec).map_err(io)?;
        }
        out.push(Artifact {
            name: "trace.bin".into(),
            contents: bytes,
        });
    }
    Ok(out)
}

fn compare(exp: &Experiment) -> Result<Vec<Artifact>, CliError> {
    let sys = &exp.system;
    let mut t = Table::new(&[
        "method",
        "tau_p_opt",
        "p_aK_opt",
        "empirical_rate",
        "empirical_std_err",
        "r1_bar",
        "r1_std_err",
        "missed",
        "false_identifications",
        "active_total",
        "above_bound_3sigma",
    ]);
    for r in optimize_all(exp, sys)? {
        let op = r.apply(&template(sys));
        let emp = simulate(
            &sim_config(exp, &op),
            &sys.model,
            exp.spec.simulation.n_frames,
            sys.seed,
        )?;
        let bound = r1_bar(&op, &sys.model, &sys.mc)?;
        let sigma = (emp.std_err.powi(2) + bound.mc_std_err.powi(2)).sqrt();
        t.push(vec![
            r.method.to_string(),
            int(op.tau_p),
            fmt_sig9(op.pak()),
            fmt_sig9(emp.mean_sum_rate),
            fmt_sig9(emp.std_err),
            fmt_sig9(bound.value),
            fmt_sig9(bound.mc_std_err),
            int(emp.missed),
            int(emp.false_identifications),
            int(emp.active_total),
            (emp.mean_sum_rate >= bound.value - 3.0 * sigma).to_string(),
        ]);
    }
    Ok(vec![Artifact::csv("compare.csv", &t)])
}
