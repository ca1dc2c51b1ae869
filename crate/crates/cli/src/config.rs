//! Experiment spec files.
//!
//! A spec is TOML with a `[system]` table (the scenario) and an
//! `[experiment]` table (what to run). Parsing is strict: unknown keys are
//! parse errors. [`validate`] turns a parsed file into typed
//! [`SystemConfig`] and [`ExperimentSpec`] values, or a list of
//! diagnostics naming the offending fields.
//!
//! ```toml
//! [system]
//! M = 100
//! K = 800
//! tau_u = 100
//! seed = 7
//!
//! [system.model]
//! kind = "model3"
//! alpha = 0.25
//!
//! [experiment]
//! kind = "sweep"
//! methods = ["R1-opt", "Ra-opt", "Rh0", "Rh-1D"]
//! output = "out/slot-sweep"
//!
//! [experiment.sweep]
//! axis = "tau_u"
//! values = [60, 120, 180, 240, 300]
//! ```

use std::fmt;
use std::path::PathBuf;

use pilothop_core::channel_models::DEFAULT_DELTA_BAR;
use pilothop_core::optimizer::GridSpec;
use pilothop_core::protocol_sim::{DetectionThreshold, Estimator};
use pilothop_core::scaling_laws::Case;
use pilothop_core::{LargeScaleModel, McConfig, Method};
use serde::Deserialize;

use crate::error::{CliError, ParseError};

const DEFAULT_K: i64 = 800;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub system: SystemTable,
    pub experiment: ExperimentTable,
}

// Integers are signed so that negative values reach validation and get a
// field-level diagnostic instead of a type error.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemTable {
    #[serde(rename = "M", alias = "m")]
    pub m: i64,
    #[serde(rename = "K", alias = "k", default = "default_k")]
    pub k: i64,
    pub tau_u: i64,
    pub tau_p: Option<i64>,
    pub p_a: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelTable,
    #[serde(default)]
    pub mc: McTable,
}

fn default_k() -> i64 {
    DEFAULT_K
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Model1,
    Model2,
    Model3,
    /// Every device at `delta_bar`.
    Perfect,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTable {
    pub kind: ModelKind,
    pub alpha: Option<f64>,
    pub sigma_v2: Option<f64>,
    #[serde(default = "default_delta_bar")]
    pub delta_bar: f64,
}

fn default_delta_bar() -> f64 {
    DEFAULT_DELTA_BAR
}

impl Default for ModelTable {
    fn default() -> Self {
        Self {
            kind: ModelKind::Perfect,
            alpha: None,
            sigma_v2: None,
            delta_bar: DEFAULT_DELTA_BAR,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McTable {
    #[serde(default = "default_samples")]
    pub n_beta_samples: i64,
    #[serde(default = "default_eps")]
    pub eps_tail: f64,
}

fn default_samples() -> i64 {
    McConfig::default().n_beta_samples as i64
}

fn default_eps() -> f64 {
    McConfig::default().eps_tail
}

impl Default for McTable {
    fn default() -> Self {
        Self {
            n_beta_samples: default_samples(),
            eps_tail: default_eps(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BoundEval,
    Optimize,
    Sweep,
    ScalingVerify,
    Simulate,
    Compare,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::BoundEval => "bound-eval",
            ExperimentKind::Optimize => "optimize",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::ScalingVerify => "scaling-verify",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentTable {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub methods: Vec<String>,
    pub output: Option<String>,
    pub sweep: Option<SweepTable>,
    pub grid: Option<GridTable>,
    pub simulation: Option<SimulationTable>,
    pub scaling: Option<ScalingTable>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTable {
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    pub n_tau: Option<i64>,
    pub n_pak: Option<i64>,
    pub n_refine: Option<i64>,
    pub refinements: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationTable {
    #[serde(default = "default_slots")]
    pub n_slots: i64,
    #[serde(default = "default_frames")]
    pub n_frames: i64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub beta_error: f64,
    #[serde(default)]
    pub trace: bool,
}

fn default_slots() -> i64 {
    1000
}

fn default_frames() -> i64 {
    10
}

fn default_zeta() -> f64 {
    DetectionThreshold::default().zeta
}

fn default_rho() -> f64 {
    0.9
}

impl Default for SimulationTable {
    fn default() -> Self {
        Self {
            n_slots: default_slots(),
            n_frames: default_frames(),
            zeta: default_zeta(),
            rho: default_rho(),
            estimator: EstimatorKind::default(),
            beta_error: 0.0,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Receiver,
    Genie,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingTable {
    pub case: String,
    #[serde(default)]
    pub ladder: Vec<[i64; 2]>,
    pub tau_p_max: Option<i64>,
    /// Ratios `M / tau_u` at which to tabulate the `(a, b)` solution.
    #[serde(default)]
    pub deltas: Vec<f64>,
}

/// Parses spec text. Errors carry the 1-based line and column.
pub fn parse(text: &str) -> Result<SpecFile, ParseError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => line_col(text, span.start),
            None => (1, 1),
        };
        ParseError {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// A validation finding, naming every field involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub fields: Vec<String>,
    pub message: String,
}

impl Diagnostic {
    fn new(fields: &[&str], message: impl Into<String>) -> Self {
        Self {
            fields: fields.iter().map(|f| f.to_string()).collect(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.fields.join(", "), self.message)
    }
}

/// The scenario: array size, population, slot and pilot lengths, activity,
/// large-scale fading, seed and Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub m: usize,
    pub k: u64,
    pub tau_u: usize,
    /// Optimized when absent.
    pub tau_p: Option<usize>,
    pub p_a: Option<f64>,
    pub model: LargeScaleModel,
    pub seed: u64,
    pub mc: McConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    TauU,
    M,
    K,
    TauP,
    PA,
    Alpha,
    SigmaV2,
    DeltaBar,
}

impl Axis {
    pub const ALL: [Axis; 8] = [
        Axis::TauU,
        Axis::M,
        Axis::K,
        Axis::TauP,
        Axis::PA,
        Axis::Alpha,
        Axis::SigmaV2,
        Axis::DeltaBar,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::TauU => "tau_u",
            Axis::M => "M",
            Axis::K => "K",
            Axis::TauP => "tau_p",
            Axis::PA => "p_a",
            Axis::Alpha => "alpha",
            Axis::SigmaV2 => "sigma_v2",
            Axis::DeltaBar => "delta_bar",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Axis::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
    }

    fn is_integer(&self) -> bool {
        matches!(self, Axis::TauU | Axis::M | Axis::K | Axis::TauP)
    }

    /// Axes that make sense when the method picks `tau_p` and `p_a K`.
    fn optimizable(&self) -> bool {
        !matches!(self, Axis::TauP | Axis::PA)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    pub n_slots: usize,
    pub n_frames: usize,
    pub threshold: DetectionThreshold,
    pub rho: f64,
    pub estimator: Estimator,
    pub beta_error: f64,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSettings {
    pub case: Case,
    pub ladder: Vec<(usize, usize)>,
    pub deltas: Vec<f64>,
}

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub methods: Vec<Method>,
    pub sweep: Option<Sweep>,
    pub output: PathBuf,
    pub grid: GridTable,
    pub simulation: SimulationSettings,
    pub scaling: Option<ScalingSettings>,
}

impl ExperimentSpec {
    /// Grid for a system with slot length `tau_u` and `k` devices.
    pub fn grid_for(&self, tau_u: usize, k: u64) -> GridSpec {
        let mut g = GridSpec::full(tau_u, k);
        let set = |dst: &mut usize, v: Option<i64>| {
            if let Some(v) = v {
                *dst = v as usize;
            }
        };
        set(&mut g.n_tau, self.grid.n_tau);
        set(&mut g.n_pak, self.grid.n_pak);
        set(&mut g.n_refine, self.grid.n_refine);
        set(&mut g.refinements, self.grid.refinements);
        g
    }
}

/// A validated spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub system: SystemConfig,
    pub spec: ExperimentSpec,
}

/// Builds the model from its table, or explains what is wrong.
pub fn build_model(t: &ModelTable) -> Result<LargeScaleModel, Diagnostic> {
    let need = |v: Option<f64>, field: &str| {
        v.ok_or_else(|| Diagnostic::new(&[field], "required for this model kind"))
    };
    let model = match t.kind {
        ModelKind::Model1 => {
            LargeScaleModel::model1(t.delta_bar, need(t.alpha, "system.model.alpha")?)
        }
        ModelKind::Model2 => {
            LargeScaleModel::model2(t.delta_bar, need(t.sigma_v2, "system.model.sigma_v2")?)
        }
        ModelKind::Model3 => {
            LargeScaleModel::model3(t.delta_bar, need(t.alpha, "system.model.alpha")?)
        }
        ModelKind::Perfect => LargeScaleModel::perfect_power_control(t.delta_bar),
    };
    model.validate().map_err(|e| {
        let field = if !(t.delta_bar > 0.0 && t.delta_bar.is_finite()) {
            "system.model.delta_bar"
        } else if t.kind == ModelKind::Model2 {
            "system.model.sigma_v2"
        } else {
            "system.model.alpha"
        };
        Diagnostic::new(&[field], e.to_string())
    })?;
    Ok(model)
}

/// Validates a parsed spec. An empty diagnostic list means the spec is
/// valid and the returned experiment is `Some`.
pub fn check(file: &SpecFile) -> (Option<Experiment>, Vec<Diagnostic>) {
    let mut d = Vec::new();
    let s = &file.system;
    let e = &file.experiment;

    if s.m < 2 {
        d.push(Diagnostic::new(
            &["system.M"],
            format!("M = {} must be >= 2", s.m),
        ));
    }
    if s.k < 1 {
        d.push(Diagnostic::new(
            &["system.K"],
            format!("K = {} must be >= 1", s.k),
        ));
    }
    if s.tau_u < 1 {
        d.push(Diagnostic::new(
            &["system.tau_u"],
            format!("tau_u = {} must be >= 1", s.tau_u),
        ));
    }
    if let Some(tp) = s.tau_p {
        if tp < 1 {
            d.push(Diagnostic::new(
                &["system.tau_p"],
                format!("tau_p = {tp} must be >= 1"),
            ));
        } else if tp > s.tau_u {
            d.push(Diagnostic::new(
                &["system.tau_p", "system.tau_u"],
                format!("tau_p = {tp} exceeds tau_u = {}", s.tau_u),
            ));
        }
    }
    if let Some(p) = s.p_a {
        if !(0.0..=1.0).contains(&p) {
            d.push(Diagnostic::new(
                &["system.p_a"],
                format!("p_a = {p} outside [0, 1]"),
            ));
        }
    }
    let model = build_model(&s.model).map_err(|x| d.push(x)).ok();
    if s.mc.n_beta_samples < 1 {
        d.push(Diagnostic::new(
            &["system.mc.n_beta_samples"],
            format!("{} must be >= 1", s.mc.n_beta_samples),
        ));
    }
    if !(s.mc.eps_tail > 0.0 && s.mc.eps_tail < 1.0) {
        d.push(Diagnostic::new(
            &["system.mc.eps_tail"],
            format!("{} outside (0, 1)", s.mc.eps_tail),
        ));
    }

    let mut methods = Vec::new();
    for (i, name) in e.methods.iter().enumerate() {
        match name.parse::<Method>() {
            Ok(m) => methods.push(m),
            Err(_) => d.push(Diagnostic::new(
                &[&format!("experiment.methods[{i}]")],
                format!(
                    "unknown method '{name}'; expected one of {}",
                    Method::ALL.map(|m| m.as_str()).join(", ")
                ),
            )),
        }
    }
    let needs_methods = matches!(
        e.kind,
        ExperimentKind::Optimize | ExperimentKind::Compare | ExperimentKind::Sweep
    );
    if needs_methods && e.methods.is_empty() {
        d.push(Diagnostic::new(
            &["experiment.methods"],
            format!("{} needs at least one method", e.kind.as_str()),
        ));
    }

    let sweep = check_sweep(e, s, &mut d);

    let point_kinds = matches!(e.kind, ExperimentKind::BoundEval | ExperimentKind::Simulate);
    let sweeps_point = sweep.as_ref().map(|w| w.axis);
    if point_kinds && e.methods.is_empty() {
        if s.tau_p.is_none() && sweeps_point != Some(Axis::TauP) {
            d.push(Diagnostic::new(
                &["system.tau_p"],
                format!("{} needs tau_p (or a method to choose it)", e.kind.as_str()),
            ));
        }
        if s.p_a.is_none() && sweeps_point != Some(Axis::PA) {
            d.push(Diagnostic::new(
                &["system.p_a"],
                format!("{} needs p_a (or a method to choose it)", e.kind.as_str()),
            ));
        }
    }
    let uses_heuristics = methods
        .iter()
        .any(|m| matches!(m, Method::Rh0 | Method::Rh1D | Method::Ra1D));
    let min_tau_u = if uses_heuristics { 3 } else { 2 };
    let tau_u_values: Vec<i64> = match &sweep {
        Some(w) if w.axis == Axis::TauU => w.values.iter().map(|v| *v as i64).collect(),
        _ => vec![s.tau_u],
    };
    if !methods.is_empty() && tau_u_values.iter().any(|&t| t >= 1 && t < min_tau_u) {
        d.push(Diagnostic::new(
            &["system.tau_u"],
            format!("the chosen methods need tau_u >= {min_tau_u}"),
        ));
    }

    let grid = e.grid.clone().unwrap_or_default();
    for (name, v, min) in [
        ("n_tau", grid.n_tau, 1),
        ("n_pak", grid.n_pak, 1),
        ("n_refine", grid.n_refine, 1),
        ("refinements", grid.refinements, 0),
    ] {
        if let Some(v) = v {
            if v < min {
                d.push(Diagnostic::new(
                    &[&format!("experiment.grid.{name}")],
                    format!("{v} must be >= {min}"),
                ));
            }
        }
    }

    let sim = e.simulation.clone().unwrap_or_default();
    if sim.n_slots < 1 {
        d.push(Diagnostic::new(
            &["experiment.simulation.n_slots"],
            "must be >= 1",
        ));
    }
    if sim.n_frames < 1 {
        d.push(Diagnostic::new(
            &["experiment.simulation.n_frames"],
            "must be >= 1",
        ));
    }
    if !(sim.zeta > 0.0) {
        d.push(Diagnostic::new(
            &["experiment.simulation.zeta"],
            "must be > 0",
        ));
    }
    if !(0.0..=1.0).contains(&sim.rho) {
        d.push(Diagnostic::new(
            &["experiment.simulation.rho"],
            format!("{} outside [0, 1]", sim.rho),
        ));
    }
    if !(sim.beta_error > -1.0) {
        d.push(Diagnostic::new(
            &["experiment.simulation.beta_error"],
            "must be > -1",
        ));
    }

    let scaling = check_scaling(e, &mut d);

    if !d.is_empty() {
        return (None, d);
    }
    let system = SystemConfig {
        m: s.m as usize,
        k: s.k as u64,
        tau_u: s.tau_u as usize,
        tau_p: s.tau_p.map(|t| t as usize),
        p_a: s.p_a,
        model: model.expect("model validated"),
        seed: s.seed,
        mc: McConfig {
            n_beta_samples: s.mc.n_beta_samples as usize,
            eps_tail: s.mc.eps_tail,
            seed: s.seed,
        },
    };
    let spec = ExperimentSpec {
        kind: e.kind,
        methods,
        sweep,
        output: PathBuf::from(e.output.clone().unwrap_or_else(|| "out".into())),
        grid,
        simulation: SimulationSettings {
            n_slots: sim.n_slots as usize,
            n_frames: sim.n_frames as usize,
            threshold: DetectionThreshold { zeta: sim.zeta },
            rho: sim.rho,
            estimator: match sim.estimator {
                EstimatorKind::Receiver => Estimator::Receiver,
                EstimatorKind::Genie => Estimator::Genie,
            },
            beta_error: sim.beta_error,
            trace: sim.trace,
        },
        scaling,
    };
    (Some(Experiment { system, spec }), d)
}

fn check_sweep(e: &ExperimentTable, s: &SystemTable, d: &mut Vec<Diagnostic>) -> Option<Sweep> {
    let Some(w) = &e.sweep else {
        if e.kind == ExperimentKind::Sweep {
            d.push(Diagnostic::new(
                &["experiment.sweep"],
                "sweep needs an [experiment.sweep] table",
            ));
        }
        return None;
    };
    if !matches!(e.kind, ExperimentKind::Sweep | ExperimentKind::BoundEval) {
        d.push(Diagnostic::new(
            &["experiment.sweep"],
            format!("{} does not take a sweep", e.kind.as_str()),
        ));
        return None;
    }
    let Some(axis) = Axis::parse(&w.axis) else {
        d.push(Diagnostic::new(
            &["experiment.sweep.axis"],
            format!(
                "unknown axis '{}'; expected one of {}",
                w.axis,
                Axis::ALL.map(|a| a.as_str()).join(", ")
            ),
        ));
        return None;
    };
    let before = d.len();
    if w.values.is_empty() {
        d.push(Diagnostic::new(
            &["experiment.sweep.values"],
            "sweep list is empty",
        ));
    }
    if e.kind == ExperimentKind::Sweep && !axis.optimizable() {
        d.push(Diagnostic::new(
            &["experiment.sweep.axis"],
            format!(
                "{} is chosen by the optimizer and cannot be swept",
                axis.as_str()
            ),
        ));
    }
    for (i, &v) in w.values.iter().enumerate() {
        let field = format!("experiment.sweep.values[{i}]");
        let bad = |msg: String| Diagnostic::new(&[&field], msg);
        if !v.is_finite() || (axis.is_integer() && v.fract() != 0.0) {
            d.push(bad(format!("{v} is not a valid {}", axis.as_str())));
            continue;
        }
        let problem = match axis {
            Axis::TauU if v < 1.0 => Some("tau_u must be >= 1".to_string()),
            Axis::TauU => s
                .tau_p
                .filter(|&tp| tp as f64 > v && e.kind == ExperimentKind::BoundEval)
                .map(|tp| format!("tau_u = {v} is below system.tau_p = {tp}")),
            Axis::M if v < 2.0 => Some("M must be >= 2".into()),
            Axis::K if v < 1.0 => Some("K must be >= 1".into()),
            Axis::TauP if v < 1.0 || v > s.tau_u as f64 => {
                Some(format!("tau_p = {v} outside [1, tau_u = {}]", s.tau_u))
            }
            Axis::PA if !(0.0..=1.0).contains(&v) => Some(format!("p_a = {v} outside [0, 1]")),
            Axis::Alpha | Axis::SigmaV2 | Axis::DeltaBar => {
                let mut t = s.model.clone();
                match axis {
                    Axis::Alpha if t.kind == ModelKind::Model2 || t.kind == ModelKind::Perfect => {
                        Some("alpha applies to model1 and model3 only".into())
                    }
                    Axis::SigmaV2 if t.kind != ModelKind::Model2 => {
                        Some("sigma_v2 applies to model2 only".into())
                    }
                    _ => {
                        match axis {
                            Axis::Alpha => t.alpha = Some(v),
                            Axis::SigmaV2 => t.sigma_v2 = Some(v),
                            _ => t.delta_bar = v,
                        }
                        build_model(&t).err().map(|x| x.message)
                    }
                }
            }
            _ => None,
        };
        if let Some(msg) = problem {
            d.push(bad(msg));
        }
    }
    (d.len() == before).then(|| Sweep {
        axis,
        values: w.values.clone(),
    })
}

fn check_scaling(e: &ExperimentTable, d: &mut Vec<Diagnostic>) -> Option<ScalingSettings> {
    if e.kind != ExperimentKind::ScalingVerify {
        return None;
    }
    let Some(t) = &e.scaling else {
        d.push(Diagnostic::new(
            &["experiment.scaling"],
            "scaling-verify needs an [experiment.scaling] table",
        ));
        return None;
    };
    let before = d.len();
    let case = match t.case.to_ascii_lowercase().as_str() {
        "case1" => Some(Case::Case1),
        "case2" => Some(Case::Case2),
        "case3" => Some(Case::Case3),
        "case4" => match t.tau_p_max {
            Some(v) if v >= 1 => Some(Case::Case4 {
                tau_p_max: v as usize,
            }),
            _ => {
                d.push(Diagnostic::new(
                    &["experiment.scaling.tau_p_max"],
                    "case4 needs tau_p_max >= 1",
                ));
                None
            }
        },
        other => {
            d.push(Diagnostic::new(
                &["experiment.scaling.case"],
                format!("unknown case '{other}'; expected case1, case2, case3 or case4"),
            ));
            None
        }
    };
    if t.ladder.is_empty() && t.deltas.is_empty() {
        d.push(Diagnostic::new(
            &["experiment.scaling.ladder", "experiment.scaling.deltas"],
            "nothing to verify: both lists are empty",
        ));
    }
    for (i, [m, tau_u]) in t.ladder.iter().enumerate() {
        if *m < 2 || *tau_u < 2 {
            d.push(Diagnostic::new(
                &[&format!("experiment.scaling.ladder[{i}]")],
                format!("(M, tau_u) = ({m}, {tau_u}) needs M >= 2 and tau_u >= 2"),
            ));
        }
    }
    for (i, &x) in t.deltas.iter().enumerate() {
        if !(x > 0.0 && x.is_finite()) {
            d.push(Diagnostic::new(
                &[&format!("experiment.scaling.deltas[{i}]")],
                format!("{x} must be > 0"),
            ));
        }
    }
    if d.len() != before {
        return None;
    }
    Some(ScalingSettings {
        case: case?,
        ladder: t
            .ladder
            .iter()
            .map(|[m, t]| (*m as usize, *t as usize))
            .collect(),
        deltas: t.deltas.clone(),
    })
}

/// Diagnostics for spec text; empty means valid.
pub fn validate(text: &str) -> Result<Vec<Diagnostic>, ParseError> {
    Ok(check(&parse(text)?).1)
}

/// Parses and validates spec text.
pub fn load(text: &str) -> Result<Experiment, CliError> {
    let file = parse(text)?;
    match check(&file) {
        (Some(x), _) => Ok(x),
        (None, diags) => Err(CliError::Invalid(diags)),
    }
}
