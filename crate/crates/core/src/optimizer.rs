//! Joint choice of pilot length `tau_p` and mean activity `p_a K`.
//!
//! Six methods are provided: coarse-to-fine grid search on R1, R3 or Ra,
//! a 1D search on Ra with `tau_p = tau_u / 3`, and the two closed-form /
//! 1D heuristics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::bounds::{r3, ra_value, McConfig, OperatingPoint, R1Evaluator};
use crate::channel_models::LargeScaleModel;
use crate::math::log2_1p;
use crate::par::map_indexed;
use crate::{Error, Result};

/// Optimization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Grid search on R1.
    R1Opt,
    /// Grid search on R3.
    R3Opt,
    /// Grid search on Ra.
    RaOpt,
    /// `tau_p = tau_u / 3`, `p_a K` from a 1D search on Ra.
    Ra1D,
    /// Closed-form heuristic ignoring the spread of `beta`.
    Rh0,
    /// `tau_p = tau_u / 3`, `p_a K` from the 1D heuristic cost.
    Rh1D,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::R1Opt,
        Method::R3Opt,
        Method::RaOpt,
        Method::Ra1D,
        Method::Rh0,
        Method::Rh1D,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::R1Opt => "R1-opt",
            Method::R3Opt => "R3-opt",
            Method::RaOpt => "Ra-opt",
            Method::Ra1D => "Ra-1D",
            Method::Rh0 => "Rh0",
            Method::Rh1D => "Rh-1D",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(alloc::format!(
                    "unknown method {s:?}; expected one of R1-opt, R3-opt, Ra-opt, Ra-1D, Rh0, Rh-1D"
                ))
            })
    }
}

/// Cost function for [`grid_opt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cost {
    R1,
    R3,
    Ra,
}

/// Number of cost evaluations per bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub r1: usize,
    pub r3: usize,
    pub ra: usize,
    pub heuristic: usize,
}

impl EvalCounts {
    pub fn total(&self) -> usize {
        self.r1 + self.r3 + self.ra + self.heuristic
    }

    fn add(&mut self, cost: Cost, n: usize) {
        match cost {
            Cost::R1 => self.r1 += n,
            Cost::R3 => self.r3 += n,
            Cost::Ra => self.ra += n,
        }
    }
}

/// Solver metadata attached to a result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub counts: EvalCounts,
    /// Grid points per stage, stage 1 first.
    pub stage_points: Vec<usize>,
    /// Maximizer of the 1D scale `b` for the 1D methods.
    pub b_opt: Option<f64>,
    pub golden_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub tau_p_opt: usize,
    pub pak_opt: f64,
    /// The method's cost evaluated at the optimum.
    pub rate: f64,
    pub method: Method,
    pub evaluations: usize,
    pub diagnostics: Diagnostics,
}

impl OptimizationResult {
    /// Operating point with the optimized parameters.
    pub fn apply(&self, template: &OperatingPoint) -> OperatingPoint {
        OperatingPoint {
            tau_p: self.tau_p_opt,
            ..*template
        }
        .with_pak(self.pak_opt)
    }
}

/// Search box and resolution for [`grid_opt`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub tau_p_min: usize,
    pub tau_p_max: usize,
    pub pak_min: f64,
    pub pak_max: f64,
    /// Stage-1 points along `tau_p` (linear) and `p_a K` (logarithmic).
    pub n_tau: usize,
    pub n_pak: usize,
    /// Points per axis in each refinement stage.
    pub n_refine: usize,
    pub refinements: usize,
}

impl GridSpec {
    /// Full admissible box `tau_p in [1, tau_u - 1]`, `p_a K in [1, K]`.
    pub fn full(tau_u: usize, k: u64) -> Self {
        Self {
            tau_p_min: 1,
            tau_p_max: tau_u.saturating_sub(1).max(1),
            pak_min: 1.0f64.min(k as f64),
            pak_max: k as f64,
            n_tau: 25,
            n_pak: 25,
            n_refine: 15,
            refinements: 1,
        }
    }

    /// A grid consisting of one point.
    pub fn single(tau_p: usize, pak: f64) -> Self {
        Self {
            tau_p_min: tau_p,
            tau_p_max: tau_p,
            pak_min: pak,
            pak_max: pak,
            n_tau: 1,
            n_pak: 1,
            n_refine: 1,
            refinements: 0,
        }
    }

    fn validate(&self, op: &OperatingPoint) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_tau == 0 || self.n_pak == 0 {
            return bad("grid has no points".into());
        }
        if self.tau_p_min == 0 || self.tau_p_min > self.tau_p_max || self.tau_p_max > op.tau_u {
            return bad(alloc::format!(
                "tau_p range [{}, {}] is empty or outside [1, tau_u = {}]",
                self.tau_p_min,
                self.tau_p_max,
                op.tau_u
            ));
        }
        if !(self.pak_min > 0.0 && self.pak_min <= self.pak_max && self.pak_max <= op.k as f64) {
            return bad(alloc::format!(
                "p_a K range [{}, {}] is empty or outside (0, K = {}]",
                self.pak_min,
                self.pak_max,
                op.k
            ));
        }
        Ok(())
    }
}

fn linear_ints(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if n <= 1 || lo == hi {
        return alloc::vec![(lo + hi) / 2];
    }
    let mut v: Vec<usize> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            libm::round(lo as f64 + t * (hi - lo) as f64) as usize
        })
        .collect();
    v.dedup();
    v
}

fn log_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return alloc::vec![libm::sqrt(lo * hi)];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            match i {
                0 => lo,
                _ if i == n - 1 => hi,
                _ => libm::exp(a + t * (b - a)),
            }
        })
        .collect()
}

/// Root of `ln(1 + x) = 2x / (1 + x)` other than 0.
pub fn solve_s0() -> f64 {
    let g = |x: f64| libm::log1p(x) - 2.0 * x / (1.0 + x);
    let (mut lo, mut hi) = (1.0f64, 10.0f64);
    // g(1) < 0 < g(10); bisect to machine resolution.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn tau_third(tau_u: usize) -> usize {
    (libm::round(tau_u as f64 / 3.0) as usize).max(1)
}

/// Closed-form heuristic: `tau_p = tau_u / 3`, `p_a K = sqrt(tau_u M / (3 s0))`.
pub fn heuristic1(tau_u: usize, m: usize) -> Result<(usize, f64)> {
    if tau_u < 3 {
        return Err(Error::domain(
            "heuristic1",
            alloc::format!("tau_u = {tau_u} < 3"),
        ));
    }
    let s0 = solve_s0();
    Ok((
        tau_third(tau_u),
        libm::sqrt(tau_u as f64 * m as f64) / libm::sqrt(3.0 * s0),
    ))
}

/// Heuristic sum rate keeping only the quadratic interference term.
pub fn rh_value(
    tau_u: usize,
    tau_p: usize,
    pak: f64,
    m: usize,
    model: &LargeScaleModel,
) -> Result<f64> {
    if pak <= 0.0 || tau_p >= tau_u {
        return Ok(0.0);
    }
    let mean = model.analytic_moments().mean;
    let c = m as f64 * tau_p as f64 / (mean * mean * pak * pak);
    let e = model.expect(|b0| log2_1p(b0 * b0 * c))?;
    Ok(pak * (tau_u - tau_p) as f64 / tau_u as f64 * e)
}

/// Heuristic 1D objective `b E[log2(1 + beta_0^2 / (3 mean^2 b^2))]`.
pub fn heuristic2_objective(b: f64, model: &LargeScaleModel) -> Result<f64> {
    let mean = model.analytic_moments().mean;
    let c = 1.0 / (3.0 * mean * mean * b * b);
    Ok(b * model.expect(|b0| log2_1p(b0 * b0 * c))?)
}

/// Ra with `tau_p = tau_u / 3` and `p_a K = b sqrt(M tau_u)`, divided by the
/// prelog and `sqrt(M tau_u)`.
pub fn asymptotic_1d_objective(
    b: f64,
    tau_u: usize,
    m: usize,
    model: &LargeScaleModel,
) -> Result<f64> {
    let mom = model.analytic_moments();
    let (mf, tu) = (m as f64, tau_u as f64);
    let root = libm::sqrt(mf * tu);
    Ok(b * model.expect(|b0| {
        let num = root * b0 * b0 / 3.0;
        let den = b * mom.mean_sq * mf
            + b * b * mom.mean * mom.mean * root
            + b * mom.mean * b0 * tu / 3.0;
        log2_1p(num / den)
    })?)
}

/// Maximizer of a 1D function on `[lo, hi]`: log-spaced scan, then golden
/// section inside the best bracket down to `rel_tol`.
pub fn maximize_1d<F>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Config(alloc::format!("bad bracket [{lo}, {hi}]")));
    }
    const SCAN: usize = 48;
    let xs = log_points(lo, hi, SCAN);
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let a = xs[best.0.saturating_sub(1)];
    let b = xs[(best.0 + 1).min(SCAN - 1)];
    let (x, v, it) = golden_section(&f, a, b, rel_tol)?;
    if v >= best.1 {
        Ok((x, v, SCAN + it))
    } else {
        Ok((xs[best.0], best.1, SCAN + it))
    }
}

/// Golden-section maximization on `[a, b]`, stopping when the bracket is
/// below `rel_tol` relative to its midpoint.
pub fn golden_section<F>(f: &F, mut a: f64, mut b: f64, rel_tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut it = 2;
    while (b - a) > rel_tol * libm::fabs(0.5 * (a + b)) && it < 400 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        it += 1;
    }
    Ok(if fc >= fd { (c, fc, it) } else { (d, fd, it) })
}

const B_LO: f64 = 1e-4;
const B_HI: f64 = 20.0;
const B_TOL: f64 = 1e-4;

/// Heuristic 2: `tau_p = tau_u / 3`, `p_a K = b sqrt(tau_u M)` with `b`
/// maximizing [`heuristic2_objective`]. Returns `(tau_p, p_a K, b)`.
pub fn heuristic2_1d(tau_u: usize, m: usize, model: &LargeScaleModel) -> Result<(usize, f64, f64)> {
    let (b, _, _) = maximize_1d(|b| heuristic2_objective(b, model), B_LO, B_HI, B_TOL)?;
    Ok((tau_third(tau_u), b * libm::sqrt(tau_u as f64 * m as f64), b))
}

/// Asymptotic 1D: `tau_p = tau_u / 3`, `b` maximizing Ra along that line.
/// Returns `(tau_p, p_a K, b)`.
pub fn asymptotic_1d(tau_u: usize, m: usize, model: &LargeScaleModel) -> Result<(usize, f64, f64)> {
    let (b, _, _) = maximize_1d(
        |b| asymptotic_1d_objective(b, tau_u, m, model),
        B_LO,
        B_HI,
        B_TOL,
    )?;
    Ok((tau_third(tau_u), b * libm::sqrt(tau_u as f64 * m as f64), b))
}

enum Evaluator<'a> {
    R1(R1Evaluator),
    R3(&'a LargeScaleModel),
    Ra(&'a LargeScaleModel),
}

impl Evaluator<'_> {
    fn eval(&self, op: &OperatingPoint, tau_p: usize, pak: f64) -> Result<f64> {
        let point = OperatingPoint { tau_p, ..*op }.with_pak(pak);
        match self {
            Evaluator::R1(e) => Ok(e.evaluate(&point)?.value),
            Evaluator::R3(model) => Ok(r3(&point, model)?.value),
            Evaluator::Ra(model) => ra_value(op.tau_u, tau_p, point.pak(), op.m, model),
        }
    }
}

/// Coarse-to-fine grid maximization of the chosen cost over
/// `(tau_p, p_a K)`. R1 uses one shared pool of `beta` draws, so every grid
/// point sees the same random numbers.
pub fn grid_opt(
    cost: Cost,
    template: &OperatingPoint,
    model: &LargeScaleModel,
    grid: &GridSpec,
    mc: &McConfig,
) -> Result<OptimizationResult> {
    template.validate()?;
    model.validate()?;
    grid.validate(template)?;
    let evaluator = match cost {
        Cost::R1 => {
            let widest = template.with_pak(grid.pak_max);
            let need = R1Evaluator::required_active(&widest, mc.eps_tail)?;
            Evaluator::R1(R1Evaluator::new(model, mc, need)?)
        }
        Cost::R3 => Evaluator::R3(model),
        Cost::Ra => Evaluator::Ra(model),
    };

    let mut diagnostics = Diagnostics::default();
    let mut taus = linear_ints(grid.tau_p_min, grid.tau_p_max, grid.n_tau);
    let mut paks = log_points(grid.pak_min, grid.pak_max, grid.n_pak);
    let mut best: Option<(usize, f64, f64)> = None;
    for stage in 0..=grid.refinements {
        let points: Vec<(usize, f64)> = taus
            .iter()
            .flat_map(|&t| paks.iter().map(move |&p| (t, p)))
            .collect();
        let values: Vec<Result<f64>> = map_indexed(points.len(), |i| {
            evaluator.eval(template, points[i].0, points[i].1)
        });
        diagnostics.counts.add(cost, points.len());
        diagnostics.stage_points.push(points.len());
        for (&(t, p), v) in points.iter().zip(values) {
            let v = v?;
            if best.is_none_or(|(_, _, bv)| v > bv) {
                best = Some((t, p, v));
            }
        }
        if stage == grid.refinements {
            break;
        }
        let (bt, bp, _) = best.expect("grid is non-empty");
        let tau_step = taus
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
            .max(1);
        let ratio = paks.windows(2).map(|w| w[1] / w[0]).fold(1.0f64, f64::max);
        let (tlo, thi) = (
            bt.saturating_sub(tau_step).max(grid.tau_p_min),
            (bt + tau_step).min(grid.tau_p_max),
        );
        let (plo, phi) = (
            (bp / ratio).max(grid.pak_min),
            (bp * ratio).min(grid.pak_max),
        );
        taus = linear_ints(tlo, thi, grid.n_refine);
        paks = log_points(plo, phi, grid.n_refine);
    }
    let (tau_p_opt, pak_opt, rate) = best.expect("grid is non-empty");
    let method = match cost {
        Cost::R1 => Method::R1Opt,
        Cost::R3 => Method::R3Opt,
        Cost::Ra => Method::RaOpt,
    };
    Ok(OptimizationResult {
        tau_p_opt,
        pak_opt,
        rate,
        method,
        evaluations: diagnostics.counts.total(),
        diagnostics,
    })
}

/// Runs one of the six methods. Grid methods search `grid`; the others
/// ignore it. The reported rate is the method's own cost at its optimum.
pub fn optimize(
    method: Method,
    template: &OperatingPoint,
    model: &LargeScaleModel,
    grid: &GridSpec,
    mc: &McConfig,
) -> Result<OptimizationResult> {
    template.validate()?;
    model.validate()?;
    let (tau_u, m, k) = (template.tau_u, template.m, template.k as f64);
    let clamp = |pak: f64| pak.min(k);
    let mut diagnostics = Diagnostics::default();
    let (tau_p_opt, pak_opt, rate) = match method {
        Method::R1Opt => return grid_opt(Cost::R1, template, model, grid, mc),
        Method::R3Opt => return grid_opt(Cost::R3, template, model, grid, mc),
        Method::RaOpt => return grid_opt(Cost::Ra, template, model, grid, mc),
        Method::Rh0 => {
            let (t, p) = heuristic1(tau_u, m)?;
            let p = clamp(p);
            diagnostics.counts.heuristic += 1;
            let perfect = LargeScaleModel::perfect_power_control(model.delta_bar());
            (t, p, rh_value(tau_u, t, p, m, &perfect)?)
        }
        Method::Rh1D => {
            let (t, p, b) = heuristic2_1d(tau_u, m, model)?;
            let p = clamp(p);
            diagnostics.b_opt = Some(b);
            diagnostics.counts.heuristic += 1;
            (t, p, rh_value(tau_u, t, p, m, model)?)
        }
        Method::Ra1D => {
            let (t, p, b) = asymptotic_1d(tau_u, m, model)?;
            let p = clamp(p);
            diagnostics.b_opt = Some(b);
            diagnostics.counts.ra += 1;
            (t, p, ra_value(tau_u, t, p, m, model)?)
        }
    };
    Ok(OptimizationResult {
        tau_p_opt,
        pak_opt,
        rate,
        method,
        evaluations: diagnostics.counts.total(),
        diagnostics,
    })
}
