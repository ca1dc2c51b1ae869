//! Leading-order behaviour of the Ra optimum as `M` and `tau_u` grow, and
//! numeric checks of those predictions against [`crate::optimizer`].
//!
//! The regimes are `M >> tau_u` (Case 1), `M << tau_u` (Case 2),
//! `M ~ tau_u` (Case 3) and `tau_p` capped by the coherence time (Case 4).

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::bounds::{McConfig, OperatingPoint};
use crate::channel_models::{BetaMoments, LargeScaleModel};
use crate::math::log2_1p;
use crate::optimizer::{golden_section, grid_opt, maximize_1d, Cost, GridSpec};
use crate::par::map_indexed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    Case1,
    Case2,
    Case3,
    Case4 { tau_p_max: usize },
}

/// A regime together with its ratio parameter: `M / tau_u` for Cases 1-3,
/// `M / tau_p_max` for Case 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegime {
    pub case: Case,
    pub delta: f64,
}

impl ScalingRegime {
    pub fn new(case: Case, tau_u: usize, m: usize) -> Result<Self> {
        let denom = match case {
            Case::Case4 { tau_p_max } => tau_p_max,
            _ => tau_u,
        };
        if denom == 0 || m == 0 {
            return Err(Error::domain(
                "ScalingRegime",
                "M, tau_u and tau_p_max must be >= 1",
            ));
        }
        Ok(Self {
            case,
            delta: m as f64 / denom as f64,
        })
    }
}

/// Predicted optimum with the magnitude of the neglected remainder terms.
/// A remainder of `None` means the theorem states no explicit order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPrediction {
    pub regime: ScalingRegime,
    pub tau_p: f64,
    pub pak: f64,
    pub rate: f64,
    pub sinr: f64,
    pub tau_p_remainder: Option<f64>,
    pub pak_remainder: Option<f64>,
    pub rate_remainder: Option<f64>,
    pub sinr_remainder: Option<f64>,
    pub warnings: Vec<String>,
}

/// `sqrt(E[beta^4] / (E[beta]^2 E[beta^2]))`.
pub fn moment_factor(m: &BetaMoments) -> f64 {
    libm::sqrt(m.spread_factor())
}

/// Solution of the `(a, b)` problem for `tau_p = a tau_u`,
/// `p_a K = b sqrt(M tau_u)`; the optimal rate is `rate_scale sqrt(M tau_u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbSolution {
    pub a: f64,
    pub b: f64,
    pub rate_scale: f64,
}

/// Ra normalized by `sqrt(M tau_u)`, written through `delta = M / tau_u`.
pub fn ab_objective(a: f64, b: f64, delta: f64, model: &LargeScaleModel) -> Result<f64> {
    Ok((1.0 - a) * ab_rate_term(a, b, delta, model)?)
}

/// `b E[log2(1 + SINR_a)]` with the `(a, b, delta)` parameterization and no
/// pilot overhead factor.
pub fn ab_rate_term(a: f64, b: f64, delta: f64, model: &LargeScaleModel) -> Result<f64> {
    let mom = model.analytic_moments();
    let sd = libm::sqrt(delta);
    let e = model.expect(|b0| {
        let num = a * b0 * b0 * delta;
        let den = b * mom.mean_sq * delta * sd
            + b * b * mom.mean * mom.mean * delta
            + a * b * mom.mean * b0 * sd;
        log2_1p(num / den)
    })?;
    Ok(b * e)
}

const AB_TOL: f64 = 1e-7;

/// Maximizes [`ab_objective`] over `a in (0, 1)`, `b in (0, b_max]` with
/// `b_max` ten times the large-`delta` prediction.
pub fn solve_ab(delta: f64, model: &LargeScaleModel) -> Result<AbSolution> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(
            "solve_ab",
            alloc::format!("delta = {delta} must be > 0"),
        ));
    }
    let b_max = 10.0 * 0.5 * moment_factor(&model.analytic_moments());
    let inner = |a: f64| -> Result<(f64, f64)> {
        let (b, v, _) = maximize_1d(
            |b| ab_objective(a, b, delta, model),
            1e-6 * b_max,
            b_max,
            AB_TOL,
        )?;
        Ok((b, v))
    };
    let (a, _, _) = golden_section(&|a| inner(a).map(|x| x.1), 1e-6, 1.0 - 1e-6, AB_TOL)?;
    let (b, rate_scale) = inner(a)?;
    Ok(AbSolution { a, b, rate_scale })
}

/// Case-4 optimum for a capped pilot length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Case4Solution {
    pub pak: f64,
    pub b: f64,
    /// `p_a K E[log2(1 + SINR_a)]` at `tau_p = tau_p_max`, without the pilot
    /// overhead factor, which depends on `tau_u`.
    pub rate: f64,
    /// True when the closed form was used instead of a 1D search.
    pub closed_form: bool,
}

/// `b E[log2(1 + SINR_a)]` at `tau_p = tau_p_max`, `p_a K = b sqrt(M tau_p_max)`.
pub fn case4_objective(b: f64, delta_prime: f64, model: &LargeScaleModel) -> Result<f64> {
    ab_rate_term(1.0, b, delta_prime, model)
}

/// Closed form when `M / tau_p_max` is at least 100 or at most 0.01,
/// numeric maximization otherwise.
pub fn solve_case4(m: usize, tau_p_max: usize, model: &LargeScaleModel) -> Result<Case4Solution> {
    if tau_p_max == 0 || m == 0 {
        return Err(Error::domain("solve_case4", "M and tau_p_max must be >= 1"));
    }
    let dp = m as f64 / tau_p_max as f64;
    let root = libm::sqrt(m as f64 * tau_p_max as f64);
    let f = moment_factor(&model.analytic_moments());
    let closed = !(0.01..100.0).contains(&dp);
    let b = if closed {
        libm::sqrt(0.5) * f
    } else {
        maximize_1d(|b| case4_objective(b, dp, model), 1e-5, 10.0 * f, AB_TOL)?.0
    };
    Ok(Case4Solution {
        pak: b * root,
        b,
        rate: case4_objective(b, dp, model)? * root,
        closed_form: closed,
    })
}

/// Leading-order optimum for the given regime.
pub fn predict(
    case: Case,
    tau_u: usize,
    m: usize,
    model: &LargeScaleModel,
) -> Result<ScalingPrediction> {
    let regime = ScalingRegime::new(case, tau_u, m)?;
    let mom = model.analytic_moments();
    let f = moment_factor(&mom);
    let (mf, tu) = (m as f64, tau_u as f64);
    let mut warnings = Vec::new();
    let mut p = ScalingPrediction {
        regime,
        tau_p: 0.0,
        pak: 0.0,
        rate: 0.0,
        sinr: 0.0,
        tau_p_remainder: None,
        pak_remainder: None,
        rate_remainder: None,
        sinr_remainder: None,
        warnings: Vec::new(),
    };
    match case {
        Case::Case1 => {
            if mf < 10.0 * tu {
                warnings.push(alloc::format!("M / tau_u = {} is not large", mf / tu));
            }
            let eps = libm::sqrt(tu / mf);
            p.tau_p = tu / 2.0;
            p.pak = f * 0.5 * libm::sqrt(mf * tu);
            p.rate = tu / (4.0 * LN_2);
            p.sinr = eps;
            p.tau_p_remainder = Some(tu * eps);
            p.pak_remainder = Some(tu);
            p.rate_remainder = Some(tu * eps);
            p.sinr_remainder = Some(tu / mf);
        }
        Case::Case2 => {
            if tu < 10.0 * mf {
                warnings.push(alloc::format!("tau_u / M = {} is not large", tu / mf));
            }
            let r = mf / tu;
            p.tau_p = libm::pow(mf / 2.0, 2.0 / 3.0) * libm::cbrt(tu);
            p.pak = f * libm::pow(mf / (2.0 * tu), 5.0 / 6.0) * tu;
            p.rate = mf;
            p.sinr = libm::cbrt(2.0) * libm::pow(r, 1.0 / 6.0);
            p.pak_remainder = Some(mf);
            p.rate_remainder = Some(mf * libm::pow(r, 2.0 / 3.0));
            p.sinr_remainder = Some(libm::cbrt(r));
        }
        Case::Case3 => {
            let r = mf / tu;
            if !(0.01..=100.0).contains(&r) {
                warnings.push(alloc::format!("M / tau_u = {r} is far from 1"));
            }
            let ab = solve_ab(r, model)?;
            let root = libm::sqrt(mf * tu);
            p.tau_p = ab.a * tu;
            p.pak = ab.b * root;
            p.rate = ab.rate_scale * root;
            p.sinr = sinr_at(mom.mean, &mom, p.tau_p, p.pak, mf);
        }
        Case::Case4 { tau_p_max } => {
            if tau_p_max > tau_u {
                warnings.push(alloc::format!(
                    "tau_p_max = {tau_p_max} exceeds tau_u = {tau_u}; the cap is inactive"
                ));
            }
            let s = solve_case4(m, tau_p_max.min(tau_u), model)?;
            let tp = tau_p_max.min(tau_u) as f64;
            p.tau_p = tp;
            p.pak = s.pak;
            p.rate = (tu - tp) / tu * s.rate;
            p.sinr = sinr_at(mom.mean, &mom, tp, s.pak, mf);
            if s.closed_form {
                p.pak_remainder = Some(mf);
            }
        }
    }
    p.warnings = warnings;
    Ok(p)
}

/// Large-system SINR with a continuous pilot length.
fn sinr_at(beta_0: f64, mom: &BetaMoments, tau_p: f64, pak: f64, m: f64) -> f64 {
    let num = m * tau_p * beta_0 * beta_0;
    let den =
        mom.mean_sq * m * pak + mom.mean * mom.mean * pak * pak + mom.mean * beta_0 * pak * tau_p;
    num / den
}

/// One rung of a verification ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow {
    pub m: usize,
    pub tau_u: usize,
    pub tau_p_opt: usize,
    pub pak_opt: f64,
    pub rate_opt: f64,
    pub prediction: ScalingPrediction,
    /// Relative errors against the prediction.
    pub tau_p_err: f64,
    pub pak_err: f64,
    pub rate_err: f64,
    /// `rate_opt ln 2 / M` against 1 (Case 2 only, else NaN).
    pub rate_err_log2: f64,
}

/// Agreement of a ladder with the predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub case: Case,
    pub rows: Vec<LadderRow>,
    pub tau_p_err_monotone: bool,
    pub pak_err_monotone: bool,
    pub rate_err_monotone: bool,
    /// Case 2: which rate normalization the ladder supports, `"M"` or
    /// `"M/ln2"`, or `None` when neither converges monotonically.
    pub supported_rate_normalization: Option<&'static str>,
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn rel(x: f64, want: f64) -> f64 {
    libm::fabs(x - want) / libm::fabs(want)
}

/// Grid-optimizes Ra along a ladder of `(M, tau_u)` and compares with
/// [`predict`]. The device count is set large enough never to bind.
pub fn verify_scaling(
    case: Case,
    model: &LargeScaleModel,
    ladder: &[(usize, usize)],
) -> Result<ScalingReport> {
    if ladder.is_empty() {
        return Err(Error::Config("empty scaling ladder".into()));
    }
    let rows: Vec<Result<LadderRow>> = map_indexed(ladder.len(), |i| {
        let (m, tau_u) = ladder[i];
        let prediction = predict(case, tau_u, m, model)?;
        let k = libm::ceil(100.0 * libm::sqrt(m as f64 * tau_u as f64)).max(1000.0) as u64;
        let op = OperatingPoint {
            m,
            k,
            tau_u,
            tau_p: 1,
            p_a: 0.0,
        };
        let mut grid = GridSpec::full(tau_u, k);
        grid.refinements = 3;
        if let Case::Case4 { tau_p_max } = case {
            grid.tau_p_max = tau_p_max.min(tau_u);
        }
        let opt = grid_opt(Cost::Ra, &op, model, &grid, &McConfig::default())?;
        let rate_err_log2 = match case {
            Case::Case2 => rel(opt.rate * LN_2, m as f64),
            _ => f64::NAN,
        };
        Ok(LadderRow {
            m,
            tau_u,
            tau_p_opt: opt.tau_p_opt,
            pak_opt: opt.pak_opt,
            rate_opt: opt.rate,
            tau_p_err: rel(opt.tau_p_opt as f64, prediction.tau_p),
            pak_err: rel(opt.pak_opt, prediction.pak),
            rate_err: rel(opt.rate, prediction.rate),
            rate_err_log2,
            prediction,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&LadderRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let supported = match case {
        Case::Case2 => {
            let plain: Vec<f64> = rows.iter().map(|r| r.rate_opt / r.m as f64).collect();
            let scaled: Vec<f64> = plain.iter().map(|x| x * LN_2).collect();
            let one_sided = |v: &[f64]| v.iter().all(|&x| x <= 1.0) || v.iter().all(|&x| x >= 1.0);
            let converging = |v: &[f64]| {
                one_sided(v)
                    && non_increasing(&v.iter().map(|x| libm::fabs(x - 1.0)).collect::<Vec<_>>())
            };
            if converging(&scaled) {
                Some("M/ln2")
            } else if converging(&plain) {
                Some("M")
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(ScalingReport {
        case,
        tau_p_err_monotone: non_increasing(&col(|r| r.tau_p_err)),
        pak_err_monotone: non_increasing(&col(|r| r.pak_err)),
        rate_err_monotone: non_increasing(&col(|r| r.rate_err)),
        supported_rate_normalization: supported,
        rows,
    })
}
