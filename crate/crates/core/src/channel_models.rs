//! Large-scale fading models and Rayleigh small-scale channels.
//!
//! `beta` is the received SNR of a device relative to unit noise power. It is
//! drawn once per frame from one of three models:
//!
//! | model   | draw                                         |
//! |---------|----------------------------------------------|
//! | Model 1 | `delta_bar (1 + v)`, `v ~ U[-alpha, alpha]`   |
//! | Model 2 | `delta_bar 10^(v/10)`, `v ~ N(0, sigma_v2)`   |
//! | Model 3 | `delta_bar (d / d0)^(-alpha_p)`, `d = d0 (1 + v)`, `v ~ U[-alpha, alpha]` |
//!
//! Moments are closed form so that optimizers built on them are
//! deterministic.

use alloc::vec::Vec;
use core::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::quad::{integrate, QuadConfig};
use crate::{Error, Result};

/// Reference distance of Model 3, in meters.
pub const MODEL3_D0: f64 = 500.0;
/// Path-loss exponent of Model 3.
pub const MODEL3_ALPHA_P: f64 = 3.76;
/// Nominal received SNR (10 dB as a linear value).
pub const DEFAULT_DELTA_BAR: f64 = 10.0;

// Gaussian tails beyond this many standard deviations are ignored when
// integrating over Model 2.
const NORMAL_SPAN: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LargeScaleModel {
    /// Imperfect power control: uniform error around `delta_bar`.
    Model1 { delta_bar: f64, alpha: f64 },
    /// Log-normal shadowing with dB-domain variance `sigma_v2`.
    Model2 { delta_bar: f64, sigma_v2: f64 },
    /// Path loss for devices spread uniformly around a nominal distance.
    Model3 {
        delta_bar: f64,
        alpha: f64,
        d0: f64,
        alpha_p: f64,
    },
}

/// First, second and fourth moments of `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMoments {
    pub mean: f64,
    pub mean_sq: f64,
    pub mean_4th: f64,
}

impl BetaMoments {
    /// Moments of a constant `beta`.
    pub fn constant(beta: f64) -> Self {
        Self {
            mean: beta,
            mean_sq: beta * beta,
            mean_4th: beta * beta * beta * beta,
        }
    }

    /// `E[b^4] / (E[b]^2 E[b^2])`, equal to 1 for a constant `beta`.
    pub fn spread_factor(&self) -> f64 {
        self.mean_4th / (self.mean * self.mean * self.mean_sq)
    }
}

/// `E[u^m]` for `u ~ U[1 - alpha, 1 + alpha]`, without cancellation at small
/// `alpha`.
fn uniform_power_mean(alpha: f64, m: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let e = m + 1.0;
    if alpha >= 1.0 {
        return if e > 0.0 {
            libm::pow(2.0, e) / (2.0 * e)
        } else {
            f64::INFINITY
        };
    }
    let t = libm::atanh(alpha);
    if e == 0.0 {
        return t / alpha;
    }
    let x = 2.0 * e * t;
    libm::exp(e * libm::log1p(-alpha)) * libm::expm1(x) / (2.0 * alpha * e)
}

impl LargeScaleModel {
    pub fn model1(delta_bar: f64, alpha: f64) -> Self {
        LargeScaleModel::Model1 { delta_bar, alpha }
    }

    pub fn model2(delta_bar: f64, sigma_v2: f64) -> Self {
        LargeScaleModel::Model2 {
            delta_bar,
            sigma_v2,
        }
    }

    pub fn model3(delta_bar: f64, alpha: f64) -> Self {
        LargeScaleModel::Model3 {
            delta_bar,
            alpha,
            d0: MODEL3_D0,
            alpha_p: MODEL3_ALPHA_P,
        }
    }

    /// Every device at `delta_bar`.
    pub fn perfect_power_control(delta_bar: f64) -> Self {
        Self::model1(delta_bar, 0.0)
    }

    pub fn delta_bar(&self) -> f64 {
        match *self {
            LargeScaleModel::Model1 { delta_bar, .. }
            | LargeScaleModel::Model2 { delta_bar, .. }
            | LargeScaleModel::Model3 { delta_bar, .. } => delta_bar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::domain("LargeScaleModel", msg));
        let d = self.delta_bar();
        if !(d > 0.0 && d.is_finite()) {
            return bad(alloc::format!("delta_bar = {d} must be positive"));
        }
        match *self {
            LargeScaleModel::Model1 { alpha, .. } => {
                if !(0.0..=1.0).contains(&alpha) {
                    return bad(alloc::format!("Model 1 alpha = {alpha} outside [0, 1]"));
                }
            }
            LargeScaleModel::Model2 { sigma_v2, .. } => {
                if !(sigma_v2 >= 0.0 && sigma_v2.is_finite()) {
                    return bad(alloc::format!("Model 2 sigma_v2 = {sigma_v2} must be >= 0"));
                }
            }
            LargeScaleModel::Model3 {
                alpha, d0, alpha_p, ..
            } => {
                // alpha = 1 puts devices at the base station: infinite moments.
                if !(0.0..1.0).contains(&alpha) {
                    return bad(alloc::format!("Model 3 alpha = {alpha} outside [0, 1)"));
                }
                if !(d0 > 0.0 && alpha_p > 0.0) {
                    return bad(alloc::format!("Model 3 d0 = {d0}, alpha_p = {alpha_p}"));
                }
            }
        }
        Ok(())
    }

    /// True when every draw equals `delta_bar`.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            LargeScaleModel::Model1 { alpha, .. } | LargeScaleModel::Model3 { alpha, .. } => {
                alpha == 0.0
            }
            LargeScaleModel::Model2 { sigma_v2, .. } => sigma_v2 == 0.0,
        }
    }

    /// `beta` as a function of the model's underlying variable `v`.
    fn beta_of(&self, v: f64) -> f64 {
        match *self {
            LargeScaleModel::Model1 { delta_bar, .. } => delta_bar * (1.0 + v),
            LargeScaleModel::Model2 { delta_bar, .. } => delta_bar * libm::exp(v * LN_10 / 10.0),
            LargeScaleModel::Model3 {
                delta_bar,
                d0,
                alpha_p,
                ..
            } => {
                let d = d0 * (1.0 + v);
                delta_bar * libm::pow(d / d0, -alpha_p)
            }
        }
    }

    /// One draw of `beta`.
    pub fn sample_beta<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            LargeScaleModel::Model1 { alpha, .. } | LargeScaleModel::Model3 { alpha, .. } => {
                if alpha == 0.0 {
                    return self.delta_bar();
                }
                let u: f64 = rng.random();
                self.beta_of(alpha * (2.0 * u - 1.0))
            }
            LargeScaleModel::Model2 { sigma_v2, .. } => {
                if sigma_v2 == 0.0 {
                    return self.delta_bar();
                }
                let z: f64 = StandardNormal.sample(rng);
                self.beta_of(libm::sqrt(sigma_v2) * z)
            }
        }
    }

    /// `E[beta^n]` in closed form.
    pub fn raw_moment(&self, n: u32) -> f64 {
        let nf = n as f64;
        let scale = libm::pow(self.delta_bar(), nf);
        match *self {
            LargeScaleModel::Model1 { alpha, .. } => {
                // E[(1+v)^n] = sum over even k of C(n, k) alpha^k / (k + 1).
                let mut s = 0.0;
                let mut binom = 1.0;
                for k in 0..=n {
                    if k % 2 == 0 {
                        s += binom * libm::pow(alpha, k as f64) / (k as f64 + 1.0);
                    }
                    binom = binom * (nf - k as f64) / (k as f64 + 1.0);
                }
                scale * s
            }
            LargeScaleModel::Model2 { sigma_v2, .. } => {
                let c = LN_10 / 10.0;
                scale * libm::exp(nf * nf * c * c * sigma_v2 / 2.0)
            }
            LargeScaleModel::Model3 { alpha, alpha_p, .. } => {
                scale * uniform_power_mean(alpha, -nf * alpha_p)
            }
        }
    }

    pub fn analytic_moments(&self) -> BetaMoments {
        BetaMoments {
            mean: self.raw_moment(1),
            mean_sq: self.raw_moment(2),
            mean_4th: self.raw_moment(4),
        }
    }

    /// `E[f(beta)]` by adaptive quadrature over the model's variable.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.expect_with(f, &QuadConfig::default())
    }

    pub fn expect_with<F: Fn(f64) -> f64>(&self, f: F, cfg: &QuadConfig) -> Result<f64> {
        if self.is_degenerate() {
            return Ok(f(self.delta_bar()));
        }
        match *self {
            LargeScaleModel::Model1 { alpha, .. } | LargeScaleModel::Model3 { alpha, .. } => {
                let integral = integrate(|v| f(self.beta_of(v)), -alpha, alpha, cfg)?;
                Ok(integral / (2.0 * alpha))
            }
            LargeScaleModel::Model2 { sigma_v2, .. } => {
                let sigma = libm::sqrt(sigma_v2);
                let norm = 1.0 / (sigma * libm::sqrt(2.0 * PI));
                let density = |v: f64| norm * libm::exp(-0.5 * (v / sigma) * (v / sigma));
                integrate(
                    |v| density(v) * f(self.beta_of(v)),
                    -NORMAL_SPAN * sigma,
                    NORMAL_SPAN * sigma,
                    cfg,
                )
            }
        }
    }
}

/// `M x n` complex channel gains, stored column-major (one column per device).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub m: usize,
    pub betas: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn n_devices(&self) -> usize {
        self.betas.len()
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.gains[j * self.m..(j + 1) * self.m]
    }
}

/// One `CN(0, var)` draw.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = libm::sqrt(0.5 * var);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Independent `CN(0, beta_j I_M)` columns.
pub fn sample_channels<R: Rng + ?Sized>(
    betas: &[f64],
    m: usize,
    rng: &mut R,
) -> ChannelRealization {
    let mut gains = Vec::with_capacity(m * betas.len());
    for &beta in betas {
        for _ in 0..m {
            gains.push(complex_normal(rng, beta));
        }
    }
    ChannelRealization {
        m,
        betas: betas.to_vec(),
        gains,
    }
}
