//! Achievable sum-rate bounds.
//!
//! The hierarchy, from tightest to simplest:
//!
//! - **R1**: exact average over activation, pilot collisions and the `beta`
//!   of every involved device (Monte Carlo over `beta`).
//! - **R2**: the interference denominator averaged over the `beta` of
//!   colliders and other devices; only `beta_0` remains random.
//! - **R3**: the denominator further averaged over the number of colliders
//!   and active devices.
//! - **Ra**: the large-system simplification of R3.
//!
//! All rates are in bits per symbol and include the `(tau_u - tau_p) / tau_u`
//! pilot overhead.

use alloc::vec;
use alloc::vec::Vec;

use crate::access_stats::{truncate_support, ActivationLaw, CollisionLaw, DEFAULT_EPS_TAIL};
use crate::channel_models::{BetaMoments, LargeScaleModel};
use crate::math::{log2_1p, mean_and_std_err, pairwise_sum};
use crate::par::map_indexed;
use crate::rng::{substream, Purpose};
use crate::{Error, Result};

/// Monte Carlo settings for the `beta` expectations of R1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_beta_samples: usize,
    pub eps_tail: f64,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_beta_samples: 2000,
            eps_tail: DEFAULT_EPS_TAIL,
            seed: 0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_beta_samples == 0 {
            return Err(Error::domain("McConfig", "n_beta_samples must be >= 1"));
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            return Err(Error::domain(
                "McConfig",
                alloc::format!("eps_tail = {} outside (0, 1)", self.eps_tail),
            ));
        }
        Ok(())
    }
}

/// A fully specified system: antennas, devices, slot and pilot lengths,
/// activation probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub m: usize,
    pub k: u64,
    pub tau_u: usize,
    pub tau_p: usize,
    pub p_a: f64,
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::domain("OperatingPoint", msg));
        if self.m < 2 {
            return bad(alloc::format!("M = {} (need M >= 2)", self.m));
        }
        if self.k == 0 {
            return bad("K must be >= 1".into());
        }
        if self.tau_p == 0 || self.tau_p > self.tau_u {
            return bad(alloc::format!(
                "tau_p = {} outside [1, tau_u = {}]",
                self.tau_p,
                self.tau_u
            ));
        }
        if !(0.0..=1.0).contains(&self.p_a) {
            return bad(alloc::format!("p_a = {} outside [0, 1]", self.p_a));
        }
        Ok(())
    }

    /// Mean number of active devices.
    pub fn pak(&self) -> f64 {
        self.p_a * self.k as f64
    }

    /// Fraction of the slot left for data.
    pub fn prelog(&self) -> f64 {
        (self.tau_u - self.tau_p) as f64 / self.tau_u as f64
    }

    /// Same point with `p_a` chosen so that `p_a K = pak`.
    pub fn with_pak(mut self, pak: f64) -> Self {
        self.p_a = (pak / self.k as f64).clamp(0.0, 1.0);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundId {
    R1,
    R2,
    R3,
    Ra,
}

impl BoundId {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundId::R1 => "R1",
            BoundId::R2 => "R2",
            BoundId::R3 => "R3",
            BoundId::Ra => "Ra",
        }
    }
}

/// A sum-rate value, which bound produced it, and its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub value: f64,
    pub bound: BoundId,
    /// 0 when the value is fully analytic.
    pub mc_samples: usize,
    pub mc_std_err: f64,
}

impl BoundResult {
    fn analytic(bound: BoundId, value: f64) -> Self {
        Self {
            value,
            bound,
            mc_samples: 0,
            mc_std_err: 0.0,
        }
    }
}

/// One collision event seen by a reference device 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionScenario {
    pub beta_0: f64,
    /// `beta` of the devices sharing device 0's pilot.
    pub colliders: Vec<f64>,
    pub k_a: u64,
    pub tau_p: usize,
    pub m: usize,
}

impl CollisionScenario {
    fn check(&self, others: &[f64]) -> Result<()> {
        if self.m < 2 {
            return Err(Error::domain("sinr1", alloc::format!("M = {} < 2", self.m)));
        }
        if self.tau_p == 0 {
            return Err(Error::domain("sinr1", "tau_p must be >= 1"));
        }
        let expected = (self.k_a as usize)
            .checked_sub(1 + self.colliders.len())
            .ok_or_else(|| {
                Error::domain(
                    "sinr1",
                    alloc::format!(
                        "{} colliders with only K_a = {} active",
                        self.colliders.len(),
                        self.k_a
                    ),
                )
            })?;
        if others.len() != expected {
            return Err(Error::domain(
                "sinr1",
                alloc::format!(
                    "expected {expected} other active betas, got {}",
                    others.len()
                ),
            ));
        }
        Ok(())
    }
}

/// The three interference contributions to `1 / SINR_1`, built from the
/// MMSE estimate and error variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrComponents {
    pub pilot_contamination_term: f64,
    pub estimation_error_term: f64,
    pub residual_interference_term: f64,
}

impl SinrComponents {
    pub fn from_estimation(s: &CollisionScenario, others: &[f64]) -> Result<Self> {
        s.check(others)?;
        let tau_p = s.tau_p as f64;
        let m1 = (s.m - 1) as f64;
        let set_sum = s.beta_0 + s.colliders.iter().sum::<f64>();
        let var_y = tau_p * set_sum + 1.0;
        // sigma^2_{h0 y} = sqrt(tau_p) beta_0, so sigma^4 = tau_p beta_0^2.
        let var_est0 = tau_p * s.beta_0 * s.beta_0 / var_y;
        let error_var = |beta_j: f64| beta_j - tau_p * beta_j * beta_j / var_y;
        let pilot = s.colliders.iter().map(|b| b * b).sum::<f64>() / (s.beta_0 * s.beta_0);
        let est = (error_var(s.beta_0) + s.colliders.iter().map(|&b| error_var(b)).sum::<f64>())
            / (m1 * var_est0);
        let residual = (others.iter().sum::<f64>() + 1.0) / (m1 * var_est0);
        Ok(Self {
            pilot_contamination_term: pilot,
            estimation_error_term: est,
            residual_interference_term: residual,
        })
    }

    pub fn inverse_sinr(&self) -> f64 {
        self.pilot_contamination_term + self.estimation_error_term + self.residual_interference_term
    }

    pub fn sinr(&self) -> f64 {
        1.0 / self.inverse_sinr()
    }
}

/// `SINR_1` from the aggregate sums it depends on.
///
/// `s1`, `s2`: sum and sum of squares of collider betas; `others`: sum of
/// betas of active non-colliders.
#[inline]
pub fn sinr1_from_sums(beta_0: f64, s1: f64, s2: f64, others: f64, tau_p: f64, m: f64) -> f64 {
    let set_sum = beta_0 + s1;
    let set_sq = beta_0 * beta_0 + s2;
    let gain = tau_p * (m - 1.0);
    let num = gain * beta_0 * beta_0;
    let den = gain * s2
        + set_sum
        + tau_p * (set_sum * set_sum - set_sq)
        + (1.0 + others) * (1.0 + tau_p * set_sum);
    num / den
}

/// `SINR_1` of device 0 for a given collider set and other active devices.
///
/// Within the contamination set `{0} ∪ C_0`, the colliders of member `i` are
/// the other members.
pub fn sinr1(s: &CollisionScenario, other_active_betas: &[f64]) -> Result<f64> {
    s.check(other_active_betas)?;
    let tau_p = s.tau_p as f64;
    let m1 = (s.m - 1) as f64;
    let set: Vec<f64> = core::iter::once(s.beta_0)
        .chain(s.colliders.iter().copied())
        .collect();
    let set_sum: f64 = set.iter().sum();
    let num = tau_p * m1 * s.beta_0 * s.beta_0;
    let contamination = tau_p * m1 * s.colliders.iter().map(|b| b * b).sum::<f64>();
    let estimation: f64 = set
        .iter()
        .map(|&bi| bi * (1.0 + tau_p * (set_sum - bi)))
        .sum();
    let residual = (1.0 + other_active_betas.iter().sum::<f64>()) * (1.0 + tau_p * set_sum);
    Ok(num / (contamination + estimation + residual))
}

/// Pilot-overhead-weighted rate for a given SINR.
#[inline]
pub fn rate_from_sinr(sinr: f64, tau_p: usize, tau_u: usize) -> f64 {
    (tau_u - tau_p) as f64 / tau_u as f64 * log2_1p(sinr)
}

/// Lower bound on the rate of device 0 in one collision scenario.
pub fn rate1(s: &CollisionScenario, other_active_betas: &[f64], tau_u: usize) -> Result<f64> {
    if s.tau_p == 0 || s.tau_p > tau_u {
        return Err(Error::domain(
            "rate1",
            alloc::format!("tau_p = {} outside [1, tau_u = {tau_u}]", s.tau_p),
        ));
    }
    Ok(rate_from_sinr(
        sinr1(s, other_active_betas)?,
        s.tau_p,
        tau_u,
    ))
}

/// `SINR_2`: the `SINR_1` denominator averaged over the betas of the `c`
/// colliders and the remaining `K_a - 1 - c` active devices.
pub fn sinr2(
    c: u64,
    k_a: u64,
    beta_0: f64,
    moments: &BetaMoments,
    tau_p: usize,
    m: usize,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::domain("sinr2", alloc::format!("M = {m} < 2")));
    }
    if k_a == 0 || c >= k_a {
        return Err(Error::domain(
            "sinr2",
            alloc::format!("c = {c} outside [0, K_a - 1] for K_a = {k_a}"),
        ));
    }
    let (tp, m1, cf) = (tau_p as f64, (m - 1) as f64, c as f64);
    let (b1, b2) = (moments.mean, moments.mean_sq);
    let num = tp * m1 * beta_0 * beta_0;
    let den = tp * m1 * b2 * cf + beta_0 * (1.0 + tp * cf * b1) - cf * b1 * b1 * tp
        + (1.0 + (k_a - 1) as f64 * b1) * (1.0 + beta_0 * tp + tp * cf * b1);
    if !(den > 0.0) {
        return Err(Error::Numeric(alloc::format!(
            "SINR_2 denominator {den} is not positive"
        )));
    }
    Ok(num / den)
}

/// `SINR_3`: the `SINR_2` denominator averaged over the collider count and
/// the number of active devices.
pub fn sinr3(
    beta_0: f64,
    moments: &BetaMoments,
    tau_p: usize,
    p_a: f64,
    k: u64,
    m: usize,
) -> Result<f64> {
    let pak = p_a * k as f64;
    // p_a is often pak / K, so allow the round trip to lose an ulp or two.
    if pak < 1.0 - 1e-12 {
        return Err(Error::domain(
            "sinr3",
            alloc::format!("p_a K = {pak} < 1; evaluate R1 directly for sparse activity"),
        ));
    }
    if m < 2 {
        return Err(Error::domain("sinr3", alloc::format!("M = {m} < 2")));
    }
    let (tp, m1, kf) = (tau_p as f64, (m - 1) as f64, k as f64);
    let (b1, b2) = (moments.mean, moments.mean_sq);
    let n = (pak - 1.0).max(0.0);
    let num = tp * m1 * beta_0 * beta_0;
    let den = b2 * m1 * n + beta_0 * (1.0 + b1 * n) - b1 * b1 * n
        + (1.0 + n * b1) * (1.0 + beta_0 * tp)
        + n * b1
        + b1 * b1 * (p_a * p_a * kf * (kf - 1.0) - n);
    if !(den > 0.0) {
        return Err(Error::Numeric(alloc::format!(
            "SINR_3 denominator {den} is not positive"
        )));
    }
    Ok(num / den)
}

/// The three terms of `1 / SINR_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinraTerms {
    /// Interference from pilot collisions.
    pub collision: f64,
    /// Residual multi-device interference after MRC.
    pub multi_device: f64,
    /// Residual interference scaling with the device's own channel.
    pub self_scaled: f64,
}

pub fn sinra_terms(
    beta_0: f64,
    moments: &BetaMoments,
    tau_p: usize,
    pak: f64,
    m: usize,
) -> SinraTerms {
    let (tp, mf) = (tau_p as f64, m as f64);
    let b0sq = beta_0 * beta_0;
    SinraTerms {
        collision: moments.mean_sq * pak / (tp * b0sq),
        multi_device: moments.mean * moments.mean * pak * pak / (mf * tp * b0sq),
        self_scaled: moments.mean * beta_0 * pak / (mf * b0sq),
    }
}

/// Large-system SINR.
pub fn sinra(beta_0: f64, moments: &BetaMoments, tau_p: usize, pak: f64, m: usize) -> f64 {
    let (tp, mf) = (tau_p as f64, m as f64);
    let num = mf * tp * beta_0 * beta_0;
    let den = moments.mean_sq * mf * pak
        + moments.mean * moments.mean * pak * pak
        + moments.mean * beta_0 * pak * tp;
    num / den
}

/// R3 sum-rate bound.
pub fn r3(op: &OperatingPoint, model: &LargeScaleModel) -> Result<BoundResult> {
    op.validate()?;
    if op.p_a == 0.0 || op.tau_p == op.tau_u {
        return Ok(BoundResult::analytic(BoundId::R3, 0.0));
    }
    let moments = model.analytic_moments();
    // Surface the domain error once instead of inside the integrand.
    sinr3(model.delta_bar(), &moments, op.tau_p, op.p_a, op.k, op.m)?;
    let e = model
        .expect(|b0| log2_1p(sinr3(b0, &moments, op.tau_p, op.p_a, op.k, op.m).unwrap_or(0.0)))?;
    Ok(BoundResult::analytic(
        BoundId::R3,
        op.prelog() * op.pak() * e,
    ))
}

/// Ra sum-rate bound.
pub fn ra(op: &OperatingPoint, model: &LargeScaleModel) -> Result<BoundResult> {
    op.validate()?;
    Ok(BoundResult::analytic(
        BoundId::Ra,
        ra_value(op.tau_u, op.tau_p, op.pak(), op.m, model)?,
    ))
}

/// Ra as a function of continuous `p_a K`, independent of `K`.
pub fn ra_value(
    tau_u: usize,
    tau_p: usize,
    pak: f64,
    m: usize,
    model: &LargeScaleModel,
) -> Result<f64> {
    if pak <= 0.0 || tau_p >= tau_u {
        return Ok(0.0);
    }
    let moments = model.analytic_moments();
    let e = model.expect(|b0| log2_1p(sinra(b0, &moments, tau_p, pak, m)))?;
    Ok(pak * (tau_u - tau_p) as f64 / tau_u as f64 * e)
}

/// R2 sum-rate bound. The `beta_0` expectation of each cell is done by
/// quadrature, so the result is deterministic.
pub fn r2_bar(op: &OperatingPoint, model: &LargeScaleModel, mc: &McConfig) -> Result<BoundResult> {
    op.validate()?;
    mc.validate()?;
    if op.p_a == 0.0 || op.tau_p == op.tau_u {
        return Ok(BoundResult::analytic(BoundId::R2, 0.0));
    }
    let moments = model.analytic_moments();
    let act = truncate_support(&ActivationLaw::new(op.k, op.p_a)?, mc.eps_tail);
    let cells: Vec<Result<f64>> = map_indexed(act.len(), |i| {
        let k_a = act.lo + i as u64;
        if k_a == 0 {
            return Ok(0.0);
        }
        let coll = truncate_support(&CollisionLaw::new(k_a, op.tau_p as u64)?, mc.eps_tail);
        let mut parts = Vec::with_capacity(coll.len());
        for (c, pc) in coll.iter() {
            let e = model
                .expect(|b0| log2_1p(sinr2(c, k_a, b0, &moments, op.tau_p, op.m).unwrap_or(0.0)))?;
            parts.push(pc * e);
        }
        Ok(act.masses[i] * k_a as f64 * pairwise_sum(&parts))
    });
    let cells = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(BoundResult::analytic(
        BoundId::R2,
        op.prelog() * pairwise_sum(&cells),
    ))
}

/// Common random numbers for R1: per Monte Carlo sample, a `beta_0` and the
/// running sums of `beta` and `beta^2` over a sequence of other devices.
///
/// Colliders of a cell `(K_a, c)` are the first `c` devices of the sequence
/// and the remaining active devices the next `K_a - 1 - c`, so every cell is
/// evaluated in O(1) per sample from the prefix sums.
#[derive(Debug, Clone)]
pub struct BetaPool {
    n_samples: usize,
    len: usize,
    beta0: Vec<f64>,
    // Laid out `[k * n_samples + s]`: prefix length k, sample s.
    sum1: Vec<f64>,
    sum2: Vec<f64>,
}

impl BetaPool {
    /// Prefix sums of lengths `0..len` for `n_samples` samples. Sample `s`
    /// uses its own random stream, so a longer pool extends a shorter one.
    pub fn generate(model: &LargeScaleModel, n_samples: usize, len: usize, seed: u64) -> Self {
        let len = len.max(1);
        let columns: Vec<(f64, Vec<f64>, Vec<f64>)> = map_indexed(n_samples, |s| {
            let mut rng = substream(seed, Purpose::BetaPool, s as u64);
            let b0 = model.sample_beta(&mut rng);
            let mut p1 = Vec::with_capacity(len);
            let mut p2 = Vec::with_capacity(len);
            let (mut a1, mut a2) = (0.0, 0.0);
            p1.push(0.0);
            p2.push(0.0);
            for _ in 1..len {
                let b = model.sample_beta(&mut rng);
                a1 += b;
                a2 += b * b;
                p1.push(a1);
                p2.push(a2);
            }
            (b0, p1, p2)
        });
        let mut beta0 = Vec::with_capacity(n_samples);
        let mut sum1 = vec![0.0; len * n_samples];
        let mut sum2 = vec![0.0; len * n_samples];
        for (s, (b0, p1, p2)) in columns.into_iter().enumerate() {
            beta0.push(b0);
            for k in 0..len {
                sum1[k * n_samples + s] = p1[k];
                sum2[k * n_samples + s] = p2[k];
            }
        }
        Self {
            n_samples,
            len,
            beta0,
            sum1,
            sum2,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Largest `K_a` this pool can serve.
    pub fn max_active(&self) -> u64 {
        self.len as u64
    }

    #[inline]
    fn row(&self, v: &[f64], k: usize) -> core::ops::Range<usize> {
        let _ = v;
        k * self.n_samples..(k + 1) * self.n_samples
    }
}

/// Reusable R1 evaluator sharing one [`BetaPool`] across operating points.
#[derive(Debug, Clone)]
pub struct R1Evaluator {
    model: LargeScaleModel,
    mc: McConfig,
    pool: BetaPool,
}

impl R1Evaluator {
    /// Pool sized for at most `max_active` simultaneously active devices.
    pub fn new(model: &LargeScaleModel, mc: &McConfig, max_active: u64) -> Result<Self> {
        model.validate()?;
        mc.validate()?;
        Ok(Self {
            model: *model,
            mc: *mc,
            pool: BetaPool::generate(model, mc.n_beta_samples, max_active as usize, mc.seed),
        })
    }

    /// Pool size needed to evaluate `op` without truncation loss.
    pub fn required_active(op: &OperatingPoint, eps_tail: f64) -> Result<u64> {
        let act = truncate_support(&ActivationLaw::new(op.k, op.p_a)?, eps_tail);
        Ok(act.hi)
    }

    /// Grows the pool so it can serve `max_active`. Existing draws are kept.
    pub fn ensure_capacity(&mut self, max_active: u64) {
        if max_active > self.pool.max_active() {
            self.pool = BetaPool::generate(
                &self.model,
                self.mc.n_beta_samples,
                max_active as usize,
                self.mc.seed,
            );
        }
    }

    pub fn model(&self) -> &LargeScaleModel {
        &self.model
    }

    pub fn mc(&self) -> &McConfig {
        &self.mc
    }

    /// R1 sum-rate bound at `op`.
    pub fn evaluate(&self, op: &OperatingPoint) -> Result<BoundResult> {
        self.evaluate_inner(op, None)
    }

    /// Per-device rate of a device with fixed `beta_0`.
    pub fn per_device(&self, op: &OperatingPoint, beta_0: f64) -> Result<BoundResult> {
        let mut r = self.evaluate_inner(op, Some(beta_0))?;
        r.value /= op.k as f64;
        r.mc_std_err /= op.k as f64;
        Ok(r)
    }

    fn evaluate_inner(&self, op: &OperatingPoint, fixed_beta0: Option<f64>) -> Result<BoundResult> {
        op.validate()?;
        let n = self.pool.n_samples;
        if op.p_a == 0.0 || op.tau_p == op.tau_u {
            return Ok(BoundResult {
                value: 0.0,
                bound: BoundId::R1,
                mc_samples: n,
                mc_std_err: 0.0,
            });
        }
        let act = truncate_support(&ActivationLaw::new(op.k, op.p_a)?, self.mc.eps_tail);
        if act.hi > self.pool.max_active() {
            let mut bigger = self.clone();
            bigger.ensure_capacity(act.hi);
            return bigger.evaluate_inner(op, fixed_beta0);
        }
        let pool = &self.pool;
        let (tp, mf) = (op.tau_p as f64, op.m as f64);
        let tau_p = op.tau_p as u64;
        let eps = self.mc.eps_tail;
        let partials: Vec<Vec<f64>> = map_indexed(act.len(), |i| {
            let k_a = act.lo + i as u64;
            let mut acc = vec![0.0; n];
            if k_a == 0 {
                return acc;
            }
            let w_a = act.masses[i] * k_a as f64;
            // K_a >= 1 and tau_p >= 1 were validated above.
            let coll = truncate_support(&CollisionLaw { k_a, tau_p }, eps);
            let last = pool.row(&pool.sum1, (k_a - 1) as usize);
            for (c, pc) in coll.iter() {
                let w = w_a * pc;
                let rc = pool.row(&pool.sum1, c as usize);
                let s1 = &pool.sum1[rc.clone()];
                let s2 = &pool.sum2[rc];
                let tot = &pool.sum1[last.clone()];
                for s in 0..n {
                    let b0 = fixed_beta0.unwrap_or(pool.beta0[s]);
                    let sinr = sinr1_from_sums(b0, s1[s], s2[s], tot[s] - s1[s], tp, mf);
                    acc[s] += w * log2_1p(sinr);
                }
            }
            acc
        });
        let mut per_sample = vec![0.0; n];
        let mut column = Vec::with_capacity(partials.len());
        for (s, slot) in per_sample.iter_mut().enumerate() {
            column.clear();
            column.extend(partials.iter().map(|p| p[s]));
            *slot = op.prelog() * pairwise_sum(&column);
        }
        let (mean, se) = mean_and_std_err(&per_sample);
        Ok(BoundResult {
            value: mean,
            bound: BoundId::R1,
            mc_samples: n,
            mc_std_err: se,
        })
    }
}

/// R1 sum-rate bound with a freshly generated pool.
pub fn r1_bar(op: &OperatingPoint, model: &LargeScaleModel, mc: &McConfig) -> Result<BoundResult> {
    op.validate()?;
    let need = R1Evaluator::required_active(op, mc.eps_tail)?;
    R1Evaluator::new(model, mc, need)?.evaluate(op)
}

/// Average rate of one device whose large-scale gain is `beta_0`.
pub fn per_device_rate(
    op: &OperatingPoint,
    model: &LargeScaleModel,
    beta_0: f64,
    mc: &McConfig,
) -> Result<BoundResult> {
    op.validate()?;
    let need = R1Evaluator::required_active(op, mc.eps_tail)?;
    R1Evaluator::new(model, mc, need)?.per_device(op, beta_0)
}
