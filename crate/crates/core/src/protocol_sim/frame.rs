//! Frame-level simulation: activity, hopping, per-slot reception and
//! per-device empirical rates.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::hopping::{match_patterns, HoppingScheme};
use super::receiver::{
    detect_pilots, estimate_channel, estimate_sum_power, mrc_and_measure, mrc_output, norm_sq,
    receive_data, DetectionThreshold, PilotObservation,
};
use crate::access_stats::{sample_active_set, ActivationLaw};
use crate::bounds::OperatingPoint;
use crate::channel_models::{complex_normal, sample_channels, LargeScaleModel};
use crate::math::{log2_1p, mean_and_std_err};
use crate::par::map_indexed;
use crate::rng::{substream, Purpose};
use crate::{Error, Result};

/// Which summed-`beta` value scales the channel estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Channel-hardening estimate from the received pilot block.
    Receiver,
    /// True summed `beta` of the devices on the pilot.
    Genie,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub k: u64,
    pub tau_u: usize,
    pub tau_p: usize,
    pub p_a: f64,
    pub n_slots: usize,
    pub threshold: DetectionThreshold,
    /// Fraction of slots a pattern must match to identify a device.
    pub rho: f64,
    /// Relative error of the receiver's `beta` knowledge: it uses
    /// `beta (1 + beta_error)`.
    pub beta_error: f64,
    pub estimator: Estimator,
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(op: &OperatingPoint, n_slots: usize) -> Self {
        Self {
            m: op.m,
            k: op.k,
            tau_u: op.tau_u,
            tau_p: op.tau_p,
            p_a: op.p_a,
            n_slots,
            threshold: DetectionThreshold::default(),
            rho: 0.9,
            beta_error: 0.0,
            estimator: Estimator::Receiver,
            record_trace: false,
        }
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            m: self.m,
            k: self.k,
            tau_u: self.tau_u,
            tau_p: self.tau_p,
            p_a: self.p_a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.operating_point().validate()?;
        if self.n_slots == 0 {
            return Err(Error::domain("SimConfig", "n_slots must be >= 1"));
        }
        if !(self.threshold.zeta > 0.0) {
            return Err(Error::domain("SimConfig", "zeta must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::domain(
                "SimConfig",
                alloc::format!("rho = {} outside [0, 1]", self.rho),
            ));
        }
        if !(self.beta_error > -1.0) {
            return Err(Error::domain("SimConfig", "beta_error must be > -1"));
        }
        Ok(())
    }
}

/// Who transmits in a frame, their `beta`, and their pilot in every slot.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub n_slots: usize,
    pub hopping: HoppingScheme,
    pub active: Vec<usize>,
    pub betas: Vec<f64>,
    /// `patterns[i][s]`: pilot of `active[i]` in slot `s`.
    pub patterns: Vec<Vec<usize>>,
}

impl FramePlan {
    /// Random activity and `beta`, hopping patterns from the shared scheme.
    pub fn draw(cfg: &SimConfig, model: &LargeScaleModel, seed: u64, frame: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = substream(seed, Purpose::Frame, frame);
        let active = sample_active_set(&ActivationLaw::new(cfg.k, cfg.p_a)?, &mut rng);
        let betas = active.iter().map(|_| model.sample_beta(&mut rng)).collect();
        Self::forced(cfg, active, betas, None, seed, frame)
    }

    /// Given activity and `beta`; `patterns` overrides the hopping scheme
    /// for the active devices.
    pub fn forced(
        cfg: &SimConfig,
        active: Vec<usize>,
        betas: Vec<f64>,
        patterns: Option<Vec<Vec<usize>>>,
        seed: u64,
        frame: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if active.len() != betas.len() || active.iter().any(|&d| d as u64 >= cfg.k) {
            return Err(Error::domain(
                "FramePlan",
                "active devices and betas disagree or exceed K",
            ));
        }
        let hopping = HoppingScheme::new(seed, frame, cfg.tau_p);
        let patterns = match patterns {
            Some(p) => {
                let ok = p.len() == active.len()
                    && p.iter()
                        .all(|row| row.len() == cfg.n_slots && row.iter().all(|&j| j < cfg.tau_p));
                if !ok {
                    return Err(Error::domain(
                        "FramePlan",
                        "forced patterns have the wrong shape",
                    ));
                }
                p
            }
            None => active
                .iter()
                .map(|&d| hopping.pattern(d, cfg.n_slots))
                .collect(),
        };
        Ok(Self {
            n_slots: cfg.n_slots,
            hopping,
            active,
            betas,
            patterns,
        })
    }

    /// Pattern of any device, active or not.
    pub fn pattern_of(&self, device: usize) -> Vec<usize> {
        match self.active.iter().position(|&d| d == device) {
            Some(i) => self.patterns[i].clone(),
            None => self.hopping.pattern(device, self.n_slots),
        }
    }
}

/// What the receiver saw in one slot. Vectors indexed by detected pilot are
/// aligned with `detected`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub slot: usize,
    pub detected: Vec<usize>,
    pub sum_power: Vec<f64>,
    /// `||g'||^2` of each detected pilot's scaled estimate.
    pub estimate_energy: Vec<f64>,
    /// MRC output for one data symbol.
    pub mrc: Vec<Complex64>,
    /// Genie SINR per active device (0 when its pilot was missed).
    pub sinr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame: u64,
    pub active: Vec<usize>,
    pub betas: Vec<f64>,
    /// Empirical rate of each active device, aligned with `active`.
    pub per_device_rate: Vec<f64>,
    pub identified: Vec<usize>,
    /// Sum of the rates of active devices that were identified.
    pub sum_rate: f64,
    /// Per-slot pilot detection flags.
    pub detections: Vec<Vec<bool>>,
    pub trace: Option<Vec<SlotOutcome>>,
}

impl FrameReport {
    pub fn missed(&self) -> Vec<usize> {
        self.active
            .iter()
            .copied()
            .filter(|d| !self.identified.contains(d))
            .collect()
    }

    pub fn false_identifications(&self) -> Vec<usize> {
        self.identified
            .iter()
            .copied()
            .filter(|d| !self.active.contains(d))
            .collect()
    }
}

/// Simulates one frame with random activity.
pub fn run_frame(
    cfg: &SimConfig,
    model: &LargeScaleModel,
    seed: u64,
    frame: u64,
) -> Result<FrameReport> {
    let plan = FramePlan::draw(cfg, model, seed, frame)?;
    run_plan(cfg, &plan, seed, frame)
}

/// Simulates `plan` slot by slot.
pub fn run_plan(cfg: &SimConfig, plan: &FramePlan, seed: u64, frame: u64) -> Result<FrameReport> {
    cfg.validate()?;
    let mut rng = substream(seed, Purpose::Sampling, frame);
    let n = plan.active.len();
    let prelog = (cfg.tau_u - cfg.tau_p) as f64 / cfg.tau_u as f64;
    let known: Vec<f64> = plan
        .betas
        .iter()
        .map(|b| match cfg.estimator {
            Estimator::Genie => *b,
            Estimator::Receiver => b * (1.0 + cfg.beta_error),
        })
        .collect();
    let power = vec![1.0; n];
    let mut acc = vec![0.0; n];
    let mut detections = Vec::with_capacity(cfg.n_slots);
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut pilot_of = vec![0usize; n];
    for s in 0..cfg.n_slots {
        for (p, pat) in pilot_of.iter_mut().zip(&plan.patterns) {
            *p = pat[s];
        }
        let ch = sample_channels(&plan.betas, cfg.m, &mut rng);
        let obs = PilotObservation::receive(&ch, &pilot_of, cfg.tau_p, &mut rng);
        let det = detect_pilots(&obs, &cfg.threshold);
        let mut estimates: Vec<Option<Vec<Complex64>>> = vec![None; cfg.tau_p];
        let mut sum_power = vec![0.0; cfg.tau_p];
        for j in (0..cfg.tau_p).filter(|&j| det[j]) {
            sum_power[j] = match cfg.estimator {
                Estimator::Receiver => estimate_sum_power(&obs, j),
                Estimator::Genie => plan
                    .betas
                    .iter()
                    .zip(&pilot_of)
                    .filter(|(_, &p)| p == j)
                    .map(|(b, _)| b)
                    .sum(),
            };
            estimates[j] = Some(estimate_channel(&obs, j, sum_power[j]));
        }
        let mut sinr = vec![0.0; n];
        for k in 0..n {
            if let Some(est) = &estimates[pilot_of[k]] {
                sinr[k] = mrc_and_measure(&ch, &pilot_of, k, est, est, &known, &power).sinr();
                acc[k] += prelog * log2_1p(sinr[k]);
            }
        }
        if let Some(tr) = trace.as_mut() {
            let symbols: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let y_d = receive_data(&ch, &symbols, &mut rng);
            let detected: Vec<usize> = (0..cfg.tau_p).filter(|&j| det[j]).collect();
            let mut out = SlotOutcome {
                slot: s,
                sum_power: detected.iter().map(|&j| sum_power[j]).collect(),
                estimate_energy: Vec::with_capacity(detected.len()),
                mrc: Vec::with_capacity(detected.len()),
                sinr,
                detected,
            };
            for &j in &out.detected {
                let est = estimates[j]
                    .as_ref()
                    .expect("detected pilot has an estimate");
                out.estimate_energy.push(norm_sq(est));
                out.mrc.push(mrc_output(est, &y_d));
            }
            tr.push(out);
        }
        detections.push(det);
    }
    let per_device_rate: Vec<f64> = acc.iter().map(|a| a / cfg.n_slots as f64).collect();
    let all_patterns: Vec<Vec<usize>> = (0..cfg.k as usize).map(|d| plan.pattern_of(d)).collect();
    let identified = match_patterns(&detections, &all_patterns, cfg.rho);
    let sum_rate = plan
        .active
        .iter()
        .zip(&per_device_rate)
        .filter(|(d, _)| identified.binary_search(d).is_ok())
        .map(|(_, r)| r)
        .sum();
    Ok(FrameReport {
        frame,
        active: plan.active.clone(),
        betas: plan.betas.clone(),
        per_device_rate,
        identified,
        sum_rate,
        detections,
        trace,
    })
}

/// Sum-rate statistics over independent frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub frame_sum_rates: Vec<f64>,
    pub mean_sum_rate: f64,
    pub std_err: f64,
    pub missed: usize,
    pub false_identifications: usize,
    pub active_total: usize,
}

/// Runs frames `0..n_frames` independently and summarizes.
pub fn simulate(
    cfg: &SimConfig,
    model: &LargeScaleModel,
    n_frames: usize,
    seed: u64,
) -> Result<SimSummary> {
    if n_frames == 0 {
        return Err(Error::domain("simulate", "n_frames must be >= 1"));
    }
    let reports: Vec<Result<FrameReport>> = map_indexed(n_frames, |f| {
        let mut r = run_frame(cfg, model, seed, f as u64)?;
        r.detections = Vec::new();
        Ok(r)
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let frame_sum_rates: Vec<f64> = reports.iter().map(|r| r.sum_rate).collect();
    let (mean_sum_rate, std_err) = mean_and_std_err(&frame_sum_rates);
    Ok(SimSummary {
        mean_sum_rate,
        std_err,
        missed: reports.iter().map(|r| r.missed().len()).sum(),
        false_identifications: reports
            .iter()
            .map(|r| r.false_identifications().len())
            .sum(),
        active_total: reports.iter().map(|r| r.active.len()).sum(),
        frame_sum_rates,
    })
}
