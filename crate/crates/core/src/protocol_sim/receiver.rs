//! Receiver-side processing of one slot: pilot detection, sum-power and
//! channel estimation, and MRC with a genie SINR measurement.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::channel_models::{complex_normal, ChannelRealization};

/// Received pilot block `Y_p`, `M x tau_p`, column-major. With the
/// canonical orthonormal pilots, correlating with pilot `j` reads column `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub m: usize,
    pub tau_p: usize,
    pub data: Vec<Complex64>,
}

impl PilotObservation {
    /// `Y_p = sqrt(tau_p) sum_k g_k e_{pilot(k)}^T + N_p`.
    pub fn receive<R: Rng + ?Sized>(
        channels: &ChannelRealization,
        pilot_of: &[usize],
        tau_p: usize,
        rng: &mut R,
    ) -> Self {
        let m = channels.m;
        let mut data: Vec<Complex64> = (0..m * tau_p).map(|_| complex_normal(rng, 1.0)).collect();
        let amp = libm::sqrt(tau_p as f64);
        for (k, &j) in pilot_of.iter().enumerate() {
            let col = &mut data[j * m..(j + 1) * m];
            for (y, g) in col.iter_mut().zip(channels.column(k)) {
                *y += g * amp;
            }
        }
        Self { m, tau_p, data }
    }

    /// `y_p` for pilot `j`.
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    /// `||y_p||^2 / M` for pilot `j`.
    pub fn statistic(&self, j: usize) -> f64 {
        norm_sq(self.column(j)) / self.m as f64
    }
}

pub(crate) fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Pilot-detection threshold `1 + zeta sqrt(2 / M)` on `||y_p||^2 / M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionThreshold {
    pub zeta: f64,
}

impl Default for DetectionThreshold {
    fn default() -> Self {
        Self { zeta: 5.0 }
    }
}

impl DetectionThreshold {
    pub fn level(&self, m: usize) -> f64 {
        1.0 + self.zeta * libm::sqrt(2.0 / m as f64)
    }
}

/// Detection flag per pilot.
pub fn detect_pilots(obs: &PilotObservation, threshold: &DetectionThreshold) -> Vec<bool> {
    let level = threshold.level(obs.m);
    (0..obs.tau_p).map(|j| obs.statistic(j) > level).collect()
}

/// Channel-hardening estimate of the summed `beta` on pilot `j`.
pub fn estimate_sum_power(obs: &PilotObservation, j: usize) -> f64 {
    ((obs.statistic(j) - 1.0) / obs.tau_p as f64).max(0.0)
}

/// Scaled estimate `g' = sqrt(tau_p) / (tau_p sum_beta + 1) y_p`, shared by
/// every device on pilot `j`.
pub fn estimate_channel(obs: &PilotObservation, j: usize, beta_sum: f64) -> Vec<Complex64> {
    let tp = obs.tau_p as f64;
    let s = libm::sqrt(tp) / (tp * beta_sum + 1.0);
    obs.column(j).iter().map(|y| y * s).collect()
}

/// MMSE estimate of the channel of a device with `beta_0` on pilot `j`,
/// given the true summed `beta` on that pilot.
pub fn genie_mmse(obs: &PilotObservation, j: usize, beta_0: f64, beta_sum: f64) -> Vec<Complex64> {
    estimate_channel(obs, j, beta_sum)
        .into_iter()
        .map(|z| z * beta_0)
        .collect()
}

/// Signal and interference-plus-noise powers at an MRC output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrcMeasurement {
    pub signal: f64,
    pub interference: f64,
}

impl MrcMeasurement {
    pub fn sinr(&self) -> f64 {
        if self.signal == 0.0 {
            0.0
        } else {
            self.signal / self.interference
        }
    }
}

/// Genie decomposition of the MRC output for device `k`.
///
/// `estimate` is the scaled estimate of `k`'s pilot; the estimate of device
/// `i` on the same pilot is `beta_known[i] * estimate` and its error is the
/// difference to the true channel. `combiner` is any positive multiple of
/// `estimate`. `power[i]` is the data-symbol power of device `i`.
pub fn mrc_and_measure(
    channels: &ChannelRealization,
    pilot_of: &[usize],
    k: usize,
    estimate: &[Complex64],
    combiner: &[Complex64],
    beta_known: &[f64],
    power: &[f64],
) -> MrcMeasurement {
    let d = dot_conj(combiner, estimate);
    let own = pilot_of[k];
    let mut signal = 0.0;
    let mut interference = norm_sq(combiner);
    for i in 0..channels.n_devices() {
        let c = dot_conj(combiner, channels.column(i));
        if pilot_of[i] == own {
            let est = d * beta_known[i];
            let err = est - c;
            interference += power[i] * err.norm_sqr();
            if i == k {
                signal = power[i] * est.norm_sqr();
            } else {
                interference += power[i] * est.norm_sqr();
            }
        } else {
            interference += power[i] * c.norm_sqr();
        }
    }
    MrcMeasurement {
        signal,
        interference,
    }
}

/// `combiner^H y_d` for one received data vector.
pub fn mrc_output(combiner: &[Complex64], y_d: &[Complex64]) -> Complex64 {
    dot_conj(combiner, y_d)
}

/// `y_d = sum_k g_k x_k + n`.
pub fn receive_data<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    symbols: &[Complex64],
    rng: &mut R,
) -> Vec<Complex64> {
    let mut y: Vec<Complex64> = (0..channels.m).map(|_| complex_normal(rng, 1.0)).collect();
    for (k, x) in symbols.iter().enumerate() {
        for (yi, g) in y.iter_mut().zip(channels.column(k)) {
            *yi += g * x;
        }
    }
    y
}

/// Inner products `combiner^H g_i` for all devices, used by trace dumps.
pub fn combiner_gains(channels: &ChannelRealization, combiner: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); channels.n_devices()];
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot_conj(combiner, channels.column(i));
    }
    out
}
