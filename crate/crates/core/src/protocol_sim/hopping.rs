//! Pseudo-random pilot-hopping patterns and pattern-based identification.

use alloc::vec::Vec;

use crate::rng::mix64;

const HOP_KEY: u64 = 0x243F_6A88_85A3_08D3;

/// Counter-mode hopping: the pilot of `device` in `slot` of `frame` is a
/// keyed hash of the four integers, mapped onto `0..tau_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HoppingScheme {
    pub seed: u64,
    pub frame: u64,
    pub tau_p: usize,
}

impl HoppingScheme {
    pub fn new(seed: u64, frame: u64, tau_p: usize) -> Self {
        Self { seed, frame, tau_p }
    }

    /// Zero-based pilot index.
    #[inline]
    pub fn pilot(&self, device: usize, slot: usize) -> usize {
        let mut h = mix64(self.seed ^ HOP_KEY);
        h = mix64(h ^ device as u64);
        h = mix64(h ^ self.frame);
        h = mix64(h ^ slot as u64);
        ((h as u128 * self.tau_p as u128) >> 64) as usize
    }

    pub fn pattern(&self, device: usize, n_slots: usize) -> Vec<usize> {
        (0..n_slots).map(|s| self.pilot(device, s)).collect()
    }
}

/// Devices whose pattern hits a detected pilot in at least `rho L` of the
/// `L` observed slots. `detected[s][j]` flags pilot `j` in slot `s`;
/// `patterns[d]` is the pattern of device `d`.
pub fn match_patterns(detected: &[Vec<bool>], patterns: &[Vec<usize>], rho: f64) -> Vec<usize> {
    let l = detected.len();
    if l == 0 {
        return Vec::new();
    }
    let need = libm::ceil(rho * l as f64 - 1e-9).max(0.0) as usize;
    patterns
        .iter()
        .enumerate()
        .filter(|(_, pat)| {
            let hits = pat
                .iter()
                .zip(detected)
                .filter(|(&p, slot)| slot.get(p).copied().unwrap_or(false))
                .count();
            hits >= need
        })
        .map(|(d, _)| d)
        .collect()
}
