//! Device activation and pilot collision laws.
//!
//! `K` devices activate independently with probability `p_a`, so the number
//! of active devices is Binomial(`K`, `p_a`). Given `K_a` active devices, the
//! number of devices sharing the pilot of a reference device is
//! Binomial(`K_a - 1`, `1 / tau_p`).

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::binomial_pmf;
use crate::{Error, Result};

/// Tail mass dropped by default when truncating the outer sums.
pub const DEFAULT_EPS_TAIL: f64 = 1e-9;

/// A binomial law over `0..=trials()`.
pub trait BinomialLaw {
    fn trials(&self) -> u64;
    fn success(&self) -> f64;

    /// Mass at `x`, zero outside the support.
    fn mass(&self, x: u64) -> f64 {
        binomial_pmf(x, self.trials(), self.success())
    }

    fn mode(&self) -> u64 {
        let n = self.trials();
        let m = libm::floor((n as f64 + 1.0) * self.success()) as u64;
        m.min(n)
    }
}

/// Activation of `k` devices, each with probability `p_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationLaw {
    pub k: u64,
    pub p_a: f64,
}

impl ActivationLaw {
    pub fn new(k: u64, p_a: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("ActivationLaw", "K must be at least 1"));
        }
        if !(0.0..=1.0).contains(&p_a) {
            return Err(Error::domain(
                "ActivationLaw",
                alloc::format!("p_a = {p_a} outside [0, 1]"),
            ));
        }
        Ok(Self { k, p_a })
    }

    pub fn mean(&self) -> f64 {
        self.p_a * self.k as f64
    }

    pub fn variance(&self) -> f64 {
        self.p_a * self.k as f64 * (1.0 - self.p_a)
    }

    /// Probability that exactly `k_a` devices are active.
    pub fn pmf(&self, k_a: u64) -> Result<f64> {
        if k_a > self.k {
            return Err(Error::domain(
                "activation_pmf",
                alloc::format!("K_a = {k_a} exceeds K = {}", self.k),
            ));
        }
        Ok(self.mass(k_a))
    }
}

impl BinomialLaw for ActivationLaw {
    fn trials(&self) -> u64 {
        self.k
    }
    fn success(&self) -> f64 {
        self.p_a
    }
}

/// Number of colliders of a reference device among `k_a` active devices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionLaw {
    pub k_a: u64,
    pub tau_p: u64,
}

impl CollisionLaw {
    pub fn new(k_a: u64, tau_p: u64) -> Result<Self> {
        if k_a == 0 {
            return Err(Error::domain(
                "CollisionLaw",
                "K_a = 0: there is no reference device",
            ));
        }
        if tau_p == 0 {
            return Err(Error::domain("CollisionLaw", "tau_p must be at least 1"));
        }
        Ok(Self { k_a, tau_p })
    }

    pub fn mean(&self) -> f64 {
        (self.k_a - 1) as f64 / self.tau_p as f64
    }

    /// Probability of exactly `c` colliders.
    pub fn pmf(&self, c: u64) -> Result<f64> {
        if c >= self.k_a {
            return Err(Error::domain(
                "collision_pmf",
                alloc::format!("c = {c} exceeds K_a - 1 = {}", self.k_a - 1),
            ));
        }
        Ok(self.mass(c))
    }
}

impl BinomialLaw for CollisionLaw {
    fn trials(&self) -> u64 {
        self.k_a - 1
    }
    fn success(&self) -> f64 {
        1.0 / self.tau_p as f64
    }
}

/// A contiguous window of a discrete law and the masses inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSupport {
    pub lo: u64,
    pub hi: u64,
    pub covered_mass: f64,
    /// `masses[i]` is the law's mass at `lo + i`.
    pub masses: Vec<f64>,
}

impl TruncatedSupport {
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.lo + i as u64, m))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Smallest window around the mode carrying at least `1 - eps_tail` of the
/// mass. Grows greedily toward the heavier neighbour, which is optimal for a
/// unimodal law.
pub fn truncate_support<L: BinomialLaw>(law: &L, eps_tail: f64) -> TruncatedSupport {
    let n = law.trials();
    let mode = law.mode();
    let target = 1.0 - eps_tail;
    let mut masses = VecDeque::new();
    let mut covered = law.mass(mode);
    masses.push_back(covered);
    let (mut lo, mut hi) = (mode, mode);
    let mut left = if lo > 0 { law.mass(lo - 1) } else { -1.0 };
    let mut right = if hi < n { law.mass(hi + 1) } else { -1.0 };
    while covered < target && (left >= 0.0 || right >= 0.0) {
        if left >= right {
            lo -= 1;
            covered += left;
            masses.push_front(left);
            left = if lo > 0 { law.mass(lo - 1) } else { -1.0 };
        } else {
            hi += 1;
            covered += right;
            masses.push_back(right);
            right = if hi < n { law.mass(hi + 1) } else { -1.0 };
        }
    }
    TruncatedSupport {
        lo,
        hi,
        covered_mass: covered.min(1.0),
        masses: masses.into(),
    }
}

/// Draws the indices of active devices, each independently with `p_a`.
pub fn sample_active_set<R: Rng + ?Sized>(law: &ActivationLaw, rng: &mut R) -> Vec<usize> {
    (0..law.k as usize)
        .filter(|_| rng.random::<f64>() < law.p_a)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    #[test]
    fn certain_activation() {
        let law = ActivationLaw::new(4, 1.0).unwrap();
        assert_eq!(law.pmf(4).unwrap(), 1.0);
        assert_eq!(law.pmf(3).unwrap(), 0.0);
    }

    #[test]
    fn two_devices_half_probability() {
        // Patterns 00, 01, 10, 11 are equiprobable; two of them have one active.
        let law = ActivationLaw::new(2, 0.5).unwrap();
        assert!((law.pmf(1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn activation_mean_matches_p_a_k() {
        let law = ActivationLaw::new(800, 0.05).unwrap();
        let mean: f64 = (0..=800).map(|k| k as f64 * law.pmf(k).unwrap()).sum();
        assert!((mean - 40.0).abs() < 1e-10);
        assert_eq!(law.mean(), 40.0);
        let var: f64 = (0..=800)
            .map(|k| (k as f64 - 40.0).powi(2) * law.pmf(k).unwrap())
            .sum();
        assert!((var - law.variance()).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_arguments_are_domain_errors() {
        let law = ActivationLaw::new(10, 0.3).unwrap();
        assert!(matches!(law.pmf(11), Err(Error::Domain { .. })));
        assert!(CollisionLaw::new(0, 4).is_err());
        assert!(ActivationLaw::new(10, 1.5).is_err());
        let c = CollisionLaw::new(3, 2).unwrap();
        assert!(c.pmf(3).is_err());
    }

    #[test]
    fn lone_device_has_no_colliders() {
        for tau_p in [1, 2, 17] {
            assert_eq!(CollisionLaw::new(1, tau_p).unwrap().pmf(0).unwrap(), 1.0);
        }
    }

    #[test]
    fn three_devices_two_pilots() {
        // The two other devices pick pilots (a, b) from {1, 2}: exactly one
        // matches the reference pilot in 2 of 4 cases.
        let law = CollisionLaw::new(3, 2).unwrap();
        assert!((law.pmf(1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collision_mean() {
        let law = CollisionLaw::new(41, 20).unwrap();
        let mean: f64 = (0..41).map(|c| c as f64 * law.pmf(c).unwrap()).sum();
        assert!((mean - 2.0).abs() < 1e-10);
    }

    #[test]
    fn truncation_of_point_mass() {
        let s = truncate_support(&ActivationLaw::new(10, 1.0).unwrap(), 1e-9);
        assert_eq!((s.lo, s.hi), (10, 10));
        assert_eq!(s.covered_mass, 1.0);
    }

    fn oracle_dropped_mass<L: BinomialLaw>(law: &L, s: &TruncatedSupport) -> f64 {
        // Full-support summation outside the window.
        (0..=law.trials())
            .filter(|&x| x < s.lo || x > s.hi)
            .map(|x| law.mass(x))
            .sum()
    }

    #[test]
    fn truncation_keeps_mass_for_activation() {
        let law = ActivationLaw::new(800, 0.05).unwrap();
        let s = truncate_support(&law, 1e-9);
        assert!(s.lo <= 40 && 40 <= s.hi);
        assert!(oracle_dropped_mass(&law, &s) <= 1e-9);
        // Minimality: removing the lighter endpoint breaks the coverage.
        let lighter = s.masses[0].min(*s.masses.last().unwrap());
        assert!(s.covered_mass - lighter < 1.0 - 1e-9);
    }

    #[test]
    fn truncation_keeps_mass_for_collisions() {
        let law = CollisionLaw::new(41, 20).unwrap();
        let s = truncate_support(&law, 1e-6);
        assert!(s.lo <= 2 && 2 <= s.hi);
        assert!(oracle_dropped_mass(&law, &s) <= 1e-6);
    }

    #[test]
    fn sampling_extremes() {
        let mut rng = substream(1, Purpose::Sampling, 0);
        assert!(sample_active_set(&ActivationLaw::new(50, 0.0).unwrap(), &mut rng).is_empty());
        assert_eq!(
            sample_active_set(&ActivationLaw::new(50, 1.0).unwrap(), &mut rng),
            (0..50).collect::<Vec<_>>()
        );
    }

    #[test]
    fn sampled_activity_fraction() {
        let law = ActivationLaw::new(20, 0.05).unwrap();
        let mut rng = substream(2, Purpose::Sampling, 0);
        let draws = 100_000u64;
        let total: usize = (0..draws)
            .map(|_| sample_active_set(&law, &mut rng).len())
            .sum();
        let n = (draws * law.k) as f64;
        let frac = total as f64 / n;
        let sigma = libm::sqrt(0.05 * 0.95 / n);
        assert!((frac - 0.05).abs() < 3.0 * sigma, "frac = {frac}");
    }
}
