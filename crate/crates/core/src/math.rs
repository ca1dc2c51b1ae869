//! Numeric helpers shared across the crate.
//!
//! Binomial masses use Loader's saddle-point expansion (`stirlerr` + `bd0`),
//! which keeps relative accuracy near machine precision for any `n`, unlike a
//! plain `lgamma` difference whose absolute error grows with `ln n!`.

use core::f64::consts::PI;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln(n!) - ln(sqrt(2 pi n) (n/e)^n)` for integer `n >= 1`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    debug_assert!(n >= 1);
    if n <= 15 {
        let mut fact = 1.0f64;
        for i in 2..=n {
            fact *= i as f64;
        }
        let nf = n as f64;
        return libm::log(fact) - 0.5 * libm::log(2.0 * PI * nf) - nf * libm::log(nf) + nf;
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation.
fn bd0(x: f64, np: f64) -> f64 {
    if libm::fabs(x - np) < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * libm::log(x / np) + np - x
    }
}

/// Natural log of the Binomial(`n`, `p`) mass at `x`. Returns `-inf` outside
/// the support.
pub fn ln_binomial_pmf(x: u64, n: u64, p: f64) -> f64 {
    if x > n {
        return f64::NEG_INFINITY;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if x == 0 {
        if n == 0 {
            return 0.0;
        }
        return if p < 0.1 {
            -bd0(nf, nf * q) - nf * p
        } else {
            nf * libm::log(q)
        };
    }
    if x == n {
        return if q < 0.1 {
            -bd0(nf, nf * p) - nf * q
        } else {
            nf * libm::log(p)
        };
    }
    let xf = x as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = LN_2PI + libm::log(xf) + libm::log1p(-xf / nf);
    lc - 0.5 * lf
}

/// Binomial(`n`, `p`) mass at `x`.
pub fn binomial_pmf(x: u64, n: u64, p: f64) -> f64 {
    libm::exp(ln_binomial_pmf(x, n, p))
}

/// Pairwise (cascade) summation in a fixed, input-order-determined tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean and standard error of the mean of a sample.
pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut dev = alloc::vec::Vec::with_capacity(n);
    dev.extend(xs.iter().map(|&x| (x - mean) * (x - mean)));
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, libm::sqrt(var / n as f64))
}

/// `log2(1 + x)` for `x >= 0`.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    libm::log1p(x) * core::f64::consts::LOG2_E
}
