//! Empirical checks of the expansion estimates, exceptional-set estimators and
//! finite-time Lyapunov exponents.

mod decay;
mod exponents;
mod lemmas;
mod situations;

pub use decay::{deep_return_decay, DecayRow, DecayTable, StripScaling};
pub use exponents::{exponent_census, vertical_exponent, CensusSummary, ExponentEstimate};
pub use lemmas::{
    measure_ccal, verify_lemma24a, verify_lemma24b, verify_lemma25, Lemma24aReport,
    Lemma24bReport, Lemma25Report,
};
pub use situations::{
    classify_situations, estimate_b1, isqrt, estimate_b2, situation_census, Classification,
    SituationCensus, SituationKind, SituationRecord,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Product of many factors kept as `mantissa * 2^exponent` with `mantissa` in `[1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogProduct {
    mant: f64,
    exp: i64,
    zero: bool,
}

impl Default for LogProduct {
    fn default() -> Self {
        Self::new()
    }
}

const EXP_MASK: u64 = 0x7ff << 52;

impl LogProduct {
    pub fn new() -> Self {
        LogProduct {
            mant: 1.0,
            exp: 0,
            zero: false,
        }
    }

    /// Multiply by `|v|`.
    #[inline]
    pub fn mul(&mut self, v: f64) {
        let mut m = self.mant * v.abs();
        if m == 0.0 || !m.is_finite() {
            self.zero |= m == 0.0;
            if !m.is_finite() {
                self.mant = f64::NAN;
            }
            return;
        }
        if !m.is_normal() {
            m *= 2f64.powi(64);
            self.exp -= 64;
        }
        let bits = m.to_bits();
        let e = ((bits & EXP_MASK) >> 52) as i64 - 1023;
        self.mant = f64::from_bits((bits & !EXP_MASK) | (1023u64 << 52));
        self.exp += e;
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Natural log of the product.
    pub fn ln(&self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            self.exp as f64 * LN_2 + self.mant.ln()
        }
    }

    /// `ln(product) / n`, exact for products of powers of two.
    pub fn mean_ln(&self, n: u64) -> f64 {
        if self.zero {
            return f64::NEG_INFINITY;
        }
        if n == 0 {
            return 0.0;
        }
        (self.exp as f64 / n as f64) * LN_2 + self.mant.ln() / n as f64
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, standard error of b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let se = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some((a, b, se))
}

/// Two-sided normal quantile for 95% and 99% levels.
pub const Z95: f64 = 1.959_963_984_540_054;
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Fraction with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: u64,
    pub total: u64,
    pub fraction: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn new(hits: u64, total: u64) -> Self {
        let (lo, hi) = wilson_interval(hits, total, Z95);
        Proportion {
            hits,
            total,
            fraction: if total == 0 { 0.0 } else { hits as f64 / total as f64 },
            lo,
            hi,
        }
    }
}

/// Distance from `x` to `c`, circular when `circle`.
#[inline]
pub(crate) fn fiber_dist(x: f64, c: f64, circle: bool) -> f64 {
    if circle {
        let t = crate::maps::reduce_unit(x - c);
        t.min(1.0 - t)
    } else {
        (x - c).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_product_powers_of_two_are_exact() {
        let mut p = LogProduct::new();
        let mut q = LogProduct::new();
        for _ in 0..100_000 {
            p.mul(2.0);
            q.mul(16.0);
        }
        assert_eq!(p.mean_ln(100_000), LN_2);
        assert_eq!(q.mean_ln(100_000), 16f64.ln());
    }

    #[test]
    fn log_product_matches_sum_of_logs() {
        let mut p = LogProduct::new();
        let mut s = 0.0;
        for i in 1..5000 {
            let v = 1e-3 + (i as f64 * 0.37).sin().abs() * 3.0;
            p.mul(v);
            s += v.ln();
        }
        assert_relative_eq!(p.ln(), s, max_relative = 1e-11);
        p.mul(1e-310);
        assert_relative_eq!(p.ln(), s + 1e-310f64.ln(), max_relative = 1e-11);
        p.mul(0.0);
        assert_eq!(p.ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (a, b, se) = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(a, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b, -0.5, epsilon = 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn wilson_reference_values() {
        // 5 of 10 at 95%: (0.2366, 0.7634)
        let (lo, hi) = wilson_interval(5, 10, Z95);
        assert_relative_eq!(lo, 0.2366, epsilon = 1e-4);
        assert_relative_eq!(hi, 0.7634, epsilon = 1e-4);
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 0.0370, epsilon = 1e-4);
    }
}
