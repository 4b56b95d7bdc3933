use super::{fiber_dist, LogProduct};
use crate::base::{sample_rng, BaseOrbit, DigitSource, RandomDigits};
use crate::skew::{FiberDomain, SkewProduct};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Distance to the critical point below which an orbit counts as hitting it.
pub const CRITICAL_GUARD: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub theta: f64,
    pub x: f64,
    pub steps: u64,
    pub vertical: f64,
    pub horizontal: f64,
    pub hit_critical: bool,
}

/// Birkhoff averages of `ln |df/dx|` and `ln |g'|` over `n` steps.
pub fn vertical_exponent<S: DigitSource>(sp: &SkewProduct, theta: S, x: f64, n: u64) -> ExponentEstimate {
    let mut base = BaseOrbit::new(theta, sp.d);
    let theta0 = base.theta();
    let c = sp.map.critical_point();
    let circle = sp.is_circle();
    let mut vert = LogProduct::new();
    let mut horiz = LogProduct::new();
    let g1 = sp.d as f64;
    let mut y = x;
    let mut hit = false;
    for _ in 0..n {
        horiz.mul(g1);
        if hit {
            continue;
        }
        let (next, s) = sp.fiber_and_slope(base.theta(), y);
        if fiber_dist(y, c, circle) < CRITICAL_GUARD || !s.is_normal() {
            hit = true;
            continue;
        }
        vert.mul(s);
        y = next;
        base.advance();
    }
    ExponentEstimate {
        theta: theta0,
        x,
        steps: n,
        vertical: if hit { f64::NEG_INFINITY } else { vert.mean_ln(n) },
        horizontal: horiz.mean_ln(n),
        hit_critical: hit,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusSummary {
    pub count: usize,
    pub hit_critical: usize,
    pub positive: usize,
    pub fraction_positive: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `(level, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    /// `(lo, hi, count)` bins over `[min, max]`.
    pub histogram: Vec<(f64, f64, usize)>,
}

impl CensusSummary {
    pub fn from_estimates(est: &[ExponentEstimate]) -> Self {
        let mut v: Vec<f64> = est
            .iter()
            .filter(|e| !e.hit_critical && e.vertical.is_finite())
            .map(|e| e.vertical)
            .collect();
        v.sort_by(f64::total_cmp);
        let positive = v.iter().filter(|&&x| x > 0.0).count();
        let count = est.len();
        let q = |p: f64| {
            if v.is_empty() {
                f64::NAN
            } else {
                let pos = p * (v.len() - 1) as f64;
                let (i, f) = (pos.floor() as usize, pos.fract());
                if i + 1 < v.len() {
                    v[i] * (1.0 - f) + v[i + 1] * f
                } else {
                    v[i]
                }
            }
        };
        let (min, max) = (q(0.0), q(1.0));
        let bins = 20;
        let mut histogram = Vec::new();
        if !v.is_empty() {
            let w = (max - min) / bins as f64;
            let mut counts = vec![0usize; bins];
            for &x in &v {
                let b = if w > 0.0 { (((x - min) / w) as usize).min(bins - 1) } else { 0 };
                counts[b] += 1;
            }
            for (b, &n) in counts.iter().enumerate() {
                histogram.push((min + w * b as f64, min + w * (b + 1) as f64, n));
            }
        }
        CensusSummary {
            count,
            hit_critical: est.iter().filter(|e| e.hit_critical).count(),
            positive,
            fraction_positive: if count == 0 { 0.0 } else { positive as f64 / count as f64 },
            mean: if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 },
            min,
            max,
            quantiles: [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99]
                .iter()
                .map(|&p| (p, q(p)))
                .collect(),
            histogram,
        }
    }
}

/// Finite-time exponents at `count` random points.
pub fn exponent_census(sp: &SkewProduct, n: u64, count: usize, seed: u64) -> (Vec<ExponentEstimate>, CensusSummary) {
    let est: Vec<ExponentEstimate> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = match sp.domain {
                FiberDomain::Circle => rng.random::<f64>(),
                FiberDomain::Interval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            };
            vertical_exponent(sp, RandomDigits::new(rng, sp.d), x, n)
        })
        .collect();
    let s = CensusSummary::from_estimates(&est);
    (est, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::PrefixDigits;
    use crate::maps::{build_map, MapSpec};
    use std::f64::consts::LN_2;

    fn sp() -> SkewProduct {
        SkewProduct::new(build_map(&MapSpec::odd(3)).unwrap(), 16, 1e-6).unwrap()
    }

    #[test]
    fn fixed_point_gives_ln2() {
        let e = vertical_exponent(&sp(), PrefixDigits::new(vec![]), 0.0, 100_000);
        assert_eq!(e.vertical, LN_2);
        assert_eq!(e.horizontal, 16f64.ln());
        assert!(!e.hit_critical);
    }

    #[test]
    fn critical_orbit_flagged() {
        let e = vertical_exponent(&sp(), PrefixDigits::new(vec![]), 0.5, 10);
        assert!(e.hit_critical);
        assert_eq!(e.vertical, f64::NEG_INFINITY);
        assert_eq!(e.horizontal, 16f64.ln());
    }

    #[test]
    fn empty_census() {
        let (e, s) = exponent_census(&sp(), 10, 0, 1);
        assert!(e.is_empty());
        assert_eq!(s.count, 0);
        assert!(s.histogram.is_empty());
    }
}
