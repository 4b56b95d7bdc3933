use super::{fiber_dist, linear_fit, wilson_interval, Z99};
use crate::base::{sample_rng, BaseOrbit, JitteredDigits};
use crate::constants::ExpansionConstants;
use crate::curves::CurveSource;
use crate::skew::SkewProduct;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Radius of the strip: `J(r - 2)` or `J((r - 2)(D - 1)^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StripScaling {
    Linear,
    Squared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub r: f64,
    pub radius: f64,
    pub hits: u64,
    pub total: u64,
    pub fraction: f64,
    pub lo99: f64,
    pub hi99: f64,
    pub below_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    /// Slope of `ln(fraction)` against `r` over rows at or above threshold with hits.
    pub slope: f64,
    pub slope_se: f64,
    pub five_beta: f64,
    /// Every step satisfies `f(r_{i+1}) <= f(r_i)` up to 99% binomial noise.
    pub non_increasing: bool,
    /// Smallest `C3` with `fraction <= C3 e^(-5 beta r)` on the tested rows.
    pub c3: f64,
}

/// Fractions of base points whose `M`-th iterate of the curve lands in the strip of
/// radius given by `r`, over a jittered grid of `samples` points per curve.
pub fn deep_return_decay<S: CurveSource>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    curves: &[S],
    r_values: &[f64],
    samples: usize,
    seed: u64,
    scaling: StripScaling,
) -> DecayTable {
    let dm = c.order as f64 - 1.0;
    let radius = |r: f64| match scaling {
        StripScaling::Linear => c.j_radius(r - 2.0),
        StripScaling::Squared => c.j_radius((r - 2.0) * dm * dm),
    };
    let total = (curves.len() * samples) as u64;
    let dists: Vec<f64> = (0..curves.len() * samples)
        .into_par_iter()
        .map(|idx| {
            let (ci, i) = (idx / samples, idx % samples);
            let digits = JitteredDigits::new(i as u64, samples as u64, sample_rng(seed, idx as u64), sp.d);
            let mut base = BaseOrbit::new(digits, sp.d);
            let mut x = curves[ci].jet(base.theta()).value;
            for _ in 0..c.big_m {
                x = sp.fiber(base.theta(), x);
                base.advance();
            }
            fiber_dist(x, c.critical_point, sp.is_circle())
        })
        .collect();
    let rows: Vec<DecayRow> = r_values
        .iter()
        .map(|&r| {
            let rad = radius(r);
            let hits = dists.iter().filter(|&&e| e < rad).count() as u64;
            let (lo, hi) = wilson_interval(hits, total, Z99);
            DecayRow {
                r,
                radius: rad,
                hits,
                total,
                fraction: hits as f64 / total.max(1) as f64,
                lo99: lo,
                hi99: hi,
                below_threshold: r < c.r0,
            }
        })
        .collect();
    let active: Vec<&DecayRow> = rows.iter().filter(|r| !r.below_threshold).collect();
    let non_increasing = active.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        let n = a.total as f64;
        let p = (a.hits + b.hits) as f64 / (2.0 * n);
        let sd = (p * (1.0 - p) * 2.0 / n).sqrt();
        b.fraction <= a.fraction + Z99 * sd
    });
    let (xs, ys): (Vec<f64>, Vec<f64>) = active
        .iter()
        .filter(|r| r.hits > 0)
        .map(|r| (r.r, r.fraction.ln()))
        .unzip();
    let (slope, se) = linear_fit(&xs, &ys).map(|(_, b, s)| (b, s)).unwrap_or((f64::NAN, f64::NAN));
    let five_beta = 5.0 * c.beta_regime;
    let c3 = active
        .iter()
        .fold(0.0f64, |m, r| m.max(r.fraction * (five_beta * r.r).exp()));
    DecayTable {
        rows,
        slope,
        slope_se: se,
        five_beta,
        non_increasing,
        c3,
    }
}
