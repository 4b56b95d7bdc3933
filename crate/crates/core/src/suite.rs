//! Verification suites: each runs a batch of cases and returns pass/fail rows.

use crate::base::{sample_rng, RandomDigits};
use crate::constants::{p_of_distance, ExpansionConstants};
use crate::curves::{
    branch_separation, iterate_over_element, spread, strip_measure, CurveSource, FiberInterval,
    OneStepImage, PartitionElement, TrigCurve,
};
use crate::error::Result;
use crate::maps::{check_map, reduce_unit, DegenerateMap};
use crate::report::CheckRow;
use crate::skew::{FiberDomain, SkewProduct};
use crate::stats::{
    deep_return_decay, measure_ccal, verify_lemma24a, verify_lemma24b, verify_lemma25,
    StripScaling,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-case rows plus summary rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub cases: Vec<CheckRow>,
    pub summary: Vec<CheckRow>,
}

impl SuiteOutcome {
    pub fn holds(&self) -> bool {
        self.cases.iter().chain(&self.summary).all(|r| r.holds)
    }

    pub fn failures(&self) -> Vec<&CheckRow> {
        self.cases.iter().chain(&self.summary).filter(|r| !r.holds).collect()
    }

    pub fn summary_row(&self, prefix: &str) -> Option<&CheckRow> {
        self.summary.iter().find(|r| r.check.starts_with(prefix))
    }

    pub fn extend(&mut self, other: SuiteOutcome) {
        self.cases.extend(other.cases);
        self.summary.extend(other.summary);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub seed: u64,
    /// Samples per curve.
    pub grid: usize,
    /// Number of random curves, cases or points, depending on the suite.
    pub samples: usize,
    pub curves: usize,
    /// Random elements of the deep partition level.
    pub elements: usize,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            seed: 1,
            grid: 1 << 14,
            samples: 1000,
            curves: 20,
            elements: 200,
        }
    }
}

/// Random admissible trigonometric curve number `i`.
pub fn random_curve(sp: &SkewProduct, seed: u64, i: u64) -> TrigCurve {
    let mut rng = sample_rng(seed, i);
    let x0 = match sp.domain {
        FiberDomain::Circle => rng.random::<f64>(),
        FiberDomain::Interval { lo, hi } => {
            let pad = sp.alpha;
            lo + pad + (hi - lo - 2.0 * pad) * rng.random::<f64>()
        }
    };
    TrigCurve::random(&mut rng, x0, 6, 1.0, sp.alpha)
}

/// Shape bounds of the map on a grid of `grid` points, for each order.
pub fn map_suite(maps: &[DegenerateMap], grid: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::default();
    for m in maps {
        out.summary.extend(check_map(m, grid).rows());
    }
    out
}

/// Iterates random curves over all level-1 elements and random level-4 elements and
/// checks the derivative bounds of every image.
pub fn lemma21_suite(sp: &SkewProduct, p: &SuiteParams) -> SuiteOutcome {
    let d = sp.d;
    let deep = 4u32.min((62.0 / (d as f64).log2()).floor() as u32);
    let jobs: Vec<(u64, PartitionElement)> = (0..p.curves as u64)
        .flat_map(|ci| {
            let mut rng = sample_rng(p.seed ^ 0x21, ci);
            let count = d.pow(deep);
            let mut elems: Vec<PartitionElement> = (0..d)
                .map(|k| PartitionElement::new(d, 1, k).unwrap())
                .collect();
            elems.extend((0..p.elements).map(|_| PartitionElement::new(d, deep, rng.random_range(0..count)).unwrap()));
            elems.into_iter().map(move |e| (ci, e))
        })
        .collect();
    let alpha = sp.alpha;
    let results: Vec<(u64, PartitionElement, f64, f64, bool)> = jobs
        .par_iter()
        .map(|&(ci, e)| {
            let src = random_curve(sp, p.seed, ci);
            match iterate_over_element(&src, sp, &e, p.grid) {
                Ok(c) => (ci, e, c.max_abs_d1() / alpha, c.max_abs_d2() / alpha, true),
                Err(crate::Error::AdmissibilityLost { max_d1, max_d2, .. }) => {
                    (ci, e, max_d1 / alpha, max_d2 / alpha, false)
                }
                Err(_) => (ci, e, f64::NAN, f64::NAN, false),
            }
        })
        .collect();
    let mut out = SuiteOutcome::default();
    let (mut w1, mut w2, mut lost) = (0.0f64, 0.0f64, 0usize);
    for &(ci, e, r1, r2, ok) in &results {
        out.cases.push(CheckRow::new(format!("curve {ci} elem {e} max|Y'|/alpha"), r1, 13.0 / 15.0));
        out.cases.push(CheckRow::new(format!("curve {ci} elem {e} max|Y''|/alpha"), r2, 1.0));
        w1 = w1.max(r1);
        w2 = w2.max(r2);
        if !ok {
            lost += 1;
        }
    }
    out.summary.push(CheckRow::new("max|Y'|/alpha", w1, 13.0 / 15.0));
    out.summary.push(CheckRow::new("max|Y''|/alpha", w2, 1.0));
    out.summary.push(CheckRow::new("admissibility lost", lost as f64, 0.0));
    out.summary.push(CheckRow::info("iterated curves", results.len() as f64));
    out
}

/// One-step strip measures against `4|I|/alpha + 2 sqrt(|I|/alpha)`, plus the
/// calibrated constant `C1 = max measure / sqrt(|I|/alpha)`.
pub fn lemma22_suite(sp: &SkewProduct, p: &SuiteParams) -> SuiteOutcome {
    let alpha = sp.alpha;
    let cases: Vec<(f64, f64, f64)> = (0..p.samples as u64)
        .into_par_iter()
        .map(|i| {
            let src = random_curve(sp, p.seed ^ 0x22, i);
            let mut rng = sample_rng(p.seed ^ 0x2222, i);
            let len = alpha * rng.random::<f64>().max(1e-6);
            let img = OneStepImage { src: &src, sp };
            // centre the interval on a value the image actually takes
            let centre = img.jet(rng.random::<f64>()).value;
            let lo = centre - len * rng.random::<f64>();
            let lo = if sp.is_circle() { reduce_unit(lo) } else { lo };
            let iv = FiberInterval { lo, len, circle: sp.is_circle() };
            let m = strip_measure(&img, &iv, p.grid, 16);
            let r = len / alpha;
            (len, m, 4.0 * r + 2.0 * r.sqrt())
        })
        .collect();
    let mut out = SuiteOutcome::default();
    let mut violations = 0;
    let mut c1 = 0.0f64;
    for (i, &(len, m, b)) in cases.iter().enumerate() {
        let row = CheckRow::new(format!("case {i} |I|={len:.3e} measure"), m, b);
        if !row.holds {
            violations += 1;
        }
        out.cases.push(row);
        c1 = c1.max(m / (len / alpha).sqrt());
    }
    out.summary.push(CheckRow::new("violations", violations as f64, 0.0));
    out.summary.push(CheckRow::info("calibrated C1", c1));
    out
}

fn regime_point(rng: &mut impl Rng, c: &ExpansionConstants, sp: &SkewProduct, dist: f64) -> f64 {
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let x = c.critical_point + sign * dist;
    if sp.is_circle() {
        reduce_unit(x)
    } else {
        x
    }
}

/// Regime (a): `|x - x~| < 2 alpha^(1/D)`, uniform in distance. Regime (b):
/// `alpha^(1/D) <= |x - x~| < delta1`, log-uniform in distance.
pub fn lemma24_suite(sp: &SkewProduct, c: &ExpansionConstants, p: &SuiteParams) -> Result<SuiteOutcome> {
    let ra = c.j_radius(0.0);
    let pts_a: Vec<(u64, f64)> = (0..p.samples as u64)
        .map(|i| {
            let mut rng = sample_rng(p.seed ^ 0x24a, i);
            let dist = 2.0 * ra * rng.random::<f64>();
            (i, regime_point(&mut rng, c, sp, dist))
        })
        .collect();
    let pts_b: Vec<(u64, f64)> = (0..p.samples as u64)
        .map(|i| {
            let mut rng = sample_rng(p.seed ^ 0x24b, i);
            let t: f64 = rng.random();
            let dist = (ra.ln() + t * (c.delta1.ln() - ra.ln())).exp().clamp(ra, c.delta1 * (1.0 - 1e-12));
            (i, regime_point(&mut rng, c, sp, dist))
        })
        .collect();
    let digits = |tag: u64, i: u64| RandomDigits::new(sample_rng(p.seed ^ tag, i), sp.d);
    let run = |cc: &ExpansionConstants| -> Result<(usize, usize, usize, usize)> {
        let ra: Vec<_> = pts_a
            .par_iter()
            .map(|&(i, x)| verify_lemma24a(sp, cc, digits(0xa, i), x))
            .collect::<Result<_>>()?;
        let rb: Vec<_> = pts_b
            .par_iter()
            .map(|&(i, x)| verify_lemma24b(sp, cc, digits(0xb, i), x))
            .collect::<Result<_>>()?;
        Ok((
            ra.iter().filter(|r| r.holds).count(),
            ra.iter().filter(|r| r.holds_alt).count(),
            rb.iter().filter(|r| r.holds).count(),
            rb.iter().filter(|r| r.p_within_n).count(),
        ))
    };
    let n = p.samples as f64;
    let (a, a_alt, b, pn) = run(c)?;
    let mut out = SuiteOutcome::default();
    out.summary.push(CheckRow::at_least(format!("(a) fraction holding, Ccal={}", c.ccal), a as f64 / n, 1.0));
    out.summary.push(CheckRow::info("(a) fraction holding with eta/D exponent", a_alt as f64 / n));
    out.summary.push(CheckRow::at_least(format!("(b) fraction holding, Ccal={}", c.ccal), b as f64 / n, 1.0));
    out.summary.push(CheckRow::at_least("(b) fraction with p(x) <= N", pn as f64 / n, 1.0));
    out.summary.push(CheckRow::info("N", c.big_n as f64));
    out.summary.push(CheckRow::info(
        "max p(x)",
        p_of_distance(c, ra, c.order) as f64,
    ));

    let ccal = measure_ccal(
        sp,
        c,
        pts_a.iter().chain(&pts_b).map(|&(i, x)| (digits(0xc, i), x)),
    );
    let cm = c.with_ccal(ccal);
    let (a, _, b, pn) = run(&cm)?;
    out.summary.push(CheckRow::info("measured Ccal", ccal));
    out.summary.push(CheckRow::info("N with measured Ccal", cm.big_n as f64));
    out.summary.push(CheckRow::info("(a) fraction holding, measured Ccal", a as f64 / n));
    out.summary.push(CheckRow::info("(b) fraction holding, measured Ccal", b as f64 / n));
    out.summary.push(CheckRow::info("(b) fraction with p(x) <= N, measured Ccal", pn as f64 / n));
    Ok(out)
}

/// Orbit segments avoiding `J(0)`; `C2` is the largest constant valid for the whole batch.
pub fn lemma25_suite(sp: &SkewProduct, c: &ExpansionConstants, p: &SuiteParams) -> Result<SuiteOutcome> {
    let kmax = 200u32;
    let r0 = c.j_radius(0.0);
    let circle = sp.is_circle();
    let reports: Vec<_> = (0..p.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(p.seed ^ 0x25, i);
            let x = loop {
                let x = match sp.domain {
                    FiberDomain::Circle => rng.random::<f64>(),
                    FiberDomain::Interval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
                };
                if crate::stats::fiber_dist(x, c.critical_point, circle) >= r0 {
                    break x;
                }
            };
            // stop before the first entry into J(0)
            let mut base = crate::base::BaseOrbit::new(RandomDigits::new(sample_rng(p.seed ^ 0x255, i), sp.d), sp.d);
            let mut y = x;
            let mut k = 0;
            while k < kmax {
                y = sp.fiber(base.theta(), y);
                base.advance();
                k += 1;
                if crate::stats::fiber_dist(y, c.critical_point, circle) < r0 {
                    break;
                }
            }
            verify_lemma25(sp, c, RandomDigits::new(sample_rng(p.seed ^ 0x255, i), sp.d), x, k)
        })
        .collect::<Result<_>>()?;
    let log_c2 = reports.iter().map(|r| r.log_c2()).fold(f64::INFINITY, f64::min);
    let c2 = log_c2.exp();
    let holding = reports.iter().filter(|r| r.holds_with(c2 * (1.0 - 1e-12))).count();
    let far: Vec<f64> = reports.iter().filter_map(|r| r.log_sigma0_margin).collect();
    let far_min = far.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = SuiteOutcome::default();
    out.summary.push(CheckRow::at_least("calibrated C2 > 0", c2, f64::MIN_POSITIVE));
    out.summary.push(CheckRow::at_least("fraction holding with calibrated C2", holding as f64 / reports.len().max(1) as f64, 1.0));
    out.summary.push(CheckRow::at_least("min ln(product / sigma0^k), orbits outside inner interval", if far.is_empty() { 0.0 } else { far_min }, 0.0));
    out.summary.push(CheckRow::info("orbits outside inner interval", far.len() as f64));

    // fixed point of the odd map: k = 50 with factor 2 at every step
    if sp.is_circle() {
        let r = verify_lemma25(sp, c, crate::base::PrefixDigits::new(vec![]), 0.0, 50)?;
        out.summary.push(CheckRow::at_least("fixed point k=50 ln(product / sigma0^k)", r.log_sigma0_margin.unwrap_or(f64::NEG_INFINITY), 0.0));
    }
    let r = verify_lemma25(sp, c, crate::base::PrefixDigits::new(vec![]), c.critical_point + 0.5 * c.delta1 + r0, 0)?;
    out.summary.push(CheckRow::new("k=0 product", r.log_product.exp(), 1.0));
    out.summary.push(CheckRow::info("calibrated C2", c2));
    Ok(out)
}

/// Deep-return fractions over `r_values` for an ensemble of `p.curves` random curves with
/// `p.samples` base points each; rows below `r0` are reported but not judged.
pub fn lemma26_suite(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    r_values: &[f64],
    scaling: StripScaling,
    p: &SuiteParams,
) -> SuiteOutcome {
    let curves: Vec<TrigCurve> = (0..p.curves.max(1) as u64).map(|i| random_curve(sp, p.seed ^ 0x26, i)).collect();
    let t = deep_return_decay(sp, c, &curves, r_values, p.samples, p.seed, scaling);
    let mut out = SuiteOutcome::default();
    for row in &t.rows {
        let name = if row.below_threshold {
            format!("r={:.4} fraction below-threshold", row.r)
        } else {
            format!("r={:.4} fraction", row.r)
        };
        out.cases.push(CheckRow::info(name, row.fraction));
    }
    out.summary.push(CheckRow::flag("fractions non-increasing (99%)", t.non_increasing));
    out.summary.push(CheckRow::new("fitted log-slope", t.slope, -f64::MIN_POSITIVE));
    out.summary.push(CheckRow::info("slope standard error", t.slope_se));
    out.summary.push(CheckRow::info("5 beta", t.five_beta));
    out.summary.push(CheckRow::info("C3", t.c3));
    out
}

/// Separated branch families with `#H >= ceil(d/16)` and distance `>= alpha/100`.
pub fn lemma27_suite<S: CurveSource + ?Sized>(sp: &SkewProduct, curve: &S, grid: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::default();
    match branch_separation(curve, sp, grid) {
        Ok(b) => {
            out.summary.push(CheckRow::at_least("minSep", b.min_sep, b.bound));
            out.summary.push(CheckRow::at_least("#H1", b.h1.len() as f64, b.required_size as f64));
            out.summary.push(CheckRow::at_least("#H2", b.h2.len() as f64, b.required_size as f64));
        }
        Err(crate::Error::NoSeparatedSets { best, required }) => {
            out.summary.push(CheckRow::at_least("minSep", best, required));
        }
        Err(e) => out.summary.push(CheckRow::flag(format!("branch separation: {e}"), false)),
    }
    out
}

/// Oscillation of `phi^j` applied to the restriction of a curve to a level-`M` element,
/// measured on a fixed set of base points, `j = 0..=M`.
pub fn chain_oscillations<S: CurveSource + ?Sized>(
    src: &S,
    sp: &SkewProduct,
    elem: &PartitionElement,
    grid: usize,
) -> Vec<f64> {
    let circle = sp.is_circle();
    let mut theta: Vec<f64> = (0..grid).map(|i| elem.branch_point(i as f64 / grid as f64)).collect();
    let mut x: Vec<f64> = theta.iter().map(|&t| src.jet(t).value).collect();
    let mut osc = vec![spread(&x, circle)];
    // theta_j = (phi + k mod d^(n-j)) / d^(n-j), exact for every j
    let n = elem.level;
    for j in 0..n {
        for (xi, ti) in x.iter_mut().zip(&theta) {
            *xi = sp.fiber(*ti, *xi);
        }
        let den = sp.d.pow(n - j - 1);
        let k = (elem.index % den) as f64;
        for (i, ti) in theta.iter_mut().enumerate() {
            *ti = (i as f64 / grid as f64 + k) / den as f64;
        }
        osc.push(spread(&x, circle));
    }
    osc
}

/// Oscillation recursion along chains of level-`M` elements and the final bound `sqrt(alpha)`.
pub fn oscillation_suite(sp: &SkewProduct, c: &ExpansionConstants, p: &SuiteParams) -> SuiteOutcome {
    let level = c.big_m.max(1);
    let count = sp.d.pow(level);
    let jobs: Vec<(u64, PartitionElement)> = (0..p.curves as u64)
        .flat_map(|ci| {
            let mut rng = sample_rng(p.seed ^ 0x05c, ci);
            (0..p.elements)
                .map(|_| PartitionElement::new(sp.d, level, rng.random_range(0..count)).unwrap())
                .map(move |e| (ci, e))
                .collect::<Vec<_>>()
        })
        .collect();
    let chains: Vec<(u64, PartitionElement, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(ci, e)| {
            let src = random_curve(sp, p.seed ^ 0x05c, ci);
            (ci, e, chain_oscillations(&src, sp, &e, p.grid))
        })
        .collect();
    let alpha = sp.alpha;
    let mut out = SuiteOutcome::default();
    let (mut rec_bad, mut worst_ratio, mut worst_final) = (0usize, 0.0f64, 0.0f64);
    for (ci, e, o) in &chains {
        for j in 1..o.len() {
            let b = 4.0 * o[j - 1] + 2.0 * alpha;
            if o[j] > b {
                rec_bad += 1;
            }
            worst_ratio = worst_ratio.max(o[j] / b);
        }
        let last = *o.last().unwrap();
        worst_final = worst_final.max(last);
        out.cases.push(CheckRow::new(format!("curve {ci} elem {e} osc(Y_M)"), last, alpha.sqrt()));
    }
    out.summary.push(CheckRow::new("recursion violations", rec_bad as f64, 0.0));
    out.summary.push(CheckRow::info("max osc(Y_j) / (4 osc(Y_j-1) + 2 alpha)", worst_ratio));
    out.summary.push(CheckRow::new("max osc(Y_M)", worst_final, alpha.sqrt()));
    out.summary.push(CheckRow::info("M", level as f64));
    out
}
