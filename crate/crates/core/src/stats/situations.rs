use super::{fiber_dist, Proportion};
use crate::base::{sample_rng, BaseOrbit, DigitSource, JitteredDigits};
use crate::constants::ExpansionConstants;
use crate::curves::CurveSource;
use crate::skew::SkewProduct;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SituationKind {
    I,
    II,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SituationRecord {
    pub nu: u64,
    pub kind: SituationKind,
    /// Smallest `r >= 1` with the segment outside `J(r)`; `m` for kind II.
    pub r: u32,
    pub in_g: bool,
    /// Distance of the orbit point to the critical point.
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub n: u64,
    pub m: u32,
    pub l: u32,
    /// Bound on the fiber diameter of a segment over an element of level `l`.
    pub diameter: f64,
    pub records: Vec<SituationRecord>,
    /// Returns to `J(0)` inside the `N`-step window of an earlier kind-I record.
    pub absorbed: u64,
    /// `sum r_i` over records in `G`.
    pub sum_g: u64,
}

impl Classification {
    pub fn has_ii(&self) -> bool {
        self.records.iter().any(|r| r.kind == SituationKind::II)
    }

    pub fn count_i(&self) -> usize {
        self.records.iter().filter(|r| r.kind == SituationKind::I).count()
    }

    /// Consecutive kind-I records are at least `big_n` apart.
    pub fn spacing_holds(&self, big_n: u32) -> bool {
        let nus: Vec<u64> = self
            .records
            .iter()
            .filter(|r| r.kind == SituationKind::I)
            .map(|r| r.nu)
            .collect();
        nus.windows(2).all(|w| w[1] >= w[0] + big_n as u64)
    }

    pub fn in_b1(&self, c: f64) -> bool {
        self.sum_g as f64 >= c * self.n as f64
    }
}

/// `m = floor(sqrt(n))`.
pub fn isqrt(n: u64) -> u32 {
    let mut m = (n as f64).sqrt() as u64;
    while m * m > n {
        m -= 1;
    }
    while (m + 1) * (m + 1) <= n {
        m += 1;
    }
    m as u32
}

/// Walks `nu = 1..=n` along the orbit of `theta` and records the returns of the
/// iterated curve segment to `J(0)` and `J(m)`.
///
/// The segment over the element of level `nu + l` containing `theta` is replaced by
/// the orbit point together with the diameter bound `alpha (d - alpha)^(-l)`.
pub fn classify_situations<C: CurveSource + ?Sized, S: DigitSource>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    curve: &C,
    n: u64,
    theta: S,
) -> Classification {
    let m = isqrt(n);
    let l = m.saturating_sub(c.big_m);
    let diameter = sp.alpha * (sp.d as f64 - sp.alpha).powi(-(l as i32));
    let r0_rad = c.j_radius(0.0);
    let rm_rad = c.j_radius(m as f64);
    let circle = sp.is_circle();
    let mut base = BaseOrbit::new(theta, sp.d);
    let mut x = curve.jet(base.theta()).value;
    let mut records = Vec::new();
    let mut next_allowed = 1u64;
    let mut absorbed = 0u64;
    let mut sum_g = 0u64;
    for nu in 1..=n {
        x = sp.fiber(base.theta(), x);
        base.advance();
        let dist = fiber_dist(x, c.critical_point, circle);
        let near = dist - diameter;
        if near < rm_rad {
            records.push(SituationRecord {
                nu,
                kind: SituationKind::II,
                r: m,
                in_g: m as f64 >= c.r0,
                dist,
            });
        } else if near < r0_rad {
            if nu < next_allowed {
                absorbed += 1;
                continue;
            }
            let mut r = 1u32;
            while r < m && near < c.j_radius(r as f64) {
                r += 1;
            }
            let in_g = r as f64 >= c.r0;
            if in_g {
                sum_g += r as u64;
            }
            records.push(SituationRecord {
                nu,
                kind: SituationKind::I,
                r,
                in_g,
                dist,
            });
            next_allowed = nu + c.big_n as u64;
        }
    }
    Classification {
        n,
        m,
        l,
        diameter,
        records,
        absorbed,
        sum_g,
    }
}

fn classify_batch<C: CurveSource + ?Sized>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    curve: &C,
    n: u64,
    samples: usize,
    seed: u64,
) -> Vec<Classification> {
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let digits = JitteredDigits::new(i, samples as u64, sample_rng(seed, i), sp.d);
            classify_situations(sp, c, curve, n, digits)
        })
        .collect()
}

/// Fraction of base points with a kind-II record in `[1, n]`.
pub fn estimate_b2<C: CurveSource + ?Sized>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    curve: &C,
    n: u64,
    samples: usize,
    seed: u64,
) -> Proportion {
    let runs = classify_batch(sp, c, curve, n, samples, seed);
    Proportion::new(runs.iter().filter(|r| r.has_ii()).count() as u64, samples as u64)
}

/// Fraction of base points with `sum_{i in G} r_i >= c n`.
pub fn estimate_b1<C: CurveSource + ?Sized>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    curve: &C,
    n: u64,
    samples: usize,
    seed: u64,
) -> Proportion {
    let runs = classify_batch(sp, c, curve, n, samples, seed);
    Proportion::new(runs.iter().filter(|r| r.in_b1(c.c)).count() as u64, samples as u64)
}

/// Per-`n` summary of a classification batch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SituationCensus {
    pub n: u64,
    pub m: u32,
    pub l: u32,
    pub samples: usize,
    pub b1: Proportion,
    pub b2: Proportion,
    /// `e^(-sqrt(n)/4)`.
    pub b2_shape: f64,
    pub mean_i: f64,
    pub max_i: usize,
    pub spacing_holds: bool,
    /// `(s - 1) N <= n` for every sample.
    pub count_bound_holds: bool,
    pub absorbed: u64,
}

/// B1 and B2 estimates for each `n`, with the same base points throughout.
pub fn situation_census<C: CurveSource + ?Sized>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    curve: &C,
    ns: &[u64],
    samples: usize,
    seed: u64,
) -> Vec<SituationCensus> {
    ns.iter()
        .map(|&n| {
            let runs = classify_batch(sp, c, curve, n, samples, seed);
            let total = samples as u64;
            let counts: Vec<usize> = runs.iter().map(|r| r.count_i()).collect();
            SituationCensus {
                n,
                m: isqrt(n),
                l: isqrt(n).saturating_sub(c.big_m),
                samples,
                b1: Proportion::new(runs.iter().filter(|r| r.in_b1(c.c)).count() as u64, total),
                b2: Proportion::new(runs.iter().filter(|r| r.has_ii()).count() as u64, total),
                b2_shape: (-(n as f64).sqrt() / 4.0).exp(),
                mean_i: if samples == 0 { 0.0 } else { counts.iter().sum::<usize>() as f64 / samples as f64 },
                max_i: counts.iter().copied().max().unwrap_or(0),
                spacing_holds: runs.iter().all(|r| r.spacing_holds(c.big_n)),
                count_bound_holds: counts
                    .iter()
                    .all(|&s| s == 0 || (s as u64 - 1) * c.big_n as u64 <= n),
                absorbed: runs.iter().map(|r| r.absorbed).sum(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::RandomDigits;
    use crate::constants::{derive_constants, ConstantOverrides};
    use crate::curves::TrigCurve;
    use crate::maps::{build_map, MapSpec};

    fn setup() -> (SkewProduct, ExpansionConstants) {
        let map = build_map(&MapSpec::odd(3)).unwrap();
        let c = derive_constants(&map, 16, 1e-6, &ConstantOverrides::default()).unwrap();
        (SkewProduct::new(map, 16, 1e-6).unwrap(), c)
    }

    #[test]
    fn isqrt_exact() {
        assert_eq!(isqrt(399), 19);
        assert_eq!(isqrt(400), 20);
        assert_eq!(isqrt(u32::MAX as u64), 65535);
    }

    #[test]
    fn fixed_point_curve_never_returns() {
        let (sp, c) = setup();
        let cl = classify_situations(&sp, &c, &TrigCurve::constant(0.0), 400, RandomDigits::new(sample_rng(0, 0), 16));
        // the curve leaves x = 0 but stays far from 1/2 for a while
        assert!(cl.records.iter().all(|r| r.nu > 1));
        assert_eq!(cl.m, 20);
        assert_eq!(cl.l, 20 - c.big_m);
    }

    #[test]
    fn spacing_and_diameter() {
        let (sp, c) = setup();
        let curve = TrigCurve::constant(0.123);
        for i in 0..50 {
            let cl = classify_situations(&sp, &c, &curve, 400, RandomDigits::new(sample_rng(3, i), 16));
            assert!(cl.spacing_holds(c.big_n));
            assert!(cl.diameter < c.j_radius(20.0));
            for r in &cl.records {
                if r.kind == SituationKind::I {
                    assert!((1..=20).contains(&r.r));
                    assert!(r.dist - cl.diameter >= c.j_radius(r.r as f64));
                }
            }
        }
    }
}
