use super::{AdmissibleCurve, CurveSource};
use crate::error::{Error, Result};
use crate::hermite::Jet;
use crate::skew::SkewProduct;
use serde::{Deserialize, Serialize};

/// `sup - inf` of a set of fiber values; on the circle the length of the shortest arc
/// containing all of them.
pub fn spread(values: &[f64], circle: bool) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if !circle {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        return hi - lo;
    }
    let mut r: Vec<f64> = values.iter().map(|&v| crate::maps::reduce_unit(v)).collect();
    r.sort_by(f64::total_cmp);
    let mut gap = 1.0 - r[r.len() - 1] + r[0];
    for w in r.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    1.0 - gap
}

pub fn oscillation(curve: &AdmissibleCurve) -> f64 {
    spread(&curve.x, curve.domain == crate::skew::FiberDomain::Circle)
}

/// Fiber interval `[lo, lo + len)`, taken mod 1 on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberInterval {
    pub lo: f64,
    pub len: f64,
    pub circle: bool,
}

impl FiberInterval {
    /// Membership and distance to the nearest endpoint.
    #[inline]
    fn locate(&self, z: f64) -> (bool, f64) {
        if self.circle {
            if self.len >= 1.0 {
                return (true, f64::INFINITY);
            }
            let t = crate::maps::reduce_unit(z - self.lo);
            (t < self.len, t.min((t - self.len).abs()).min(1.0 - t))
        } else {
            let t = z - self.lo;
            (t >= 0.0 && t < self.len, t.abs().min((t - self.len).abs()))
        }
    }

    pub fn contains(&self, z: f64) -> bool {
        self.locate(z).0
    }
}

/// Curve `theta -> f(theta, X(theta))`.
pub struct OneStepImage<'a, S: CurveSource + ?Sized> {
    pub src: &'a S,
    pub sp: &'a SkewProduct,
}

impl<S: CurveSource + ?Sized> CurveSource for OneStepImage<'_, S> {
    fn jet(&self, theta: f64) -> Jet {
        let x = self.src.jet(theta);
        let j = self.sp.jet(theta, x.value);
        Jet::new(
            j.f,
            j.f_theta + j.f_x * x.d1,
            j.f_thetatheta + 2.0 * j.f_thetax * x.d1 + j.f_xx * x.d1 * x.d1 + j.f_x * x.d2,
        )
    }
}

/// Lebesgue measure of `{theta : X(theta) in I}` by grid counting; cells where the
/// curve may cross an endpoint of `I` are refined into `refine` sub-cells.
pub fn strip_measure<S: CurveSource + ?Sized>(
    src: &S,
    interval: &FiberInterval,
    grid: usize,
    refine: usize,
) -> f64 {
    let h = 1.0 / grid as f64;
    let jets: Vec<Jet> = (0..grid).map(|i| src.jet(i as f64 * h)).collect();
    let lip = 2.0 * jets.iter().fold(0.0f64, |m, j| m.max(j.d1.abs()))
        + h * jets.iter().fold(0.0f64, |m, j| m.max(j.d2.abs()));
    let refine = refine.max(1);
    let mut total = 0.0;
    for (i, j) in jets.iter().enumerate() {
        let (inside, dist) = interval.locate(j.value);
        if dist > lip * h {
            if inside {
                total += h;
            }
        } else {
            let hits = (0..refine)
                .filter(|&s| {
                    let t = (i as f64 + (s as f64 + 0.5) / refine as f64) * h;
                    interval.contains(src.jet(t).value)
                })
                .count();
            total += h * hits as f64 / refine as f64;
        }
    }
    total
}

/// Two sets of branch indices whose images stay apart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSeparation {
    pub h1: Vec<usize>,
    pub h2: Vec<usize>,
    pub min_sep: f64,
    pub required_size: usize,
    pub bound: f64,
}

/// Search branch sets of size `ceil(d/16)` whose images `Z_j(theta) = f((theta + j)/d, X((theta + j)/d))`
/// are at least `alpha/100` apart for all grid points.
pub fn branch_separation<S: CurveSource + ?Sized>(
    src: &S,
    sp: &SkewProduct,
    grid: usize,
) -> Result<BranchSeparation> {
    let d = sp.d as usize;
    let circle = sp.is_circle();
    let z: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..grid)
                .map(|i| {
                    let t = (i as f64 / grid as f64 + j as f64) / d as f64;
                    sp.fiber(t, src.jet(t).value)
                })
                .collect()
        })
        .collect();
    let dist = |a: f64, b: f64| {
        if circle {
            let t = crate::maps::reduce_unit(a - b);
            t.min(1.0 - t)
        } else {
            (a - b).abs()
        }
    };
    let pair_sep = |a: usize, b: usize| {
        z[a].iter()
            .zip(&z[b])
            .fold(f64::INFINITY, |m, (&x, &y)| m.min(dist(x, y)))
    };
    let size = d.div_ceil(16);
    let bound = sp.alpha / 100.0;
    let mut best = BranchSeparation {
        h1: vec![],
        h2: vec![],
        min_sep: f64::NEG_INFINITY,
        required_size: size,
        bound,
    };
    if size == 1 {
        for a in 0..d {
            for b in a + 1..d {
                let s = pair_sep(a, b);
                if s > best.min_sep {
                    best.h1 = vec![a];
                    best.h2 = vec![b];
                    best.min_sep = s;
                }
            }
        }
    } else {
        // order branches by mean level, then split into extreme groups
        let mean: Vec<f64> = z.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]));
        for shift in 0..d {
            let rot: Vec<usize> = (0..d).map(|i| order[(i + shift) % d]).collect();
            let h1 = rot[..size].to_vec();
            let h2 = rot[d - size..].to_vec();
            let s = h1
                .iter()
                .flat_map(|&a| h2.iter().map(move |&b| (a, b)))
                .fold(f64::INFINITY, |m, (a, b)| m.min(pair_sep(a, b)));
            if s > best.min_sep {
                best = BranchSeparation { h1, h2, min_sep: s, required_size: size, bound };
            }
        }
    }
    if best.min_sep < bound {
        return Err(Error::NoSeparatedSets {
            best: best.min_sep,
            required: bound,
        });
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{make_curve, CurveKind, TrigCurve};
    use crate::maps::{build_map, MapSpec};
    use crate::skew::FiberDomain;
    use approx::assert_relative_eq;

    #[test]
    fn spread_on_circle_wraps() {
        assert_relative_eq!(spread(&[0.95, 0.02, 0.99], true), 0.07, epsilon = 1e-12);
        assert_relative_eq!(spread(&[0.95, 0.02, 0.99], false), 0.97, epsilon = 1e-12);
        assert_eq!(spread(&[], true), 0.0);
    }

    #[test]
    fn strip_measure_trivial_cases() {
        let c = make_curve(
            &CurveKind::Sine { x0: 0.3, amplitude: 1e-5, phase: 0.0 },
            1e-3,
            1024,
            FiberDomain::Circle,
        )
        .unwrap();
        let all = FiberInterval { lo: 0.29, len: 0.02, circle: true };
        assert_eq!(strip_measure(&c, &all, 1024, 16), 1.0);
        let none = FiberInterval { lo: 0.5, len: 0.02, circle: true };
        assert_eq!(strip_measure(&c, &none, 1024, 16), 0.0);
        // upper half of a sine: measure 1/2
        let half = FiberInterval { lo: 0.3, len: 0.01, circle: true };
        assert_relative_eq!(strip_measure(&c, &half, 1024, 16), 0.5, epsilon = 1e-3);
    }

    #[test]
    fn strip_measure_matches_arcsine_law() {
        // X = x0 + a sin(2 pi theta): measure of [x0 + a s1, x0 + a s2) is (asin s2 - asin s1)/pi
        let a = 1e-5;
        let c = TrigCurve { x0: 0.4, terms: vec![(1, a, 0.0)] };
        let (s1, s2) = (-0.3, 0.8f64);
        let i = FiberInterval { lo: 0.4 + a * s1, len: a * (s2 - s1), circle: true };
        let m = strip_measure(&c, &i, 4096, 16);
        let exact = (s2.asin() - s1.asin()) / std::f64::consts::PI;
        assert_relative_eq!(m, exact, epsilon = 1e-4);
    }

    #[test]
    fn default_branch_separation() {
        let sp = SkewProduct::new(build_map(&MapSpec::odd(3)).unwrap(), 16, 1e-6).unwrap();
        let r = branch_separation(&TrigCurve::constant(0.25), &sp, 1 << 12).unwrap();
        assert_eq!(r.h1.len(), 1);
        assert!(r.min_sep >= 1e-8);
        // oracle: Z_j = 0.5 + alpha sin(2 pi (theta + j)/16); best pair is antipodal, offset by a quarter cell
        assert!(r.min_sep > 1.8e-6 && r.min_sep <= 2e-6);
    }
}
