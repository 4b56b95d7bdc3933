//! One-dimensional maps with a single degenerate critical point of prescribed order.
//!
//! Odd orders live on the circle `[0, 1)` with critical point `1/2`; even orders live on
//! an interval with critical point `0`. Outside the outer interval the map agrees with
//! the doubling map (odd) or the quadratic family `a0 - x^2` (even); on the inner
//! interval it is `+-A (x - c)^D`; quintic Hermite bridges join the two.

mod check;
mod reference;

pub use check::{bridge_profile, check_map, BridgeProfile, MapDiagnostics, MapCheck};
pub use reference::{calibrate_preperiodic, locate_reference_orbit, ReferenceOrbit};

use crate::error::{Error, Result};
use crate::hermite::{quintic_hermite, Jet, ShiftedPoly};
use serde::{Deserialize, Serialize};

/// Lower bound for `|h'|` at the inner endpoints.
pub const SLOPE_TARGET: f64 = 1.75;
/// Global bound for `|h'|`.
pub const MAX_SLOPE: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// Acceptance rule for the bridges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgePolicy {
    /// `h'` and `h''` monotone on each bridge.
    Monotone,
    /// `h'` of constant sign with `slope_target <= |h'| <= 4` on each bridge.
    Expanding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub parity: Parity,
    pub critical_order: u32,
    pub inner_half_width: f64,
    pub outer_half_width: f64,
    /// Quadratic parameter for even maps; `None` requests calibration.
    pub a0: Option<f64>,
    pub slope_target: f64,
    pub bridge_policy: BridgePolicy,
    /// Landing time used when calibrating `a0`.
    pub landing: u32,
}

impl MapSpec {
    pub fn odd(order: u32) -> Self {
        MapSpec {
            parity: Parity::Odd,
            critical_order: order,
            inner_half_width: 0.1,
            outer_half_width: 0.25,
            a0: None,
            slope_target: SLOPE_TARGET,
            bridge_policy: BridgePolicy::Expanding,
            landing: 1,
        }
    }

    pub fn even(order: u32) -> Self {
        MapSpec {
            parity: Parity::Even,
            critical_order: order,
            inner_half_width: 0.65,
            outer_half_width: 1.0,
            a0: None,
            slope_target: SLOPE_TARGET,
            bridge_policy: BridgePolicy::Expanding,
            landing: 3,
        }
    }

    /// Odd orders give circle maps, even orders interval maps.
    pub fn for_order(order: u32) -> Self {
        if order % 2 == 1 {
            Self::odd(order)
        } else {
            Self::even(order)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let d = self.critical_order;
        match self.parity {
            Parity::Odd if d < 3 || d.is_multiple_of(2) => {
                return bad(format!("odd parity needs an odd order >= 3, got {d}"))
            }
            Parity::Even if d < 2 || d % 2 == 1 => {
                return bad(format!("even parity needs an even order >= 2, got {d}"))
            }
            _ => {}
        }
        if d > 31 {
            return bad(format!("critical order {d} too large"));
        }
        let (w, o) = (self.inner_half_width, self.outer_half_width);
        if !(w.is_finite() && w > 0.0) {
            return bad(format!("inner half width must be positive, got {w}"));
        }
        if w >= o {
            return bad(format!(
                "inner interval must sit strictly inside the outer one (|I''| = {} >= |I'| = {})",
                2.0 * w,
                2.0 * o
            ));
        }
        match self.parity {
            Parity::Odd => {
                if o >= 0.5 {
                    return bad(format!("outer half width {o} must be < 1/2 on the circle"));
                }
            }
            Parity::Even => {
                if o != 1.0 {
                    return bad(format!("even maps use the outer interval (-1, 1), got half width {o}"));
                }
                if let Some(a) = self.a0 {
                    if !(a > 1.0 && a < 2.0) {
                        return bad(format!("a0 = {a} outside (1, 2)"));
                    }
                }
            }
        }
        if !(self.slope_target > 1.0 && self.slope_target < 2.0) {
            return bad(format!("slope target {} outside (1, 2)", self.slope_target));
        }
        if self.landing == 0 || self.landing > 64 {
            return bad(format!("landing time {} outside 1..=64", self.landing));
        }
        Ok(())
    }
}

/// Amplitude `A` with `D A w^(D-1) = slope`.
pub fn solve_amplitude(order: u32, half_width: f64, slope: f64) -> Result<f64> {
    if !(half_width > 0.0 && half_width < 1.0) || order < 2 {
        return Err(Error::DegenerateWidth(format!(
            "half width {half_width} (order {order}) outside (0, 1)"
        )));
    }
    let a = slope / (order as f64 * half_width.powi(order as i32 - 1));
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::DegenerateWidth(format!("amplitude {a} not finite")));
    }
    Ok(a)
}

/// Quintic piece on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub lo: f64,
    pub hi: f64,
    pub poly: ShiftedPoly,
}

impl Bridge {
    /// Hermite quintic without any shape check.
    pub fn hermite(left: Jet, right: Jet, lo: f64, hi: f64) -> Self {
        Bridge {
            lo,
            hi,
            poly: quintic_hermite(lo, hi, left, right),
        }
    }

    pub fn jet(&self, x: f64) -> Jet {
        self.poly.jet(x)
    }
}

/// Quintic bridge whose first and second derivatives are both monotone.
pub fn build_bridge(left: Jet, right: Jet, lo: f64, hi: f64) -> Result<Bridge> {
    if !(lo < hi) {
        return Err(Error::PreconditionViolated(format!("empty bridge interval [{lo}, {hi}]")));
    }
    let b = Bridge::hermite(left, right, lo, hi);
    let p = bridge_profile(&b, 1 << 16);
    if !(p.d1_monotone && p.d2_monotone) {
        return Err(Error::MonotonicityViolated {
            lo,
            hi,
            detail: format!(
                "h' in [{:.6}, {:.6}] monotone: {}, h'' monotone: {}",
                p.min_d1, p.max_d1, p.d1_monotone, p.d2_monotone
            ),
        });
    }
    Ok(b)
}

/// A constructed map together with its diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DegenerateMap {
    pub spec: MapSpec,
    pub amplitude: f64,
    /// Quadratic parameter (0 for odd maps).
    pub a0: f64,
    pub bridge_left: Bridge,
    pub bridge_right: Bridge,
    pub reference: Option<ReferenceOrbit>,
    pub diagnostics: MapDiagnostics,
}

impl DegenerateMap {
    /// Assemble the pieces for a validated spec without checks or reference orbit.
    pub(crate) fn assemble(spec: &MapSpec, a0: f64) -> Result<Self> {
        let d = spec.critical_order as i32;
        let df = d as f64;
        let (w, o) = (spec.inner_half_width, spec.outer_half_width);
        let amp = solve_amplitude(spec.critical_order, w, spec.slope_target)?;
        let inner_val = amp * w.powi(d);
        let inner_d1 = df * amp * w.powi(d - 1);
        let inner_d2 = df * (df - 1.0) * amp * w.powi(d - 2);
        let (left, right) = match spec.parity {
            Parity::Odd => (
                Bridge::hermite(
                    Jet::new(1.0 - 2.0 * o, 2.0, 0.0),
                    Jet::new(1.0 - inner_val, inner_d1, -inner_d2),
                    0.5 - o,
                    0.5 - w,
                ),
                Bridge::hermite(
                    Jet::new(1.0 + inner_val, inner_d1, inner_d2),
                    Jet::new(1.0 + 2.0 * o, 2.0, 0.0),
                    0.5 + w,
                    0.5 + o,
                ),
            ),
            Parity::Even => (
                Bridge::hermite(
                    Jet::new(-1.0, 2.0, -2.0),
                    Jet::new(-inner_val, inner_d1, -inner_d2),
                    -1.0,
                    -w,
                ),
                Bridge::hermite(
                    Jet::new(-inner_val, -inner_d1, -inner_d2),
                    Jet::new(-1.0, -2.0, -2.0),
                    w,
                    1.0,
                ),
            ),
        };
        Ok(DegenerateMap {
            spec: spec.clone(),
            amplitude: amp,
            a0: if spec.parity == Parity::Even { a0 } else { 0.0 },
            bridge_left: left,
            bridge_right: right,
            reference: None,
            diagnostics: MapDiagnostics::default(),
        })
    }

    pub fn parity(&self) -> Parity {
        self.spec.parity
    }

    pub fn order(&self) -> u32 {
        self.spec.critical_order
    }

    pub fn is_circle(&self) -> bool {
        self.spec.parity == Parity::Odd
    }

    pub fn critical_point(&self) -> f64 {
        match self.spec.parity {
            Parity::Odd => 0.5,
            Parity::Even => 0.0,
        }
    }

    /// Distance to the critical point (circular for odd maps).
    #[inline]
    pub fn dist_to_critical(&self, x: f64) -> f64 {
        match self.spec.parity {
            Parity::Odd => {
                let r = x - x.floor();
                (r - 0.5).abs()
            }
            Parity::Even => x.abs(),
        }
    }

    /// Value, first and second derivative. Odd maps return the value reduced to `[0, 1)`.
    #[inline]
    pub fn jet(&self, x: f64) -> Jet {
        match self.spec.parity {
            Parity::Odd => {
                let r = reduce_unit(x);
                let j = self.odd_lift_jet(r);
                let mut v = j.value;
                if v >= 1.0 {
                    v -= 1.0;
                } else if v < 0.0 {
                    v += 1.0;
                }
                Jet::new(if v >= 1.0 { 0.0 } else { v }, j.d1, j.d2)
            }
            Parity::Even => self.even_jet(x),
        }
    }

    /// Lift value: for odd maps `H(x + k) = H(x) + 2k`, continuous in `x`.
    pub fn lift_jet(&self, x: f64) -> Jet {
        match self.spec.parity {
            Parity::Odd => {
                let k = x.floor();
                let j = self.odd_lift_jet(x - k);
                Jet::new(j.value + 2.0 * k, j.d1, j.d2)
            }
            Parity::Even => self.even_jet(x),
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.spec.parity {
            Parity::Odd => {
                let r = reduce_unit(x);
                let u = r - 0.5;
                let w = self.spec.inner_half_width;
                if u.abs() <= w {
                    let v = self.amplitude * u.powi(self.spec.critical_order as i32);
                    let v = if v < 0.0 { 1.0 + v } else { v };
                    if v >= 1.0 {
                        0.0
                    } else {
                        v
                    }
                } else if u.abs() >= self.spec.outer_half_width {
                    if r < 0.5 {
                        2.0 * r
                    } else {
                        2.0 * r - 1.0
                    }
                } else {
                    self.jet(r).value
                }
            }
            Parity::Even => {
                let au = x.abs();
                if au <= self.spec.inner_half_width {
                    self.a0 - self.amplitude * au.powi(self.spec.critical_order as i32)
                } else if au >= 1.0 {
                    self.a0 - x * x
                } else if x > 0.0 {
                    self.a0 + self.bridge_right.poly.eval(x)
                } else {
                    self.a0 + self.bridge_left.poly.eval(x)
                }
            }
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let d = self.spec.critical_order as i32;
        match self.spec.parity {
            Parity::Odd => {
                let r = reduce_unit(x);
                let u = r - 0.5;
                if u.abs() <= self.spec.inner_half_width {
                    d as f64 * self.amplitude * u.powi(d - 1)
                } else if u.abs() >= self.spec.outer_half_width {
                    2.0
                } else {
                    self.odd_lift_jet(r).d1
                }
            }
            Parity::Even => {
                if x.abs() <= self.spec.inner_half_width {
                    -(d as f64) * self.amplitude * x.powi(d - 1)
                } else if x.abs() >= 1.0 {
                    -2.0 * x
                } else {
                    self.even_jet(x).d1
                }
            }
        }
    }

    /// Value and derivative in one call.
    #[inline]
    pub fn value_and_derivative(&self, x: f64) -> (f64, f64) {
        (self.value(x), self.derivative(x))
    }

    fn odd_lift_jet(&self, r: f64) -> Jet {
        let d = self.spec.critical_order as i32;
        let df = d as f64;
        let u = r - 0.5;
        let a = self.amplitude;
        if u.abs() <= self.spec.inner_half_width {
            Jet::new(
                1.0 + a * u.powi(d),
                df * a * u.powi(d - 1),
                df * (df - 1.0) * a * u.powi(d - 2),
            )
        } else if u.abs() >= self.spec.outer_half_width {
            Jet::new(2.0 * r, 2.0, 0.0)
        } else if u < 0.0 {
            self.bridge_left.jet(r)
        } else {
            self.bridge_right.jet(r)
        }
    }

    fn even_jet(&self, x: f64) -> Jet {
        let d = self.spec.critical_order as i32;
        let df = d as f64;
        let a = self.amplitude;
        let base = if x.abs() <= self.spec.inner_half_width {
            Jet::new(-a * x.powi(d), -df * a * x.powi(d - 1), -df * (df - 1.0) * a * x.powi(d - 2))
        } else if x.abs() >= 1.0 {
            Jet::new(-x * x, -2.0 * x, -2.0)
        } else if x > 0.0 {
            self.bridge_right.jet(x)
        } else {
            self.bridge_left.jet(x)
        };
        Jet::new(self.a0 + base.value, base.d1, base.d2)
    }

    /// Same shape with a different quadratic parameter (even maps).
    pub(crate) fn with_a0(&self, a0: f64) -> Self {
        let mut m = self.clone();
        m.a0 = a0;
        m
    }

    /// Interval on which global bounds are sampled.
    pub fn sample_domain(&self) -> (f64, f64) {
        match self.spec.parity {
            Parity::Odd => (0.0, 1.0),
            Parity::Even => {
                let hi = self.a0.max(1.0);
                (-hi, hi)
            }
        }
    }

    /// Pieces as `(lo, hi)` intervals covering the sample domain.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        let (w, o) = (self.spec.inner_half_width, self.spec.outer_half_width);
        match self.spec.parity {
            Parity::Odd => vec![
                (0.0, 0.5 - o),
                (0.5 - o, 0.5 - w),
                (0.5 - w, 0.5 + w),
                (0.5 + w, 0.5 + o),
                (0.5 + o, 1.0),
            ],
            Parity::Even => {
                let hi = self.a0.max(1.0);
                vec![(-hi, -1.0), (-1.0, -w), (-w, w), (w, 1.0), (1.0, hi)]
            }
        }
    }

    /// `count` evenly spaced `(x, jet)` samples over the sample domain.
    pub fn table(&self, count: usize) -> Vec<(f64, Jet)> {
        let (lo, hi) = self.sample_domain();
        let n = count.max(2);
        let last = if self.is_circle() { n } else { n - 1 };
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / last as f64;
                (x, self.jet(x))
            })
            .collect()
    }
}

/// Reduce to `[0, 1)`.
#[inline]
pub fn reduce_unit(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        return x;
    }
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Build and verify a map; even maps without `a0` are calibrated first.
pub fn build_map(spec: &MapSpec) -> Result<DegenerateMap> {
    spec.validate()?;
    let a0 = match (spec.parity, spec.a0) {
        (Parity::Odd, _) => 0.0,
        (Parity::Even, Some(a)) => a,
        (Parity::Even, None) => calibrate_preperiodic(spec, spec.landing, 1e-12, None)?,
    };
    let mut map = DegenerateMap::assemble(spec, a0)?;
    if spec.bridge_policy == BridgePolicy::Monotone {
        for b in [&map.bridge_left, &map.bridge_right] {
            let lj = b.jet(b.lo);
            let rj = b.jet(b.hi);
            build_bridge(lj, rj, b.lo, b.hi)?;
        }
    }
    let diag = MapDiagnostics::compute(&map, 1 << 16);
    let tol = 1e-9;
    for s in diag.endpoint_slopes {
        if (s - spec.slope_target).abs() > tol {
            return Err(Error::BoundViolated {
                name: "|h'| at the inner endpoints minus target".into(),
                value: (s - spec.slope_target).abs(),
                bound: tol,
            });
        }
    }
    if diag.max_abs_d1 > MAX_SLOPE * (1.0 + 1e-12) {
        return Err(Error::BoundViolated {
            name: "sup |h'|".into(),
            value: diag.max_abs_d1,
            bound: MAX_SLOPE,
        });
    }
    if spec.bridge_policy == BridgePolicy::Expanding {
        for p in &diag.bridges {
            if p.min_d1 < 0.0 && p.max_d1 > 0.0 {
                return Err(Error::BoundViolated {
                    name: "bridge h' changes sign; min |h'|".into(),
                    value: 0.0,
                    bound: spec.slope_target,
                });
            }
            if p.min_abs_d1 < spec.slope_target * (1.0 - 1e-9) {
                return Err(Error::BoundViolated {
                    name: "bridge target minus min |h'|".into(),
                    value: spec.slope_target - p.min_abs_d1,
                    bound: 0.0,
                });
            }
        }
    }
    map.diagnostics = diag;
    map.reference = locate_reference_orbit(&map).ok();
    if spec.parity == Parity::Odd && map.reference.is_none() {
        return Err(Error::NoReferenceOrbit("critical value is not the fixed point 0".into()));
    }
    Ok(map)
}

/// Evaluate `h`, `h'` or `h''` at `x`.
pub fn evaluate(map: &DegenerateMap, x: f64, deriv_order: u8) -> Result<f64> {
    let j = map.jet(x);
    match deriv_order {
        0 => Ok(j.value),
        1 => Ok(j.d1),
        2 => Ok(j.d2),
        k => Err(Error::PreconditionViolated(format!("derivative order {k} not in 0..=2"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn amplitude_matches_slope_condition() {
        let a = solve_amplitude(3, 0.1, 1.75).unwrap();
        assert_relative_eq!(a, 175.0 / 3.0, max_relative = 1e-14);
        let a = solve_amplitude(4, 0.05, 1.75).unwrap();
        assert_relative_eq!(a, 3500.0, max_relative = 1e-12);
        assert!(matches!(solve_amplitude(3, 0.0, 1.75), Err(Error::DegenerateWidth(_))));
        // independent check of the defining identity
        for d in 2..9 {
            let w = 0.1 + 0.05 * d as f64;
            let a = solve_amplitude(d, w, 1.75).unwrap();
            assert_relative_eq!(d as f64 * a * w.powi(d as i32 - 1), 1.75, max_relative = 1e-13);
        }
    }

    #[test]
    fn odd_map_pointwise() {
        let m = build_map(&MapSpec::odd(3)).unwrap();
        assert_eq!(evaluate(&m, 0.25, 1).unwrap(), 2.0);
        assert_relative_eq!(evaluate(&m, 0.55, 0).unwrap(), 175.0 / 3.0 * 0.05f64.powi(3), max_relative = 1e-12);
        assert_eq!(m.value(0.5), 0.0);
        assert_eq!(m.value(0.0), 0.0);
        assert_eq!(m.derivative(0.0), 2.0);
        assert_eq!(m.derivative(0.5), 0.0);
        assert!(matches!(evaluate(&m, 0.1, 3), Err(Error::PreconditionViolated(_))));
        // symmetry h(1 - x) = -h(x) mod 1
        for i in 1..200 {
            let x = i as f64 / 200.0 + 1e-3;
            let s = (m.value(x) + m.value(1.0 - x)).rem_euclid(1.0);
            assert!(!(1e-12..=1.0 - 1e-12).contains(&s), "x = {x}");
            assert_relative_eq!(m.derivative(x), m.derivative(1.0 - x), max_relative = 1e-9);
        }
    }

    #[test]
    fn odd_lift_has_degree_two() {
        let m = build_map(&MapSpec::odd(5)).unwrap();
        for i in 0..100 {
            let x = i as f64 / 100.0;
            assert_relative_eq!(m.lift_jet(x + 1.0).value - m.lift_jet(x).value, 2.0, epsilon = 1e-12);
        }
        // continuity of the lift across piece boundaries
        for (lo, hi) in m.pieces() {
            for x in [lo, hi] {
                let a = m.lift_jet(x - 1e-9);
                let b = m.lift_jet(x + 1e-9);
                assert!((a.value - b.value).abs() < 1e-7);
                assert!((a.d1 - b.d1).abs() < 1e-6);
                assert!((a.d2 - b.d2).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn even_map_pointwise() {
        let mut spec = MapSpec::even(4);
        spec.a0 = Some(1.5);
        let m = build_map(&spec).unwrap();
        assert_eq!(m.value(0.0), 1.5);
        assert_relative_eq!(m.value(1.2), 1.5 - 1.44, epsilon = 1e-15);
        assert_relative_eq!(m.value(-1.2), 1.5 - 1.44, epsilon = 1e-15);
        assert_relative_eq!(m.derivative(-0.65).abs(), 1.75, max_relative = 1e-12);
        for i in 0..50 {
            let x = -1.4 + 2.8 * i as f64 / 49.0;
            assert_relative_eq!(m.value(x), m.value(-x), epsilon = 1e-13);
            assert_relative_eq!(m.value(x), m.jet(x).value, epsilon = 1e-13);
            assert_relative_eq!(m.derivative(x), m.jet(x).d1, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = MapSpec::odd(3);
        s.inner_half_width = 0.25;
        assert!(matches!(build_map(&s), Err(Error::InvalidSpec(_))));
        let mut s = MapSpec::odd(4);
        s.parity = Parity::Odd;
        assert!(matches!(build_map(&s), Err(Error::InvalidSpec(_))));
        let mut s = MapSpec::even(4);
        s.a0 = Some(2.5);
        assert!(matches!(build_map(&s), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn narrow_even_inner_interval_is_not_expanding() {
        let mut s = MapSpec::even(4);
        s.inner_half_width = 0.05;
        s.a0 = Some(1.55);
        assert!(matches!(build_map(&s), Err(Error::BoundViolated { .. })));
    }

    #[test]
    fn odd_bridges_cannot_be_monotone() {
        let mut s = MapSpec::odd(3);
        s.bridge_policy = BridgePolicy::Monotone;
        assert!(matches!(build_map(&s), Err(Error::MonotonicityViolated { .. })));
    }

    #[test]
    fn build_bridge_accepts_cubic_like_data() {
        // data sampled from x^3 on [1, 2]: h' = 3x^2 and h'' = 6x both increase
        let b = build_bridge(Jet::new(1.0, 3.0, 6.0), Jet::new(8.0, 12.0, 12.0), 1.0, 2.0).unwrap();
        assert_relative_eq!(b.jet(1.5).value, 3.375, epsilon = 1e-12);
        assert_eq!(b.poly.degree(), 5);
    }
}
