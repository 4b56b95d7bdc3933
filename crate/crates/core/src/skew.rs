//! Skew products `(theta, x) -> (d theta mod 1, alpha b(theta) + h(x))`.

use crate::error::{Error, Result};
use crate::maps::{DegenerateMap, Parity};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// `sin_coef sin(2 pi k theta) + cos_coef cos(2 pi k theta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: u32,
    pub sin_coef: f64,
    pub cos_coef: f64,
}

/// Trigonometric polynomial forcing `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub terms: Vec<TrigTerm>,
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing {
            terms: vec![TrigTerm {
                k: 1,
                sin_coef: 1.0,
                cos_coef: 0.0,
            }],
        }
    }
}

impl Forcing {
    /// `b`, `b'`, `b''` at `theta`.
    #[inline]
    pub fn jet(&self, theta: f64) -> (f64, f64, f64) {
        let (mut b, mut b1, mut b2) = (0.0, 0.0, 0.0);
        for t in &self.terms {
            let w = TAU * t.k as f64;
            let (s, c) = (w * theta).sin_cos();
            b += t.sin_coef * s + t.cos_coef * c;
            b1 += w * (t.sin_coef * c - t.cos_coef * s);
            b2 -= w * w * (t.sin_coef * s + t.cos_coef * c);
        }
        (b, b1, b2)
    }

    #[inline]
    pub fn value(&self, theta: f64) -> f64 {
        if let [t] = self.terms.as_slice() {
            let (s, c) = (TAU * t.k as f64 * theta).sin_cos();
            return t.sin_coef * s + t.cos_coef * c;
        }
        self.jet(theta).0
    }

    /// Sup norms of `b`, `b'`, `b''` and the range of `b`, on a dense grid.
    pub fn norms(&self, grid: usize) -> ForcingNorms {
        let mut n = ForcingNorms {
            sup: 0.0,
            sup_d1: 0.0,
            sup_d2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        for i in 0..grid {
            let (b, b1, b2) = self.jet(i as f64 / grid as f64);
            n.sup = n.sup.max(b.abs());
            n.sup_d1 = n.sup_d1.max(b1.abs());
            n.sup_d2 = n.sup_d2.max(b2.abs());
            n.min = n.min.min(b);
            n.max = n.max.max(b);
        }
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingNorms {
    pub sup: f64,
    pub sup_d1: f64,
    pub sup_d2: f64,
    pub min: f64,
    pub max: f64,
}

/// Sup-norm budgets for perturbed forcings: `|b - sin| <= 1`, `|b'| <= 8`, `|b''| <= 50`.
pub const FORCING_BUDGET: [f64; 3] = [1.0, 8.0, 50.0];

/// Forward-invariant fiber domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FiberDomain {
    Circle,
    Interval { lo: f64, hi: f64 },
}

/// First and second partial derivatives of the skew product.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewJet {
    pub g1: f64,
    pub g2: f64,
    pub f: f64,
    pub f_theta: f64,
    pub f_x: f64,
    pub f_thetatheta: f64,
    pub f_thetax: f64,
    pub f_xx: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkewProduct {
    pub map: DegenerateMap,
    pub d: u64,
    pub alpha: f64,
    pub forcing: Forcing,
    pub domain: FiberDomain,
}

impl SkewProduct {
    pub fn new(map: DegenerateMap, d: u64, alpha: f64) -> Result<Self> {
        Self::with_forcing(map, d, alpha, Forcing::default())
    }

    pub fn with_forcing(map: DegenerateMap, d: u64, alpha: f64, forcing: Forcing) -> Result<Self> {
        if d < 16 {
            return Err(Error::InvalidSpec(format!("base degree d = {d} must be >= 16")));
        }
        if d > 1 << 16 {
            return Err(Error::InvalidSpec(format!("base degree d = {d} too large")));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidSpec(format!("alpha = {alpha} must be positive")));
        }
        if alpha * 32.0 >= 1.0 {
            return Err(Error::AlphaTooLarge { alpha });
        }
        let domain = match map.parity() {
            Parity::Odd => FiberDomain::Circle,
            Parity::Even => invariant_interval(&map, alpha, &forcing)?,
        };
        Ok(SkewProduct {
            map,
            d,
            alpha,
            forcing,
            domain,
        })
    }

    pub fn is_circle(&self) -> bool {
        self.map.is_circle()
    }

    /// Fiber coordinate of the image.
    #[inline]
    pub fn fiber(&self, theta: f64, x: f64) -> f64 {
        let y = self.alpha * self.forcing.value(theta) + self.map.value(x);
        if self.map.is_circle() {
            crate::maps::reduce_unit(y)
        } else {
            y
        }
    }

    /// Fiber image together with `df/dx`.
    #[inline]
    pub fn fiber_and_slope(&self, theta: f64, x: f64) -> (f64, f64) {
        let (h, h1) = self.map.value_and_derivative(x);
        let y = self.alpha * self.forcing.value(theta) + h;
        let y = if self.map.is_circle() {
            crate::maps::reduce_unit(y)
        } else {
            y
        };
        (y, h1)
    }

    /// Fiber image computed on the lift (no reduction).
    pub fn fiber_lift(&self, theta: f64, x: f64) -> f64 {
        self.alpha * self.forcing.value(theta) + self.map.lift_jet(x).value
    }

    pub fn apply(&self, theta: f64, x: f64) -> (f64, f64) {
        let t = (self.d as f64 * theta).rem_euclid(1.0);
        (if t >= 1.0 { 0.0 } else { t }, self.fiber(theta, x))
    }

    /// Partial derivatives at `(theta, x)`; `f` is the lift value.
    #[inline]
    pub fn jet(&self, theta: f64, x: f64) -> SkewJet {
        let (b, b1, b2) = self.forcing.jet(theta);
        let h = self.map.lift_jet(x);
        SkewJet {
            g1: self.d as f64,
            g2: 0.0,
            f: self.alpha * b + h.value,
            f_theta: self.alpha * b1,
            f_x: h.d1,
            f_thetatheta: self.alpha * b2,
            f_thetax: 0.0,
            f_xx: h.d2,
        }
    }

    /// Jacobian entries `(g', df/dtheta, df/dx)`.
    pub fn jacobian(&self, theta: f64, x: f64) -> (f64, f64, f64) {
        let j = self.jet(theta, x);
        (j.g1, j.f_theta, j.f_x)
    }

    /// Same system with `extra` added to the forcing, subject to the sup-norm budgets.
    pub fn perturbed(&self, extra: &[TrigTerm]) -> Result<Self> {
        let delta = Forcing {
            terms: extra.to_vec(),
        };
        let dn = delta.norms(1 << 14);
        if dn.sup > FORCING_BUDGET[0] {
            return Err(Error::BudgetExceeded {
                name: "sup |b - b0|".into(),
                value: dn.sup,
                bound: FORCING_BUDGET[0],
            });
        }
        let mut forcing = self.forcing.clone();
        forcing.terms.extend_from_slice(extra);
        let n = forcing.norms(1 << 14);
        if n.sup_d1 > FORCING_BUDGET[1] {
            return Err(Error::BudgetExceeded {
                name: "sup |b'|".into(),
                value: n.sup_d1,
                bound: FORCING_BUDGET[1],
            });
        }
        if n.sup_d2 > FORCING_BUDGET[2] {
            return Err(Error::BudgetExceeded {
                name: "sup |b''|".into(),
                value: n.sup_d2,
                bound: FORCING_BUDGET[2],
            });
        }
        SkewProduct::with_forcing(self.map.clone(), self.d, self.alpha, forcing)
    }
}

/// Invariant interval for an even map: `[lo, hi]` with image strictly inside.
pub fn invariant_interval(map: &DegenerateMap, alpha: f64, forcing: &Forcing) -> Result<FiberDomain> {
    let fn_ = forcing.norms(1 << 12);
    let (bmin, bmax) = (alpha * fn_.min, alpha * fn_.max);
    let eps = 1e-3;
    let hi = map.a0 + bmax + eps;
    let mut lo = -hi;
    let image_range = |lo: f64, hi: f64| {
        let n = 1 << 14;
        let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let v = map.value(lo + (hi - lo) * i as f64 / n as f64);
            mn = mn.min(v);
            mx = mx.max(v);
        }
        (mn + bmin, mx + bmax)
    };
    for _ in 0..50 {
        let (mn, _) = image_range(lo, hi);
        let next = mn - eps;
        if (next - lo).abs() < 1e-15 {
            break;
        }
        lo = next;
        if lo < -hi {
            break;
        }
    }
    let (mn, mx) = image_range(lo, hi);
    if !(mn > lo && mx < hi) || lo < -hi {
        return Err(Error::NotInvariant(format!(
            "image [{mn:.6}, {mx:.6}] of [{lo:.6}, {hi:.6}] escapes"
        )));
    }
    Ok(FiberDomain::Interval { lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{build_map, MapSpec};
    use approx::assert_relative_eq;

    fn odd3() -> SkewProduct {
        SkewProduct::new(build_map(&MapSpec::odd(3)).unwrap(), 16, 1e-3).unwrap()
    }

    #[test]
    fn apply_matches_definition() {
        let s = odd3();
        let (t, x) = s.apply(0.1, 0.2);
        assert_relative_eq!(t, 0.6, epsilon = 1e-15);
        assert_relative_eq!(x, 1e-3 * (TAU * 0.1).sin() + 0.4, epsilon = 1e-15);
        assert_eq!(s.apply(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let s = odd3();
        let e = 1e-6;
        for &(t, x) in &[(0.13, 0.31), (0.77, 0.42), (0.5, 0.58), (0.91, 0.7)] {
            let (g1, ft, fx) = s.jacobian(t, x);
            assert_eq!(g1, 16.0);
            let fd_t = (s.fiber_lift(t + e, x) - s.fiber_lift(t - e, x)) / (2.0 * e);
            let fd_x = (s.fiber_lift(t, x + e) - s.fiber_lift(t, x - e)) / (2.0 * e);
            assert_relative_eq!(ft, fd_t, max_relative = 1e-6);
            assert_relative_eq!(fx, fd_x, max_relative = 1e-6);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = build_map(&MapSpec::odd(3)).unwrap();
        assert!(matches!(SkewProduct::new(m.clone(), 8, 1e-3), Err(Error::InvalidSpec(_))));
        assert!(matches!(SkewProduct::new(m, 16, 0.05), Err(Error::AlphaTooLarge { .. })));
    }

    #[test]
    fn perturbation_budget() {
        let s = odd3();
        let ok = s
            .perturbed(&[TrigTerm { k: 2, sin_coef: 0.1, cos_coef: 0.0 }])
            .unwrap();
        assert_eq!(ok.forcing.terms.len(), 2);
        assert!(matches!(
            s.perturbed(&[TrigTerm { k: 2, sin_coef: 2.0, cos_coef: 0.0 }]),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn even_domain_is_invariant() {
        let m = build_map(&MapSpec::even(4)).unwrap();
        let s = SkewProduct::new(m, 16, 1e-3).unwrap();
        let FiberDomain::Interval { lo, hi } = s.domain else {
            panic!("interval expected")
        };
        assert!(lo < -0.5 && hi > 1.5);
        for i in 0..=400 {
            for j in 0..=40 {
                let x = lo + (hi - lo) * i as f64 / 400.0;
                let y = s.fiber(j as f64 / 40.0, x);
                assert!(y > lo && y < hi);
            }
        }
    }

    #[test]
    fn escaping_even_domain_detected() {
        let mut spec = MapSpec::even(4);
        spec.a0 = Some(1.99);
        let m = build_map(&spec).unwrap();
        assert!(matches!(SkewProduct::new(m, 16, 0.03), Err(Error::NotInvariant(_))));
    }
}
