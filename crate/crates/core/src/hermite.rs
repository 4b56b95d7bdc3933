//! Two-point quintic Hermite interpolation and shifted polynomials.

use serde::{Deserialize, Serialize};

/// Value with first and second derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Jet { value, d1, d2 }
    }
}

/// Polynomial `sum coeffs[k] * (x - origin)^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPoly {
    pub origin: f64,
    pub coeffs: Vec<f64>,
}

impl ShiftedPoly {
    pub fn eval(&self, x: f64) -> f64 {
        let t = x - self.origin;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn jet(&self, x: f64) -> Jet {
        let t = x - self.origin;
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * t + 2.0 * dp;
            dp = dp * t + p;
            p = p * t + c;
        }
        Jet::new(p, dp, ddp)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Coefficients of the quintic on `[0, 1]` in the unit variable `t`, matching
/// `left` at 0 and `right` at 1 where derivatives are already scaled by `h`, `h^2`.
#[inline]
fn unit_quintic(y0: f64, s0: f64, c0: f64, y1: f64, s1: f64, c1: f64) -> [f64; 6] {
    let a0 = y0;
    let a1 = s0;
    let a2 = 0.5 * c0;
    let r0 = y1 - a0 - a1 - a2;
    let r1 = s1 - a1 - 2.0 * a2;
    let r2 = c1 - 2.0 * a2;
    [
        a0,
        a1,
        a2,
        10.0 * r0 - 4.0 * r1 + 0.5 * r2,
        -15.0 * r0 + 7.0 * r1 - r2,
        6.0 * r0 - 3.0 * r1 + 0.5 * r2,
    ]
}

/// Quintic matching the 2-jets `left` at `x0` and `right` at `x1`.
pub fn quintic_hermite(x0: f64, x1: f64, left: Jet, right: Jet) -> ShiftedPoly {
    let h = x1 - x0;
    let c = unit_quintic(
        left.value,
        h * left.d1,
        h * h * left.d2,
        right.value,
        h * right.d1,
        h * h * right.d2,
    );
    let mut scale = 1.0;
    let coeffs = c
        .iter()
        .map(|&ck| {
            let v = ck / scale;
            scale *= h;
            v
        })
        .collect();
    ShiftedPoly { origin: x0, coeffs }
}

/// Evaluate the quintic Hermite interpolant at local parameter `t` in `[0, 1]`
/// for a cell of width `h`, returning the jet in the original variable.
#[inline]
pub fn hermite_cell(left: Jet, right: Jet, h: f64, t: f64) -> Jet {
    let c = unit_quintic(
        left.value,
        h * left.d1,
        h * h * left.d2,
        right.value,
        h * right.d1,
        h * h * right.d2,
    );
    let p = ((((c[5] * t + c[4]) * t + c[3]) * t + c[2]) * t + c[1]) * t + c[0];
    let dp = (((5.0 * c[5] * t + 4.0 * c[4]) * t + 3.0 * c[3]) * t + 2.0 * c[2]) * t + c[1];
    let ddp = ((20.0 * c[5] * t + 12.0 * c[4]) * t + 6.0 * c[3]) * t + 2.0 * c[2];
    Jet::new(p, dp / h, ddp / (h * h))
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reproduces_quintic_exactly() {
        let exact = |x: f64| 0.3 - 1.2 * x + 0.5 * x.powi(2) + 2.0 * x.powi(3) - x.powi(4) + 0.25 * x.powi(5);
        let d1 = |x: f64| -1.2 + x + 6.0 * x.powi(2) - 4.0 * x.powi(3) + 1.25 * x.powi(4);
        let d2 = |x: f64| 1.0 + 12.0 * x - 12.0 * x.powi(2) + 5.0 * x.powi(3);
        let (a, b) = (-0.4, 1.3);
        let p = quintic_hermite(a, b, Jet::new(exact(a), d1(a), d2(a)), Jet::new(exact(b), d1(b), d2(b)));
        for i in 0..=20 {
            let x = a + (b - a) * i as f64 / 20.0;
            let j = p.jet(x);
            assert_relative_eq!(j.value, exact(x), epsilon = 1e-12);
            assert_relative_eq!(j.d1, d1(x), epsilon = 1e-11);
            assert_relative_eq!(j.d2, d2(x), epsilon = 1e-10);
        }
        let h = b - a;
        let c = hermite_cell(Jet::new(exact(a), d1(a), d2(a)), Jet::new(exact(b), d1(b), d2(b)), h, 0.37);
        let x = a + 0.37 * h;
        assert_relative_eq!(c.value, exact(x), epsilon = 1e-12);
        assert_relative_eq!(c.d2, d2(x), epsilon = 1e-10);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-14);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }
}
