use super::{DegenerateMap, MapSpec, Parity};
use crate::error::{Error, Result};
use crate::hermite::bisect;
use serde::{Deserialize, Serialize};

/// Expanding fixed point hit by the critical orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOrbit {
    pub q: f64,
    /// `|h'(q)|`.
    pub rho: f64,
    /// Number of iterates from the critical point to `q`.
    pub landing: u32,
    pub residual: f64,
    pub critical_orbit: Vec<f64>,
}

const LANDING_TOL: f64 = 1e-9;
const MAX_LANDING: u32 = 64;

fn fixed_points(map: &DegenerateMap) -> Vec<f64> {
    let n = 1 << 14;
    let mut out = Vec::new();
    match map.parity() {
        Parity::Odd => {
            // roots of H(x) - x - k on [0, 1)
            let g = |x: f64| map.lift_jet(x).value - x;
            let mut prev = g(0.0);
            if prev.fract() == 0.0 {
                out.push(0.0);
            }
            for i in 1..=n {
                let x = i as f64 / n as f64;
                let cur = g(x);
                let k = prev.floor().max(cur.floor());
                if prev.floor() != cur.floor() && i < n {
                    if let Some(r) = bisect(|t| g(t) - k, (i - 1) as f64 / n as f64, x, 1e-16) {
                        if r > 0.0 && r < 1.0 {
                            out.push(r);
                        }
                    }
                }
                prev = cur;
            }
        }
        Parity::Even => {
            let (lo, hi) = map.sample_domain();
            let (lo, hi) = (lo - 1.0, hi + 1.0);
            let g = |x: f64| map.value(x) - x;
            let mut prev = g(lo);
            for i in 1..=n {
                let x1 = lo + (hi - lo) * i as f64 / n as f64;
                let x0 = lo + (hi - lo) * (i - 1) as f64 / n as f64;
                let cur = g(x1);
                if prev == 0.0 {
                    out.push(x0);
                } else if prev.signum() != cur.signum() && cur != 0.0 {
                    if let Some(r) = bisect(g, x0, x1, 1e-16) {
                        out.push(r);
                    }
                }
                prev = cur;
            }
        }
    }
    out
}

/// Expanding fixed point reached by the critical orbit, with its landing time.
pub fn locate_reference_orbit(map: &DegenerateMap) -> Result<ReferenceOrbit> {
    let fps: Vec<(f64, f64)> = fixed_points(map)
        .into_iter()
        .map(|q| (q, map.derivative(q).abs()))
        .filter(|&(_, r)| r > 1.0)
        .collect();
    if fps.is_empty() {
        return Err(Error::NoReferenceOrbit("no expanding fixed point".into()));
    }
    let mut x = map.critical_point();
    let mut orbit = vec![x];
    for j in 1..=MAX_LANDING {
        x = map.value(x);
        orbit.push(x);
        for &(q, rho) in &fps {
            let r = if map.is_circle() {
                let t = (x - q).rem_euclid(1.0);
                t.min(1.0 - t)
            } else {
                (x - q).abs()
            };
            if r <= LANDING_TOL {
                return Ok(ReferenceOrbit {
                    q,
                    rho,
                    landing: j,
                    residual: r,
                    critical_orbit: orbit,
                });
            }
        }
        if !x.is_finite() {
            break;
        }
    }
    Err(Error::NoReferenceOrbit(format!(
        "critical orbit misses all {} expanding fixed points within {MAX_LANDING} iterates",
        fps.len()
    )))
}

/// Positive fixed point of an even map.
fn positive_fixed_point(map: &DegenerateMap) -> Option<f64> {
    let hi = map.a0.max(1.0) + 1.0;
    bisect(|x| map.value(x) - x, 0.0, hi, 1e-16)
}

fn landing_residual(base: &DegenerateMap, a: f64, landing: u32) -> f64 {
    let m = base.with_a0(a);
    let q = match positive_fixed_point(&m) {
        Some(q) => q,
        None => return f64::NAN,
    };
    let mut x = 0.0;
    for _ in 0..landing {
        x = m.value(x);
    }
    x - q
}

/// Parameter `a0` for which the critical orbit of an even map lands on the positive
/// fixed point after `landing` iterates.
pub fn calibrate_preperiodic(
    spec: &MapSpec,
    landing: u32,
    tol: f64,
    bracket: Option<(f64, f64)>,
) -> Result<f64> {
    if spec.parity != Parity::Even {
        return Err(Error::PreconditionViolated("calibration applies to even maps".into()));
    }
    let mut s = spec.clone();
    s.a0 = None;
    s.validate()?;
    let base = DegenerateMap::assemble(&s, 1.5)?;
    let f = |a: f64| landing_residual(&base, a, landing);
    let sign_change = |lo: f64, hi: f64| {
        let (a, b) = (f(lo), f(hi));
        a.is_finite() && b.is_finite() && a.signum() != b.signum()
    };
    let root_in = |lo: f64, hi: f64| -> Option<f64> {
        let r = bisect(f, lo, hi, 0.0)?;
        (f(r).abs() <= tol).then_some(r)
    };
    let found = match bracket {
        Some((lo, hi)) => {
            if !sign_change(lo, hi) {
                return Err(Error::NoBracket { lo, hi });
            }
            root_in(lo, hi)
        }
        None => {
            if sign_change(1.5, 1.6) {
                root_in(1.5, 1.6)
            } else {
                let cells = 400;
                (0..cells).find_map(|i| {
                    let lo = 1.0 + i as f64 / cells as f64;
                    let hi = 1.0 + (i + 1) as f64 / cells as f64;
                    if sign_change(lo, hi) {
                        root_in(lo, hi)
                    } else {
                        None
                    }
                })
            }
        }
    };
    match (found, bracket) {
        (Some(a), _) => Ok(a),
        (None, Some((lo, hi))) => Err(Error::NoBracket { lo, hi }),
        (None, None) => Err(Error::NoBracket { lo: 1.0, hi: 2.0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{build_map, MapSpec};
    use approx::assert_relative_eq;

    #[test]
    fn odd_reference_is_the_fixed_point_zero() {
        for d in [3, 5] {
            let m = build_map(&MapSpec::odd(d)).unwrap();
            let r = m.reference.clone().unwrap();
            assert_eq!(r.q, 0.0);
            assert_eq!(r.rho, 2.0);
            assert_eq!(r.landing, 1);
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn pure_quadratic_calibration_matches_classical_parameter() {
        // with D = 2 and w = 7/8 the map is a0 - x^2 everywhere
        let mut spec = MapSpec::even(2);
        spec.inner_half_width = 0.875;
        let a = calibrate_preperiodic(&spec, 3, 1e-12, Some((1.5, 1.6))).unwrap();
        // oracle: solve a - (a - a^2)^2 ... directly: f^3(0) = q with q = (-1 + sqrt(1 + 4a)) / 2
        let g = |a: f64| {
            let x1 = a;
            let x2 = a - x1 * x1;
            let x3 = a - x2 * x2;
            x3 - (-1.0 + (1.0 + 4.0 * a).sqrt()) / 2.0
        };
        let oracle = bisect(g, 1.5, 1.6, 0.0).unwrap();
        assert_relative_eq!(a, oracle, epsilon = 1e-12);
        assert_relative_eq!(a, 1.543689, epsilon = 1e-6);
    }

    #[test]
    fn even_default_calibrates_and_lands() {
        let m = build_map(&MapSpec::even(4)).unwrap();
        let r = m.reference.clone().unwrap();
        assert_eq!(r.landing, 3);
        assert!(r.q > 0.0);
        assert!(r.residual <= 1e-9);
        assert!(r.rho > 1.0 && r.rho <= 4.0);
        assert!(m.a0 > 1.0 && m.a0 < 2.0);
    }

    #[test]
    fn bad_bracket_reported() {
        let spec = MapSpec::even(4);
        assert!(matches!(
            calibrate_preperiodic(&spec, 3, 1e-12, Some((1.0, 1.01))),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn uncalibrated_even_map_has_no_reference() {
        let mut spec = MapSpec::even(4);
        spec.a0 = Some(1.3);
        let m = build_map(&spec).unwrap();
        assert!(matches!(locate_reference_orbit(&m), Err(Error::NoReferenceOrbit(_))));
    }
}
