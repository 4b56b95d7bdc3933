use super::{AdmissibleCurve, CurveSource, PartitionElement};
use crate::error::{Error, Result};
use crate::hermite::Jet;
use crate::skew::SkewProduct;

/// Image jet at `g(theta)` of the curve jet `x` at `theta`:
/// `Y' = (f_t + f_x X') / g'` and
/// `Y'' = (f_tt + 2 f_tx X' + f_xx X'^2 + f_x X'' - Y' g'') / g'^2`.
#[inline]
pub fn push_forward(sp: &SkewProduct, theta: f64, x: Jet) -> Jet {
    let j = sp.jet(theta, x.value);
    let y1 = (j.f_theta + j.f_x * x.d1) / j.g1;
    let y2 = (j.f_thetatheta + 2.0 * j.f_thetax * x.d1 + j.f_xx * x.d1 * x.d1 + j.f_x * x.d2
        - y1 * j.g2)
        / (j.g1 * j.g1);
    Jet::new(j.f, y1, y2)
}

/// Image of the restriction of a curve to `elem` under `phi^n`, sampled on `grid` points.
pub fn iterate_over_element<S: CurveSource + ?Sized>(
    src: &S,
    sp: &SkewProduct,
    elem: &PartitionElement,
    grid: usize,
) -> Result<AdmissibleCurve> {
    if elem.d != sp.d {
        return Err(Error::PreconditionViolated(format!(
            "element base {} differs from skew product base {}",
            elem.d, sp.d
        )));
    }
    let n = elem.level;
    let mut x = Vec::with_capacity(grid);
    let mut dx = Vec::with_capacity(grid);
    let mut ddx = Vec::with_capacity(grid);
    let d = sp.d;
    // denominators d^(n-j) and residues k mod d^(n-j)
    let chain: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let den = d.pow(n - j);
            (den as f64, (elem.index % den) as f64)
        })
        .collect();
    for i in 0..grid {
        let phi = i as f64 / grid as f64;
        let mut jet = src.jet((phi + chain[0].1) / chain[0].0);
        for &(den, k) in &chain {
            jet = push_forward(sp, (phi + k) / den, jet);
        }
        let v = if sp.is_circle() {
            crate::maps::reduce_unit(jet.value)
        } else {
            jet.value
        };
        x.push(v);
        dx.push(jet.d1);
        ddx.push(jet.d2);
    }
    let c = AdmissibleCurve::from_samples_unchecked(x, dx, ddx, sp.alpha, sp.domain);
    match c.defect() {
        None => Ok(c),
        Some(_) => Err(Error::AdmissibilityLost {
            element: elem.name(),
            max_d1: c.max_abs_d1(),
            max_d2: c.max_abs_d2(),
            alpha: sp.alpha,
        }),
    }
}

/// One step along the level-one element `elem`.
pub fn iterate_once<S: CurveSource + ?Sized>(
    src: &S,
    sp: &SkewProduct,
    elem: &PartitionElement,
    grid: usize,
) -> Result<AdmissibleCurve> {
    if elem.level != 1 {
        return Err(Error::PreconditionViolated(format!("element {elem} is not of level 1")));
    }
    iterate_over_element(src, sp, elem, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{CurveKind, TrigCurve};
    use crate::maps::{build_map, MapSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sp(alpha: f64) -> SkewProduct {
        SkewProduct::new(build_map(&MapSpec::odd(3)).unwrap(), 16, alpha).unwrap()
    }

    #[test]
    fn constant_curve_first_branch() {
        let alpha = 1e-3;
        let s = sp(alpha);
        let e = PartitionElement::new(16, 1, 0).unwrap();
        let y = iterate_once(&TrigCurve::constant(0.25), &s, &e, 256).unwrap();
        assert_relative_eq!(y.x[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(y.dx[0], PI * alpha / 8.0, max_relative = 1e-13);
    }

    #[test]
    fn critical_constant_curve() {
        let alpha = 1e-3;
        let s = sp(alpha);
        let e = PartitionElement::new(16, 1, 5).unwrap();
        let y = iterate_once(&TrigCurve::constant(0.5), &s, &e, 64).unwrap();
        for i in 0..64 {
            let theta = (i as f64 / 64.0 + 5.0) / 16.0;
            let ft = alpha * 2.0 * PI * (2.0 * PI * theta).cos();
            assert_relative_eq!(y.dx[i], ft / 16.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn level_one_reduction() {
        let s = sp(1e-3);
        let g = CurveKind::Random { x0: 0.42, seed: 5, terms: 5, scale: 0.9 }.generator(1e-3).unwrap();
        let e = PartitionElement::new(16, 1, 3).unwrap();
        let a = iterate_once(&g, &s, &e, 128).unwrap();
        let b = iterate_over_element(&g, &s, &e, 128).unwrap();
        assert_eq!(a, b);
        let e2 = PartitionElement::new(16, 2, 3).unwrap();
        assert!(iterate_once(&g, &s, &e2, 128).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let alpha = 1e-3;
        let s = sp(alpha);
        let g = CurveKind::Random { x0: 0.31, seed: 11, terms: 6, scale: 0.95 }.generator(alpha).unwrap();
        let grid = 1 << 14;
        for e in [PartitionElement::new(16, 2, 77).unwrap(), PartitionElement::new(16, 4, 40_000).unwrap()] {
            let y = iterate_over_element(&g, &s, &e, grid).unwrap();
            let h = 1.0 / grid as f64;
            let mut worst: f64 = 0.0;
            for i in 1..grid - 1 {
                let fd = (y.x[i + 1] - y.x[i - 1]) / (2.0 * h);
                let scale = y.dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.max((fd - y.dx[i]).abs() / scale);
            }
            assert!(worst <= 1e-5, "relative FD error {worst}");
        }
    }
}
