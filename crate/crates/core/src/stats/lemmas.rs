use super::{fiber_dist, LogProduct};
use crate::base::{BaseOrbit, DigitSource};
use crate::constants::{compute_p, ExpansionConstants};
use crate::error::{Error, Result};
use crate::skew::SkewProduct;
use serde::{Deserialize, Serialize};

/// Log of the product of `|df/dx|` over `steps` iterates, and the final fiber point.
fn orbit_log_product<S: DigitSource>(
    sp: &SkewProduct,
    base: &mut BaseOrbit<S>,
    x0: f64,
    steps: u32,
) -> (f64, f64, Vec<f64>) {
    let mut p = LogProduct::new();
    let mut x = x0;
    let mut dists = Vec::with_capacity(steps as usize + 1);
    let c = sp.map.critical_point();
    for _ in 0..steps {
        dists.push(fiber_dist(x, c, sp.is_circle()));
        let (y, s) = sp.fiber_and_slope(base.theta(), x);
        p.mul(s);
        x = y;
        base.advance();
    }
    dists.push(fiber_dist(x, c, sp.is_circle()));
    (p.ln(), x, dists)
}

/// Product over `N` steps from a point close to the critical point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma24aReport {
    pub dist: f64,
    pub steps: u32,
    pub log_product: f64,
    /// `ln(|x - x~|^(D-1) alpha^(-1 + eta/(D-1)))`.
    pub log_bound: f64,
    /// Same with `eta/D` in place of `eta/(D-1)`.
    pub log_bound_alt: f64,
    pub holds: bool,
    pub holds_alt: bool,
}

pub fn verify_lemma24a<S: DigitSource>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    theta: S,
    x: f64,
) -> Result<Lemma24aReport> {
    let dist = fiber_dist(x, c.critical_point, sp.is_circle());
    let reach = 2.0 * c.alpha.powf(1.0 / c.order as f64);
    if !(dist < reach) {
        return Err(Error::PreconditionViolated(format!(
            "|x - x~| = {dist:e} not below 2 alpha^(1/D) = {reach:e}"
        )));
    }
    let mut base = BaseOrbit::new(theta, sp.d);
    let (lp, _, _) = orbit_log_product(sp, &mut base, x, c.big_n);
    let dm = c.order as f64 - 1.0;
    let la = c.alpha.ln();
    let (bound, alt) = if dist == 0.0 {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    } else {
        (
            dm * dist.ln() + (-1.0 + c.eta / dm) * la,
            dm * dist.ln() + (-1.0 + c.eta / c.order as f64) * la,
        )
    };
    Ok(Lemma24aReport {
        dist,
        steps: c.big_n,
        log_product: lp,
        log_bound: bound,
        log_bound_alt: alt,
        holds: dist == 0.0 || lp >= bound,
        holds_alt: dist == 0.0 || lp >= alt,
    })
}

/// Product over `p(x)` steps from a point in the intermediate regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma24bReport {
    pub dist: f64,
    pub p: u32,
    pub big_n: u32,
    pub log_product: f64,
    /// `ln((1/kappa) sigma1^p)`.
    pub log_bound: f64,
    pub holds: bool,
    pub p_within_n: bool,
}

pub fn verify_lemma24b<S: DigitSource>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    theta: S,
    x: f64,
) -> Result<Lemma24bReport> {
    let dist = fiber_dist(x, c.critical_point, sp.is_circle());
    let p = compute_p(c, dist, 0.0, c.order)?;
    let mut base = BaseOrbit::new(theta, sp.d);
    let (lp, _, _) = orbit_log_product(sp, &mut base, x, p);
    let bound = -c.kappa.ln() + p as f64 * c.sigma1.ln();
    Ok(Lemma24bReport {
        dist,
        p,
        big_n: c.big_n,
        log_product: lp,
        log_bound: bound,
        holds: lp >= bound,
        p_within_n: p <= c.big_n,
    })
}

/// Product over `k` steps of an orbit avoiding `J(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma25Report {
    pub k: u32,
    pub log_product: f64,
    /// `ln` of the largest `C2` with `product >= C2 alpha^((D-1)/D) sigma2^k`.
    pub log_c2_general: f64,
    /// `ln` of the largest `C2` with `product >= C2 sigma2^k`, when `|x_k - x~| < delta1`.
    pub log_c2_near: Option<f64>,
    /// `product - k ln sigma0` when every `x_j`, `j < k`, stays outside the inner interval.
    pub log_sigma0_margin: Option<f64>,
}

impl Lemma25Report {
    /// Largest feasible `ln C2` for this orbit.
    pub fn log_c2(&self) -> f64 {
        match self.log_c2_near {
            Some(v) => v.min(self.log_c2_general),
            None => self.log_c2_general,
        }
    }

    pub fn holds_with(&self, c2: f64) -> bool {
        self.log_c2() >= c2.ln()
    }
}

pub fn verify_lemma25<S: DigitSource>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    theta: S,
    x: f64,
    k: u32,
) -> Result<Lemma25Report> {
    let mut base = BaseOrbit::new(theta, sp.d);
    let (lp, _, dists) = orbit_log_product(sp, &mut base, x, k);
    let r0 = c.j_radius(0.0);
    if let Some(j) = dists[..k as usize].iter().position(|&e| e < r0) {
        return Err(Error::PreconditionViolated(format!(
            "|x_{j} - x~| = {:e} below alpha^(1/D) = {r0:e}",
            dists[j]
        )));
    }
    let d = c.order as f64;
    let ls = c.sigma2.ln();
    let general = lp - ((d - 1.0) / d * c.alpha.ln() + k as f64 * ls);
    let near = (dists[k as usize] < c.delta1).then_some(lp - k as f64 * ls);
    let far = dists[..k as usize].iter().all(|&e| e >= c.delta1);
    Ok(Lemma25Report {
        k,
        log_product: lp,
        log_c2_general: general,
        log_c2_near: near,
        log_sigma0_margin: far.then_some(lp - k as f64 * c.sigma0.ln()),
    })
}

/// Largest observed `|x_l - q~| / max(|x - x~|^D, alpha)` over the given starting points.
pub fn measure_ccal<S: DigitSource>(
    sp: &SkewProduct,
    c: &ExpansionConstants,
    points: impl IntoIterator<Item = (S, f64)>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (theta, x) in points {
        let dist = fiber_dist(x, c.critical_point, sp.is_circle());
        let mut base = BaseOrbit::new(theta, sp.d);
        let (_, y, _) = orbit_log_product(sp, &mut base, x, c.landing);
        let d0 = fiber_dist(y, c.q_tilde, sp.is_circle());
        worst = worst.max(d0 / dist.powi(c.order as i32).max(c.alpha));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{PrefixDigits, RandomDigits, sample_rng};
    use crate::constants::{derive_constants, ConstantOverrides};
    use crate::maps::{build_map, MapSpec};

    fn setup() -> (SkewProduct, ExpansionConstants) {
        let m = build_map(&MapSpec::odd(3)).unwrap();
        let c = derive_constants(&m, 16, 1e-6, &ConstantOverrides::default()).unwrap();
        (SkewProduct::new(m, 16, 1e-6).unwrap(), c)
    }

    #[test]
    fn critical_start_is_vacuous() {
        let (sp, c) = setup();
        let r = verify_lemma24a(&sp, &c, RandomDigits::new(sample_rng(1, 0), 16), 0.5).unwrap();
        assert!(r.holds);
        assert_eq!(r.log_product, f64::NEG_INFINITY);
        let far = 0.5 + 3.0 * c.j_radius(0.0);
        assert!(matches!(
            verify_lemma24a(&sp, &c, PrefixDigits::new(vec![]), far),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn lemma24b_regime_edges() {
        let (sp, c) = setup();
        let lo = c.j_radius(0.0);
        let r = verify_lemma24b(&sp, &c, RandomDigits::new(sample_rng(2, 0), 16), 0.5 + lo).unwrap();
        assert!(r.p_within_n);
        let r2 = verify_lemma24b(&sp, &c, RandomDigits::new(sample_rng(2, 0), 16), 0.5 + 0.0999).unwrap();
        assert!(r2.p <= r.p);
        assert!(matches!(
            verify_lemma24b(&sp, &c, PrefixDigits::new(vec![]), 0.5 + 0.2),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn lemma25_fixed_point_and_empty_product() {
        let (sp, c) = setup();
        let r = verify_lemma25(&sp, &c, PrefixDigits::new(vec![]), 0.0, 50).unwrap();
        assert_eq!(r.log_product, 50.0 * std::f64::consts::LN_2);
        assert!(r.log_sigma0_margin.unwrap() > 0.0);
        let r0 = verify_lemma25(&sp, &c, PrefixDigits::new(vec![]), 0.3, 0).unwrap();
        assert_eq!(r0.log_product, 0.0);
        assert!(r0.holds_with(1.0));
        assert!(matches!(
            verify_lemma25(&sp, &c, PrefixDigits::new(vec![]), 0.5, 3),
            Err(Error::PreconditionViolated(_))
        ));
    }
}
