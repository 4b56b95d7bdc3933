//! Derived constants with their mutual constraints made explicit.

use crate::error::{Error, Result};
use crate::maps::{DegenerateMap, Parity};
use serde::{Deserialize, Serialize};

/// Optional replacements for derived values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantOverrides {
    pub rho2: Option<f64>,
    /// `rho2 = rho + rho2_offset` unless `rho2` is given.
    pub rho2_offset: f64,
    pub rho1: Option<f64>,
    pub eta: Option<f64>,
    pub kappa: f64,
    pub sigma0: Option<f64>,
    pub ccal: f64,
    pub delta0: Option<f64>,
    pub max_delta_ratio: f64,
    pub gamma2: Option<f64>,
}

impl Default for ConstantOverrides {
    fn default() -> Self {
        ConstantOverrides {
            rho2: None,
            rho2_offset: 1e-3,
            rho1: None,
            eta: None,
            kappa: 0.5,
            sigma0: None,
            ccal: 1.0,
            delta0: None,
            max_delta_ratio: 0.5,
            gamma2: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub order: u32,
    pub d: u64,
    pub alpha: f64,
    pub critical_point: f64,
    pub q_tilde: f64,
    pub rho: f64,
    pub landing: u32,
    pub delta0: f64,
    pub delta1: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub eta: f64,
    pub kappa: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub big_m: u32,
    pub big_n: u32,
    pub big_k: f64,
    pub gamma1: f64,
    pub beta_regime: f64,
    pub beta_final: f64,
    pub r0: f64,
    pub gamma2: f64,
    pub c: f64,
    pub ccal: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub cstar: f64,
    pub max_delta_ratio: f64,
}

/// Largest `M` with `32^M alpha < 1`.
pub fn compute_m(alpha: f64) -> Result<u32> {
    if !(alpha > 0.0) || alpha * 32.0 >= 1.0 {
        return Err(Error::AlphaTooLarge { alpha });
    }
    let mut m = 0u32;
    // powers of two scale exactly
    while alpha * 32f64.powi(m as i32 + 1) < 1.0 {
        m += 1;
    }
    Ok(m)
}

/// `l + max(0, ceil(ln(delta0 / (ccal * scale)) / ln rho2))`.
fn escape_time(landing: u32, delta0: f64, ccal: f64, scale: f64, rho2: f64) -> u32 {
    let t = (delta0 / (ccal * scale)).ln() / rho2.ln();
    // guard against t = 14.000000000000002 style rounding of exact integers
    let t = if (t - t.round()).abs() < 1e-12 { t.round() } else { t };
    landing + t.ceil().max(0.0) as u32
}

/// Orbit-length bound `N(alpha)`.
pub fn compute_n(c: &ExpansionConstants, alpha: f64) -> u32 {
    escape_time(c.landing, c.delta0, c.ccal, alpha, c.rho2)
}

/// Escape time `p(x)` for `alpha^(1/D) <= |x - x~| < delta1`.
pub fn compute_p(c: &ExpansionConstants, x: f64, x_tilde: f64, order: u32) -> Result<u32> {
    let e = (x - x_tilde).abs();
    let lo = c.alpha.powf(1.0 / order as f64);
    if !(e >= lo && e < c.delta1) {
        return Err(Error::PreconditionViolated(format!(
            "|x - x~| = {e:e} outside [alpha^(1/D), delta1) = [{lo:e}, {:e})",
            c.delta1
        )));
    }
    Ok(p_of_distance(c, e, order))
}

/// `p` for a distance without the regime check.
pub fn p_of_distance(c: &ExpansionConstants, dist: f64, order: u32) -> u32 {
    escape_time(c.landing, c.delta0, c.ccal, dist.powi(order as i32), c.rho2)
}

/// Radius `alpha^(1/D) e^(-r)` of `J(r)`.
pub fn j_radius(alpha: f64, order: u32, r: f64) -> f64 {
    alpha.powf(1.0 / order as f64) * (-r).exp()
}

impl ExpansionConstants {
    pub fn j_radius(&self, r: f64) -> f64 {
        j_radius(self.alpha, self.order, r)
    }

    /// `K = 400 e^(2 (D-1)^2)`.
    pub fn k_of_order(order: u32) -> f64 {
        let dm = order as f64 - 1.0;
        400.0 * (2.0 * dm * dm).exp()
    }

    /// Named inequalities that fail.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut chk = |ok: bool, name: &str, detail: String| {
            if !ok {
                v.push((name.to_string(), detail));
            }
        };
        let dd = self.order as f64;
        chk(
            self.eta > 0.0 && self.eta <= 1.0 / 3.0,
            "0 < eta <= 1/3",
            format!("eta = {}", self.eta),
        );
        let lower = self.rho2.powf(1.0 - self.eta / dd);
        chk(
            self.rho1 > lower,
            "rho1 > rho2^(1 - eta/D)",
            format!("rho1 = {}, rho2^(1-eta/D) = {lower}", self.rho1),
        );
        chk(
            self.rho1 < self.rho && self.rho < self.rho2,
            "rho1 < rho < rho2",
            format!("{} < {} < {}", self.rho1, self.rho, self.rho2),
        );
        chk(
            self.big_m >= 1,
            "32^M alpha < 1",
            format!("M = {}", self.big_m),
        );
        chk(
            self.big_m < self.big_n,
            "M < N",
            format!("M = {}, N = {}", self.big_m, self.big_n),
        );
        chk(
            self.delta0 > 0.0 && self.delta1 / self.delta0 <= self.max_delta_ratio,
            "delta1/delta0 <= max ratio",
            format!(
                "delta1 = {}, delta0 = {}, ratio bound {}",
                self.delta1, self.delta0, self.max_delta_ratio
            ),
        );
        chk(self.sigma2 > 1.0, "sigma2 > 1", format!("sigma2 = {}", self.sigma2));
        chk(
            self.kappa > 0.0 && self.kappa < 1.0,
            "0 < kappa < 1",
            format!("kappa = {}", self.kappa),
        );
        chk(self.r0 > 0.0, "r0 > 0", format!("r0 = {}", self.r0));
        chk(self.c > 0.0, "c > 0", format!("c = {}", self.c));
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((name, detail)) => Err(Error::ConstraintViolated { name, detail }),
        }
    }

    /// Recompute the quantities that depend on `ccal`.
    pub fn with_ccal(&self, ccal: f64) -> Self {
        let mut c = self.clone();
        c.ccal = ccal;
        c.big_n = compute_n(&c, c.alpha);
        c
    }
}

/// Largest `delta` with `sup_J |h'| / inf_J |h'| <= ratio` on `J = (q - delta, q + delta)`,
/// capped at `cap`.
fn max_delta(map: &DegenerateMap, q: f64, ratio: f64, cap: f64) -> f64 {
    let ok = |delta: f64| {
        let n = 512;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..=n {
            let x = q - delta + 2.0 * delta * i as f64 / n as f64;
            let s = map.derivative(x).abs();
            lo = lo.min(s);
            hi = hi.max(s);
        }
        lo > 0.0 && hi / lo <= ratio
    };
    if ok(cap) {
        return cap;
    }
    let (mut a, mut b) = (0.0, cap);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if ok(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Constants without invariant validation.
pub fn derive_constants_unchecked(
    map: &DegenerateMap,
    d: u64,
    alpha: f64,
    ov: &ConstantOverrides,
) -> Result<ExpansionConstants> {
    let reference = map
        .reference
        .as_ref()
        .ok_or_else(|| Error::NoReferenceOrbit("map has no reference orbit".into()))?;
    let big_m = compute_m(alpha)?;
    let order = map.order();
    let dd = order as f64;
    let rho = reference.rho;
    let rho2 = ov.rho2.unwrap_or(rho + ov.rho2_offset);
    let sigma0 = ov
        .sigma0
        .unwrap_or(map.diagnostics.min_abs_d1_outside_inner * (1.0 - 1e-3));
    let sigma1 = rho2.powf(1.0 / (dd + 1.0));
    let sigma2 = sigma0.min(sigma1);
    let eta = match ov.eta {
        Some(e) => e,
        None => {
            let mut e = 0.0;
            for _ in 0..100 {
                let next = sigma2.ln() / (4.0 * 32f64.ln());
                if (next - e).abs() < 1e-16 {
                    e = next;
                    break;
                }
                e = next;
            }
            e
        }
    };
    let rho_lo = rho2.powf(1.0 - eta / dd);
    let rho1 = ov.rho1.unwrap_or(0.5 * (rho_lo + rho));
    let delta1 = map.spec.inner_half_width;
    let delta0 = match ov.delta0 {
        Some(v) => v,
        None => match map.parity() {
            Parity::Odd => 0.5 - map.spec.outer_half_width,
            Parity::Even => {
                let cap = reference.q - delta1;
                max_delta(map, reference.q, rho2 / rho1, cap.max(0.0))
            }
        },
    };
    let big_k = ExpansionConstants::k_of_order(order);
    let dm = dd - 1.0;
    let gamma1 = 2.0 * dm * dm * eta / (8.0 * big_k).ln();
    let r0 = (1.0 / dm) * (1.0 / dd - 2.0 * eta / dm) * (1.0 / alpha).ln();
    let mut c = ExpansionConstants {
        order,
        d,
        alpha,
        critical_point: map.critical_point(),
        q_tilde: reference.q,
        rho,
        landing: reference.landing,
        delta0,
        delta1,
        rho1,
        rho2,
        eta,
        kappa: ov.kappa,
        sigma0,
        sigma1,
        sigma2,
        big_m,
        big_n: 0,
        big_k,
        gamma1,
        beta_regime: eta / (5.0 * dm),
        beta_final: gamma1 / 5.0 * (100.0f64 / 99.0).ln(),
        r0,
        gamma2: 0.0,
        c: 0.0,
        ccal: ov.ccal,
        c1: None,
        c2: None,
        c3: None,
        cstar: 1.0,
        max_delta_ratio: ov.max_delta_ratio,
    };
    c.big_n = compute_n(&c, alpha);
    c.gamma2 = ov
        .gamma2
        .unwrap_or(eta * (1.0 / alpha).ln() / c.big_n as f64);
    c.c = c.gamma2.min(sigma2.ln()) / (dd + 1.0);
    Ok(c)
}

/// Derive and validate all constants.
pub fn derive_constants(
    map: &DegenerateMap,
    d: u64,
    alpha: f64,
    ov: &ConstantOverrides,
) -> Result<ExpansionConstants> {
    if !(alpha > 0.0 && alpha < 1.0 / 32.0) {
        return Err(Error::AlphaTooLarge { alpha });
    }
    let c = derive_constants_unchecked(map, d, alpha, ov)?;
    c.validate()?;
    Ok(c)
}
