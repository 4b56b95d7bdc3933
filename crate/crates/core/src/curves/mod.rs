//! Admissible curves `theta -> X(theta)` with `|X'|, |X''| <= alpha`, Markov partition
//! elements of the base map, and curve iteration by the exact derivative recursion.

mod iterate;
mod measure;
mod partition;

pub use iterate::{iterate_over_element, iterate_once, push_forward};
pub use measure::{
    branch_separation, oscillation, spread, strip_measure, BranchSeparation, FiberInterval,
    OneStepImage,
};
pub use partition::{preimage_branches, PartitionElement};

use crate::base::sample_rng;
use crate::error::{Error, Result};
use crate::hermite::{hermite_cell, Jet};
use crate::skew::FiberDomain;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Anything that can report `(X, X', X'')` at a base point.
pub trait CurveSource: Sync {
    fn jet(&self, theta: f64) -> Jet;
}

/// Analytic curve generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveKind {
    Constant { x0: f64 },
    /// `x0 + amplitude sin(2 pi (theta + phase))`.
    Sine { x0: f64, amplitude: f64, phase: f64 },
    /// Random trigonometric polynomial with `|X''| <= scale * alpha`.
    Random { x0: f64, seed: u64, terms: u32, scale: f64 },
}

/// `x0 + sum a_k sin(2 pi k theta) + b_k cos(2 pi k theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigCurve {
    pub x0: f64,
    pub terms: Vec<(u32, f64, f64)>,
}

impl TrigCurve {
    pub fn constant(x0: f64) -> Self {
        TrigCurve { x0, terms: vec![] }
    }

    /// Sup bounds of `|X'|` and `|X''|` from the coefficients.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        self.terms.iter().fold((0.0, 0.0), |(b1, b2), &(k, a, b)| {
            let w = TAU * k as f64;
            let r = a.hypot(b);
            (b1 + w * r, b2 + w * w * r)
        })
    }

    /// Random curve with `|X''| <= scale * alpha` drawn from `rng`.
    pub fn random<R: Rng>(rng: &mut R, x0: f64, terms: u32, scale: f64, alpha: f64) -> Self {
        let mut t: Vec<(u32, f64, f64)> = (1..=terms.max(1))
            .map(|k| {
                let s = 1.0 / (k as f64).powi(3);
                (k, rng.random_range(-1.0..1.0) * s, rng.random_range(-1.0..1.0) * s)
            })
            .collect();
        let mut c = TrigCurve { x0, terms: t.clone() };
        let (_, b2) = c.derivative_bounds();
        if b2 > 0.0 {
            let f = scale * alpha / b2;
            for term in &mut t {
                term.1 *= f;
                term.2 *= f;
            }
        }
        c.terms = t;
        c
    }
}

impl CurveSource for TrigCurve {
    #[inline]
    fn jet(&self, theta: f64) -> Jet {
        let (mut v, mut d1, mut d2) = (self.x0, 0.0, 0.0);
        for &(k, a, b) in &self.terms {
            let w = TAU * k as f64;
            let (s, c) = (w * theta).sin_cos();
            v += a * s + b * c;
            d1 += w * (a * c - b * s);
            d2 -= w * w * (a * s + b * c);
        }
        Jet::new(v, d1, d2)
    }
}

impl CurveKind {
    /// Analytic generator for this kind.
    pub fn generator(&self, alpha: f64) -> Result<TrigCurve> {
        let c = match *self {
            CurveKind::Constant { x0 } => TrigCurve::constant(x0),
            CurveKind::Sine { x0, amplitude, phase } => {
                let (s, c) = (TAU * phase).sin_cos();
                TrigCurve {
                    x0,
                    terms: vec![(1, amplitude * c, amplitude * s)],
                }
            }
            CurveKind::Random { x0, seed, terms, scale } => {
                let mut rng = sample_rng(seed, u64::MAX);
                TrigCurve::random(&mut rng, x0, terms, scale, alpha)
            }
        };
        if !c.x0.is_finite() {
            return Err(Error::NotAdmissible(format!("base level {} not finite", c.x0)));
        }
        Ok(c)
    }
}

/// Sampled curve on a uniform periodic grid of `theta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleCurve {
    pub alpha: f64,
    pub domain: FiberDomain,
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
    pub ddx: Vec<f64>,
}

/// Relative slack on the derivative bounds for rounding.
const ADMISSIBLE_SLACK: f64 = 1e-12;

impl AdmissibleCurve {
    /// Samples without any check; circle values are unwrapped into a continuous lift.
    pub fn from_samples_unchecked(
        mut x: Vec<f64>,
        dx: Vec<f64>,
        ddx: Vec<f64>,
        alpha: f64,
        domain: FiberDomain,
    ) -> Self {
        if domain == FiberDomain::Circle {
            for i in 1..x.len() {
                let prev = x[i - 1];
                x[i] -= (x[i] - prev).round();
            }
        }
        AdmissibleCurve {
            alpha,
            domain,
            x,
            dx,
            ddx,
        }
    }

    pub fn grid_size(&self) -> usize {
        self.x.len()
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 / self.x.len() as f64
    }

    pub fn max_abs_d1(&self) -> f64 {
        self.dx.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_d2(&self) -> f64 {
        self.ddx.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// First failed admissibility condition, if any.
    pub fn defect(&self) -> Option<String> {
        let n = self.x.len();
        if n < 2 || !n.is_power_of_two() {
            return Some(format!("grid size {n} is not a power of two >= 2"));
        }
        let bound = self.alpha * (1.0 + ADMISSIBLE_SLACK);
        if self.x.iter().chain(&self.dx).chain(&self.ddx).any(|v| !v.is_finite()) {
            return Some("non-finite sample".into());
        }
        let (m1, m2) = (self.max_abs_d1(), self.max_abs_d2());
        if m1 > bound {
            return Some(format!("max |X'| = {m1:e} > alpha = {:e}", self.alpha));
        }
        if m2 > bound {
            return Some(format!("max |X''| = {m2:e} > alpha = {:e}", self.alpha));
        }
        if let FiberDomain::Interval { lo, hi } = self.domain {
            if self.x.iter().any(|&v| v < lo || v > hi) {
                return Some(format!("values leave the domain [{lo}, {hi}]"));
            }
        }
        None
    }

    pub fn is_admissible(&self) -> bool {
        self.defect().is_none()
    }

    pub fn from_samples(
        x: Vec<f64>,
        dx: Vec<f64>,
        ddx: Vec<f64>,
        alpha: f64,
        domain: FiberDomain,
    ) -> Result<Self> {
        let c = Self::from_samples_unchecked(x, dx, ddx, alpha, domain);
        match c.defect() {
            None => Ok(c),
            Some(m) => Err(Error::NotAdmissible(m)),
        }
    }

    /// Sample a source on `grid` points.
    pub fn sample<S: CurveSource + ?Sized>(
        src: &S,
        alpha: f64,
        grid: usize,
        domain: FiberDomain,
    ) -> Result<Self> {
        let (mut x, mut dx, mut ddx) = (
            Vec::with_capacity(grid),
            Vec::with_capacity(grid),
            Vec::with_capacity(grid),
        );
        for i in 0..grid {
            let j = src.jet(i as f64 / grid as f64);
            x.push(j.value);
            dx.push(j.d1);
            ddx.push(j.d2);
        }
        let c = Self::from_samples(x, dx, ddx, alpha, domain)?;
        let end = src.jet(1.0).value;
        let gap = (end - src.jet(0.0).value).abs();
        if gap > 1e-9 {
            return Err(Error::NotAdmissible(format!("curve does not close up (jump {gap:e})")));
        }
        Ok(c)
    }

    #[inline]
    fn node(&self, i: usize) -> Jet {
        Jet::new(self.x[i], self.dx[i], self.ddx[i])
    }
}

impl CurveSource for AdmissibleCurve {
    /// Quintic Hermite interpolation between samples; the last cell uses the Taylor
    /// polynomial of the last sample since iterated curves need not close up.
    fn jet(&self, theta: f64) -> Jet {
        let n = self.x.len();
        let t = crate::maps::reduce_unit(theta) * n as f64;
        let i = (t.floor() as usize).min(n - 1);
        let frac = t - i as f64;
        if i + 1 == n {
            let s = frac / n as f64;
            let a = self.node(i);
            return Jet::new(a.value + s * a.d1 + 0.5 * s * s * a.d2, a.d1 + s * a.d2, a.d2);
        }
        hermite_cell(self.node(i), self.node(i + 1), 1.0 / n as f64, frac)
    }
}

/// Sampled admissible curve of the given kind.
pub fn make_curve(kind: &CurveKind, alpha: f64, grid: usize, domain: FiberDomain) -> Result<AdmissibleCurve> {
    let g = kind.generator(alpha)?;
    AdmissibleCurve::sample(&g, alpha, grid, domain)
}
