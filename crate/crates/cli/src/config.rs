//! Flat `key = value` experiment configuration.

use crate::error::CliError;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::PathBuf;
use viana_lab::maps::{MapSpec, Parity};
use viana_lab::stats::StripScaling;

/// Keys accepted in config files and as `--key value` flags.
pub const KEYS: &[&str] = &[
    "parity",
    "order",
    "inner_width",
    "outer_width",
    "a0",
    "d",
    "alpha",
    "seed",
    "grid_size",
    "sample_count",
    "curves",
    "elements",
    "ensemble",
    "n_values",
    "r_values",
    "steps",
    "count",
    "scaling",
    "sweep_orders",
    "sweep_d",
    "sweep_alpha",
    "sweep_n",
    "out",
    "workers",
];

/// Keys that do not change results and are left out of the hash.
const UNHASHED: &[&str] = &["out", "workers"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub parity: Option<Parity>,
    pub order: u32,
    pub inner_width: Option<f64>,
    pub outer_width: Option<f64>,
    pub a0: Option<f64>,
    pub d: u64,
    pub alpha: f64,
    pub seed: u64,
    pub grid_size: usize,
    pub sample_count: usize,
    pub curves: usize,
    pub elements: usize,
    /// Random curves in the deep-return ensemble, four base points each.
    pub ensemble: usize,
    pub n_values: Vec<u64>,
    /// Empty means `r0, r0 + 1, ..., r0 + 6`.
    pub r_values: Vec<f64>,
    pub steps: u64,
    pub count: usize,
    pub scaling: StripScaling,
    pub sweep_orders: Vec<u32>,
    pub sweep_d: Vec<u64>,
    pub sweep_alpha: Vec<f64>,
    pub sweep_n: Vec<u64>,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            parity: None,
            order: 3,
            inner_width: None,
            outer_width: None,
            a0: None,
            d: 16,
            alpha: 1e-6,
            seed: 1,
            grid_size: 1 << 14,
            sample_count: 1000,
            curves: 20,
            elements: 200,
            ensemble: 1 << 17,
            n_values: vec![400, 900, 1600, 2500],
            r_values: vec![],
            steps: 100_000,
            count: 1000,
            scaling: StripScaling::Linear,
            sweep_orders: vec![3, 5],
            sweep_d: vec![16],
            sweep_alpha: vec![1e-4, 1e-6],
            sweep_n: vec![10_000],
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| CliError::config(format!("{key}: cannot parse '{s}'"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse::<T>()
        .map_err(|_| CliError::config(format!("{key}: cannot parse '{}'", v.trim())))
}

impl ExperimentConfig {
    /// Set one key from its text value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "parity" => {
                self.parity = Some(match v.trim() {
                    "odd" => Parity::Odd,
                    "even" => Parity::Even,
                    o => return Err(CliError::config(format!("parity: expected odd or even, got '{o}'"))),
                })
            }
            "order" => self.order = one(key, v)?,
            "inner_width" => self.inner_width = Some(one(key, v)?),
            "outer_width" => self.outer_width = Some(one(key, v)?),
            "a0" => self.a0 = Some(one(key, v)?),
            "d" => self.d = one(key, v)?,
            "alpha" => self.alpha = one(key, v)?,
            "seed" => self.seed = one(key, v)?,
            "grid_size" => self.grid_size = one(key, v)?,
            "sample_count" => self.sample_count = one(key, v)?,
            "curves" => self.curves = one(key, v)?,
            "elements" => self.elements = one(key, v)?,
            "ensemble" => self.ensemble = one(key, v)?,
            "n_values" => self.n_values = list(key, v)?,
            "r_values" => self.r_values = list(key, v)?,
            "steps" => self.steps = one(key, v)?,
            "count" => self.count = one(key, v)?,
            "scaling" => {
                self.scaling = match v.trim() {
                    "linear" => StripScaling::Linear,
                    "squared" => StripScaling::Squared,
                    o => return Err(CliError::config(format!("scaling: expected linear or squared, got '{o}'"))),
                }
            }
            "sweep_orders" => self.sweep_orders = list(key, v)?,
            "sweep_d" => self.sweep_d = list(key, v)?,
            "sweep_alpha" => self.sweep_alpha = list(key, v)?,
            "sweep_n" => self.sweep_n = list(key, v)?,
            "out" => self.out = PathBuf::from(v.trim()),
            "workers" => self.workers = Some(one(key, v)?),
            _ => return Err(CliError::config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected key = value", i + 1)))?;
            c.set(k.trim(), v)
                .map_err(|e| CliError::config(format!("line {}: {}", i + 1, e.message)))?;
        }
        Ok(c)
    }

    pub fn map_spec(&self) -> MapSpec {
        let parity = self.parity.unwrap_or(if self.order % 2 == 1 { Parity::Odd } else { Parity::Even });
        let mut s = match parity {
            Parity::Odd => MapSpec::odd(self.order),
            Parity::Even => MapSpec::even(self.order),
        };
        if let Some(w) = self.inner_width {
            s.inner_half_width = w;
        }
        if let Some(o) = self.outer_width {
            s.outer_half_width = o;
        }
        s.a0 = self.a0;
        s
    }

    /// Checks that need no construction.
    pub fn validate(&self) -> Result<(), CliError> {
        self.map_spec()
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        let fail = |m: String| Err(CliError::config(m));
        if self.d < 16 {
            return fail(format!("d = {} must be >= 16", self.d));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha = {} must be positive", self.alpha));
        }
        if self.grid_size < 2 {
            return fail("grid_size must be at least 2".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be positive".into());
        }
        if self.n_values.iter().any(|&n| n < 4) {
            return fail("n_values must be >= 4".into());
        }
        for &o in &self.sweep_orders {
            MapSpec::for_order(o).validate().map_err(|e| CliError::config(format!("sweep_orders: {e}")))?;
        }
        Ok(())
    }

    /// Canonical `key = value` listing.
    pub fn canonical(&self) -> BTreeMap<&'static str, String> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let spec = self.map_spec();
        let mut m = BTreeMap::new();
        m.insert("parity", format!("{:?}", spec.parity).to_lowercase());
        m.insert("order", self.order.to_string());
        m.insert("inner_width", spec.inner_half_width.to_string());
        m.insert("outer_width", spec.outer_half_width.to_string());
        m.insert("a0", self.a0.map_or("auto".into(), |v| v.to_string()));
        m.insert("d", self.d.to_string());
        m.insert("alpha", self.alpha.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("grid_size", self.grid_size.to_string());
        m.insert("sample_count", self.sample_count.to_string());
        m.insert("curves", self.curves.to_string());
        m.insert("elements", self.elements.to_string());
        m.insert("ensemble", self.ensemble.to_string());
        m.insert("n_values", join(&self.n_values));
        m.insert("r_values", join(&self.r_values));
        m.insert("steps", self.steps.to_string());
        m.insert("count", self.count.to_string());
        m.insert("scaling", format!("{:?}", self.scaling).to_lowercase());
        m.insert("sweep_orders", join(&self.sweep_orders));
        m.insert("sweep_d", join(&self.sweep_d));
        m.insert("sweep_alpha", join(&self.sweep_alpha));
        m.insert("sweep_n", join(&self.sweep_n));
        m.insert("out", self.out.display().to_string());
        m.insert("workers", self.workers.map_or("auto".into(), |w| w.to_string()));
        m
    }

    /// SHA-256 of the canonical listing without `out` and `workers`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            if !UNHASHED.contains(&k) {
                h.update(format!("{k} = {v}\n").as_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Worker count from the config, then `VIANA_LAB_WORKERS`, then 1.
    pub fn resolved_workers(&self) -> Result<usize, CliError> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var("VIANA_LAB_WORKERS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(CliError::config(format!("VIANA_LAB_WORKERS: cannot parse '{v}'"))),
            },
            Err(_) => Ok(1),
        }
    }
}
