use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Element `[k / d^n, (k + 1) / d^n)` of the level-`n` Markov partition of `theta -> d theta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionElement {
    pub d: u64,
    pub level: u32,
    pub index: u64,
}

impl PartitionElement {
    pub fn new(d: u64, level: u32, index: u64) -> Result<Self> {
        if level == 0 || d < 2 {
            return Err(Error::IndexOutOfRange(format!("level {level} with d = {d}")));
        }
        let count = d
            .checked_pow(level)
            .ok_or_else(|| Error::IndexOutOfRange(format!("d^n overflows for d = {d}, n = {level}")))?;
        if index >= count {
            return Err(Error::IndexOutOfRange(format!("index {index} >= d^n = {count}")));
        }
        Ok(PartitionElement { d, level, index })
    }

    /// `d^level`.
    pub fn count(&self) -> u64 {
        self.d.pow(self.level)
    }

    /// Exact endpoints as `(k, k + 1, d^n)`.
    pub fn rational(&self) -> (u64, u64, u64) {
        (self.index, self.index + 1, self.count())
    }

    pub fn interval(&self) -> (f64, f64) {
        let n = self.count() as f64;
        (self.index as f64 / n, (self.index + 1) as f64 / n)
    }

    /// Base point in this element whose image under `g^n` is `phi`.
    pub fn branch_point(&self, phi: f64) -> f64 {
        (phi + self.index as f64) / self.count() as f64
    }

    /// Leading base-`d` digits, most significant first.
    pub fn digits(&self) -> Vec<u64> {
        let mut v = vec![0; self.level as usize];
        let mut k = self.index;
        for slot in v.iter_mut().rev() {
            *slot = k % self.d;
            k /= self.d;
        }
        v
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PartitionElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

/// The `d` pre-images `(theta' + j) / d`.
pub fn preimage_branches(theta_prime: f64, d: u64) -> Vec<f64> {
    (0..d).map(|j| (theta_prime + j as f64) / d as f64).collect()
}
