//! Base points as base-`d` digit streams.
//!
//! The base map `theta -> d theta mod 1` shifts digits, so iterating a double would lose
//! all information after about `53 / log2 d` steps. Base points are instead infinite digit
//! streams; a window of the next `K` digits gives `theta_j` at full double precision.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent generator for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub trait DigitSource {
    fn next_digit(&mut self) -> u64;
}

/// Uniform random digits.
pub struct RandomDigits {
    rng: ChaCha8Rng,
    d: u64,
    bits: u32,
    buf: u64,
    left: u32,
}

impl RandomDigits {
    pub fn new(rng: ChaCha8Rng, d: u64) -> Self {
        let bits = if d.is_power_of_two() { d.trailing_zeros() } else { 0 };
        RandomDigits {
            rng,
            d,
            bits,
            buf: 0,
            left: 0,
        }
    }
}

impl DigitSource for RandomDigits {
    #[inline]
    fn next_digit(&mut self) -> u64 {
        if self.bits == 0 {
            return self.rng.random_range(0..self.d);
        }
        if self.left < self.bits {
            self.buf = self.rng.next_u64();
            self.left = 64;
        }
        let v = self.buf & (self.d - 1);
        self.buf >>= self.bits;
        self.left -= self.bits;
        v
    }
}

/// Digits of `(stratum + u) / strata` where `u` has random digits.
pub struct JitteredDigits {
    inner: RandomDigits,
    carry: u64,
    strata: u64,
    d: u64,
}

impl JitteredDigits {
    pub fn new(stratum: u64, strata: u64, rng: ChaCha8Rng, d: u64) -> Self {
        assert!(stratum < strata && strata.checked_mul(d).is_some());
        JitteredDigits {
            inner: RandomDigits::new(rng, d),
            carry: stratum,
            strata,
            d,
        }
    }
}

impl DigitSource for JitteredDigits {
    #[inline]
    fn next_digit(&mut self) -> u64 {
        // long division of (carry + u) / strata, one digit of u at a time
        let num = self.carry * self.d + self.inner.next_digit();
        self.carry = num % self.strata;
        num / self.strata
    }
}

/// Digits of a given number in `[0, 1)`, followed by zeros once it is exhausted.
pub struct ExpansionDigits {
    frac: f64,
    d: f64,
}

impl ExpansionDigits {
    pub fn new(theta: f64, d: u64) -> Self {
        ExpansionDigits {
            frac: crate::maps::reduce_unit(theta),
            d: d as f64,
        }
    }
}

impl DigitSource for ExpansionDigits {
    fn next_digit(&mut self) -> u64 {
        let y = self.frac * self.d;
        let k = y.floor();
        self.frac = y - k;
        (k as u64).min(self.d as u64 - 1)
    }
}

/// Fixed finite digit prefix followed by zeros.
pub struct PrefixDigits {
    digits: Vec<u64>,
    pos: usize,
}

impl PrefixDigits {
    pub fn new(digits: Vec<u64>) -> Self {
        PrefixDigits { digits, pos: 0 }
    }
}

impl DigitSource for PrefixDigits {
    fn next_digit(&mut self) -> u64 {
        let v = self.digits.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        v
    }
}

/// Orbit of the base map read off a digit stream.
pub struct BaseOrbit<S: DigitSource> {
    src: S,
    d: u64,
    window: u64,
    top: u64,
    scale: f64,
}

/// Largest `K` with `d^K <= 2^62`.
fn window_len(d: u64) -> (u32, u64) {
    let mut k = 0;
    let mut p: u64 = 1;
    while let Some(n) = p.checked_mul(d) {
        if n > 1 << 62 {
            break;
        }
        p = n;
        k += 1;
    }
    (k, p)
}

const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

impl<S: DigitSource> BaseOrbit<S> {
    pub fn new(mut src: S, d: u64) -> Self {
        let (k, p) = window_len(d);
        let mut window = 0u64;
        for _ in 0..k {
            window = window * d + src.next_digit();
        }
        BaseOrbit {
            src,
            d,
            window,
            top: p / d,
            scale: p as f64,
        }
    }

    /// Current base point.
    #[inline]
    pub fn theta(&self) -> f64 {
        let t = self.window as f64 / self.scale;
        if t >= 1.0 {
            BELOW_ONE
        } else {
            t
        }
    }

    /// Leading digit of the current point.
    pub fn leading_digit(&self) -> u64 {
        self.window / self.top
    }

    /// Move to the image under `theta -> d theta`.
    #[inline]
    pub fn advance(&mut self) {
        self.window = (self.window % self.top) * self.d + self.src.next_digit();
    }

    pub fn base(&self) -> u64 {
        self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stream_is_the_fixed_point() {
        let mut o = BaseOrbit::new(PrefixDigits::new(vec![]), 16);
        for _ in 0..100 {
            assert_eq!(o.theta(), 0.0);
            o.advance();
        }
    }

    #[test]
    fn shift_of_digits_matches_exact_arithmetic() {
        // theta = 0.1 in binary-exact form, d = 16: compare with exact rational arithmetic
        let digits: Vec<u64> = (0..40).map(|i| (i * 7 + 3) % 16).collect();
        let mut o = BaseOrbit::new(PrefixDigits::new(digits.clone()), 16);
        for j in 0..20 {
            // oracle: sum of digits[j..j+13] * 16^-(i+1) using u128 exact accumulation
            let mut num: u128 = 0;
            for i in 0..15 {
                num = num * 16 + digits[j + i] as u128;
            }
            let oracle = num as f64 / 16f64.powi(15);
            assert!((o.theta() - oracle).abs() <= f64::EPSILON * oracle);
            o.advance();
        }
    }

    #[test]
    fn expansion_digits_recover_dyadic() {
        let mut e = ExpansionDigits::new(0.6875, 16);
        assert_eq!(e.next_digit(), 11);
        assert_eq!(e.next_digit(), 0);
        let o = BaseOrbit::new(ExpansionDigits::new(0.3, 16), 16);
        assert!((o.theta() - 0.3).abs() < 1e-16);
    }

    #[test]
    fn jittered_digits_land_in_stratum() {
        let strata = 1000;
        for s in [0, 1, 517, 999] {
            let o = BaseOrbit::new(JitteredDigits::new(s, strata, sample_rng(1, s), 16), 16);
            let t = o.theta();
            assert!(t >= s as f64 / strata as f64 - 1e-15 && t <= (s + 1) as f64 / strata as f64 + 1e-15);
        }
    }

    #[test]
    fn random_digits_are_uniform_and_reproducible() {
        let mut a = RandomDigits::new(sample_rng(9, 3), 16);
        let mut b = RandomDigits::new(sample_rng(9, 3), 16);
        let mut counts = [0u32; 16];
        for _ in 0..16000 {
            let x = a.next_digit();
            assert_eq!(x, b.next_digit());
            counts[x as usize] += 1;
        }
        assert!(counts.iter().all(|&c| (800..1200).contains(&c)));
        let mut c = RandomDigits::new(sample_rng(9, 4), 17);
        assert!((0..1000).all(|_| c.next_digit() < 17));
    }
}
