//! Seeded pseudo-random numbers.
//!
//! The generator is xoshiro256** whose 256-bit state is filled from the
//! user seed by four successive splitmix64 outputs.
//!
//! splitmix64: `z += 0x9E3779B97F4A7C15`,
//! `z = (z ^ z>>30) * 0xBF58476D1CE4E5B9`, `z = (z ^ z>>27) * 0x94D049BB133111EB`,
//! output `z ^ z>>31`.
//!
//! xoshiro256**: output `rotl(s1 * 5, 7) * 9`, then
//! `t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45)`.
//!
//! Uniform reals take the top 53 bits: `(x >> 11) * 2^-53`, in `[0, 1)`.
//! Gaussian variates use the Box–Muller transform; the second variate of
//! each pair is kept and returned by the next call.
//!
//! Streams are never shared between workers. Independent streams are
//! obtained with [`derive_seed`], which hashes `(base, stream)` through
//! splitmix64.

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of a generator seeded with `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut s = base;
    let a = splitmix64(&mut s);
    let mut t = stream ^ a.rotate_left(17);
    splitmix64(&mut t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rng {
    s: [u64; 4],
    spare: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased integer in `[0, bound)`; `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// One draw from N(mu, sigma²).
    pub fn gaussian(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(mu + sigma * self.standard_normal())
    }
}

/// Normal density `exp(-(x-mu)²/2σ²) / (σ√(2π))`.
pub fn gaussian_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (std::f64::consts::TAU).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_at_mean() {
        let p = gaussian_pdf(0.0, 0.0, 1.0);
        assert!((p - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((p - 0.39894).abs() < 1e-5);
    }

    #[test]
    fn golden_first_draw_seed_42() {
        let mut rng = Rng::new(42);
        let z = rng.gaussian(0.0, 1.0).unwrap();
        assert_eq!(z.to_bits(), GOLDEN_SEED42_FIRST_DRAW.to_bits(), "got {z:e}");
    }

    // Frozen from the first run of this generator.
    const GOLDEN_SEED42_FIRST_DRAW: f64 = f64::from_bits(13822506758473011324);

    #[test]
    fn monte_carlo_moments() {
        let mut rng = Rng::new(7);
        let n = 1_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.gaussian(0.0, 1.0).unwrap();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((std - 1.0).abs() < 0.01, "std {std}");
    }

    #[test]
    fn affine_equivalence_is_exact() {
        let mut a = Rng::new(99);
        let mut b = Rng::new(99);
        for _ in 0..1000 {
            let x = a.gaussian(3.5, 0.25).unwrap();
            let z = b.gaussian(0.0, 1.0).unwrap();
            assert_eq!(x, 3.5 + 0.25 * z);
        }
    }

    #[test]
    fn non_positive_sigma_is_rejected() {
        let mut rng = Rng::new(1);
        assert!(matches!(rng.gaussian(0.0, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(rng.gaussian(0.0, -1.0), Err(Error::Parameter(_))));
        assert!(matches!(rng.gaussian(0.0, f64::NAN), Err(Error::Parameter(_))));
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(5);
        let mut b = Rng::new(5);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(derive_seed(5, 0), derive_seed(5, 1));
        assert_ne!(derive_seed(5, 0), derive_seed(6, 0));
    }

    #[test]
    fn below_and_shuffle() {
        let mut rng = Rng::new(3);
        for _ in 0..1000 {
            assert!(rng.below(7) < 7);
        }
        let mut v: Vec<u32> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
