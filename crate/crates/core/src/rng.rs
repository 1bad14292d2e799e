//! Reproducible random streams and binomial sampling.
//!
//! Every random draw in the crate comes from a [`CounterRng`]: SplitMix64
//! run in counter mode. The k-th output of a stream with key `K` is
//! `mix(K + k·γ)`, where `γ = 0x9E3779B97F4A7C15` and `mix` is the
//! SplitMix64 finalizer (Stafford variant 13). Streams are keyed by hashing
//! `(seed, trial, i, j)` through the same finalizer, so any trial or cell can
//! be reproduced without replaying the ones before it.

use rand_core::RngCore;
use rand_distr::{Binomial, Distribution};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key for `(seed, words...)`; order-sensitive.
pub fn stream_key(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x5851_F42D_4C95_7F2D);
    for (k, &w) in words.iter().enumerate() {
        h = mix64(h ^ mix64(w.wrapping_add((k as u64 + 1).wrapping_mul(GOLDEN_GAMMA))));
    }
    h
}

/// SplitMix64 in counter mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn from_key(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// Independent stream for one measurement cell of one trial.
    pub fn for_cell(seed: u64, trial: u64, i: usize, j: usize) -> Self {
        Self::from_key(stream_key(seed, &[trial, i as u64, j as u64]))
    }

    /// Stream for auxiliary draws of a trial (not tied to a cell).
    pub fn for_trial(seed: u64, trial: u64, purpose: u64) -> Self {
        Self::from_key(stream_key(seed, &[trial, u64::MAX, purpose]))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}

/// Below this variance `n·p·(1−p)` binomial draws use sequential inversion.
pub const INVERSION_VARIANCE_LIMIT: f64 = 30.0;

/// Exact draw from `Binom(n, p)`.
///
/// Small-variance draws use sequential CDF inversion on the rarer outcome
/// (one uniform per draw). Larger ones use the BTPE acceptance–rejection
/// sampler from `rand_distr`, which is exact and deterministic given the
/// stream.
pub fn sample_binomial(rng: &mut CounterRng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if (n as f64) * p * (1.0 - p) < INVERSION_VARIANCE_LIMIT {
        let flip = p > 0.5;
        let q = if flip { 1.0 - p } else { p };
        let k = binomial_inversion(rng, n, q);
        if flip {
            n - k
        } else {
            k
        }
    } else {
        Binomial::new(n, p)
            .expect("0 < p < 1 checked above")
            .sample(rng)
    }
}

fn binomial_inversion(rng: &mut CounterRng, n: u64, q: f64) -> u64 {
    let ratio = q / (1.0 - q);
    let mut pk = ((n as f64) * (-q).ln_1p()).exp();
    let mut cdf = pk;
    let u = rng.next_f64();
    let mut k = 0u64;
    while u >= cdf && k < n {
        pk *= ratio * (n - k) as f64 / (k + 1) as f64;
        let next = cdf + pk;
        k += 1;
        if next == cdf {
            // The remaining tail is below f64 resolution.
            break;
        }
        cdf = next;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = CounterRng::for_cell(7, 3, 1, 2);
        let mut b = CounterRng::for_cell(7, 3, 1, 2);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        let mut c = CounterRng::for_cell(7, 3, 2, 1);
        assert_ne!(xs[0], c.next_u64());
        let mut d = CounterRng::for_cell(7, 4, 1, 2);
        assert_ne!(xs[0], d.next_u64());
    }

    #[test]
    fn known_answer() {
        // SplitMix64 seeded with 0 yields this first output.
        let mut r = CounterRng::from_key(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = CounterRng::from_key(99);
        for _ in 0..10_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn degenerate_binomials() {
        let mut r = CounterRng::from_key(1);
        assert_eq!(sample_binomial(&mut r, 1000, 1.0), 1000);
        assert_eq!(sample_binomial(&mut r, 1000, 0.0), 0);
        assert_eq!(sample_binomial(&mut r, 0, 0.3), 0);
    }

    fn moments(n: u64, p: f64, draws: usize) -> (f64, f64) {
        let mut r = CounterRng::from_key(n ^ p.to_bits());
        let xs: Vec<f64> = (0..draws).map(|_| sample_binomial(&mut r, n, p) as f64).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        (mean, var)
    }

    #[test]
    fn both_regimes_match_binomial_moments() {
        // (n, p): inversion, inversion on the flipped side, BTPE
        for &(n, p) in &[(20u64, 0.3), (1000, 0.995), (10_000_000, 1e-6), (1000, 0.4)] {
            let draws = 40_000;
            let (mean, var) = moments(n, p, draws);
            let mu = n as f64 * p;
            let sigma2 = mu * (1.0 - p);
            let se = (sigma2 / draws as f64).sqrt();
            assert!((mean - mu).abs() < 5.0 * se, "n={n} p={p}: mean {mean} vs {mu}");
            assert!((var / sigma2 - 1.0).abs() < 0.05, "n={n} p={p}: var {var} vs {sigma2}");
        }
    }

    #[test]
    fn half_probability_concentrates() {
        let n = 1_000_000;
        let mut r = CounterRng::from_key(2024);
        for _ in 0..20 {
            let k = sample_binomial(&mut r, n, 0.5) as f64 / n as f64;
            assert!((0.4985..=0.5015).contains(&k), "{k}");
        }
    }
}
