//! Seeded randomness for perturbation trials and random fixtures.
//!
//! The generator is SplitMix64: the state advances by `0x9E3779B97F4A7C15`
//! per draw and the output is the state passed through the
//! `(x ^ x>>30) * 0xBF58476D1CE4E5B9`, `(x ^ x>>27) * 0x94D049BB133111EB`,
//! `x ^ x>>31` finalizer. The seed is used as the initial state.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub type TrialRng = SplitMix64;

pub fn seeded(seed: u64) -> TrialRng {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform sample from `[lo, hi)`.
pub fn uniform(rng: &mut TrialRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// One direction per node, each coordinate uniform in `[-1, 1)`.
pub fn direction_field(rng: &mut TrialRng, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)])
        .collect()
}

/// Sorted coordinates starting at 0 with gaps uniform in `[0.5, 1.5)`.
pub fn random_spacing(rng: &mut TrialRng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut x = 0.0;
    for i in 0..n {
        if i > 0 {
            x += uniform(rng, 0.5, 1.5);
        }
        out.push(x);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn splitmix_reference_stream() {
        // reference values of SplitMix64 seeded with 0
        let mut r = seeded(0);
        assert_eq!(r.next_u64(), 0xE220A8397B1DCDAF);
        assert_eq!(r.next_u64(), 0x6E789E6AA1B965F4);
    }

    #[test]
    fn same_seed_same_stream() {
        let a = direction_field(&mut seeded(42), 13);
        let b = direction_field(&mut seeded(42), 13);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn spacing_is_increasing() {
        let xs = random_spacing(&mut seeded(7), 6);
        assert_eq!(xs[0], 0.0);
        assert!(xs
            .windows(2)
            .all(|w| w[1] - w[0] >= 0.5 && w[1] - w[0] < 1.5));
    }
}
