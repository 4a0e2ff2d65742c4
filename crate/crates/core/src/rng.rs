//! Deterministic stream derivation and a few sampling helpers.
//!
//! Every subject (pool or experiment) draws from an independent ChaCha12
//! stream keyed by (master seed, lane, index). Streams are derived, not
//! advanced from a shared generator, so the panel is byte-identical however
//! subjects are ordered or parallelized.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Lane for the neighbor pool's streams.
pub const LANE_POOL: u64 = 0;

/// splitmix64 finalizer: a cheap, well-mixed 64→64 hash.
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// An independent generator for (seed, lane, index).
pub fn substream(seed: u64, lane: u64, index: u64) -> ChaCha12Rng {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let base = mix64(seed ^ mix64(lane.wrapping_mul(GOLDEN) ^ mix64(index.wrapping_add(GOLDEN))));
    let mut key = [0u8; 32];
    let mut s = base;
    for chunk in key.chunks_exact_mut(8) {
        s = s.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(s).to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Standard normal draw via Box–Muller (two uniforms per call; the spare is
/// discarded to keep each call's consumption fixed).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > 0.0 {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// Normal draw rounded to an integer and clamped into [lo, hi].
pub fn rounded_clamped_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sd: f64,
    lo: i64,
    hi: i64,
) -> i64 {
    let draw = mean + sd * standard_normal(rng);
    (draw.round() as i64).clamp(lo, hi)
}

pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a1: Vec<u64> = (0..4).map(|_| substream(42, 1, 7).next_u64()).collect();
        let a2 = substream(42, 1, 7).next_u64();
        assert_eq!(a1[0], a2);
        assert_ne!(
            substream(42, 1, 7).next_u64(),
            substream(42, 1, 8).next_u64()
        );
        assert_ne!(
            substream(42, 1, 7).next_u64(),
            substream(42, 2, 7).next_u64()
        );
        assert_ne!(
            substream(42, 1, 7).next_u64(),
            substream(43, 1, 7).next_u64()
        );
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = substream(9, 99, 0);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn clamped_normal_respects_bounds() {
        let mut rng = substream(1, 2, 3);
        for _ in 0..200 {
            let v = rounded_clamped_normal(&mut rng, 20.0, 30.0, 18, 80);
            assert!((18..=80).contains(&v));
        }
    }
}
