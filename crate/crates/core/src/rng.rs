//! Seeded randomness.
//!
//! Every random draw goes through ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded
//! from a `u64` via `SeedableRng::seed_from_u64`. Independent streams are
//! selected with the ChaCha stream id, so a (seed, stream) pair always yields
//! the same sequence regardless of how work is spread over threads.
//!
//! Bounded integers use rejection sampling on `next_u64`: draws at or above
//! the largest multiple of `bound` are discarded, the rest are reduced modulo
//! `bound`. Sampling without replacement is a partial Fisher-Yates shuffle
//! that swaps position `i` with `i + uniform_below(len - i)`.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..bound`.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % bound;
        }
    }
}

/// `count` distinct items drawn uniformly, in draw order.
pub fn sample_without_replacement<R, T>(rng: &mut R, items: &[T], count: usize) -> Vec<T>
where
    R: RngCore + ?Sized,
    T: Clone,
{
    assert!(count <= items.len(), "sample larger than population");
    let mut pool: Vec<T> = items.to_vec();
    for i in 0..count {
        let j = i + uniform_below(rng, (pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_below_stays_in_range() {
        let mut rng = rng_from_seed(3);
        for bound in [1u64, 2, 3, 7, 1000, u64::MAX] {
            for _ in 0..200 {
                assert!(uniform_below(&mut rng, bound) < bound);
            }
        }
    }

    #[test]
    fn uniform_below_is_roughly_flat() {
        let mut rng = rng_from_seed(4);
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            counts[uniform_below(&mut rng, 6) as usize] += 1;
        }
        // mean 10000, sd ~ 91
        assert!(counts.iter().all(|c| (*c as i64 - 10_000).abs() < 500), "{counts:?}");
    }

    #[test]
    fn substreams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, 0), |r, _: u64| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, 1), |r, _: u64| Some(r.next_u64())).collect();
        let a2: Vec<u64> = (0..4).map(|_| 0).scan(substream(9, 0), |r, _: u64| Some(r.next_u64())).collect();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn sample_is_distinct() {
        let mut rng = rng_from_seed(5);
        let items: Vec<u32> = (0..30).collect();
        for n in 0..=30 {
            let mut s = sample_without_replacement(&mut rng, &items, n);
            assert_eq!(s.len(), n);
            s.sort();
            s.dedup();
            assert_eq!(s.len(), n);
        }
    }
}
