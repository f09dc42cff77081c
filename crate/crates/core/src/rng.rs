//! Seeded randomness and roulette-wheel selection.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every stochastic component owns one of these, seeded from the run seed.
pub type TaskRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream from a parent seed and a stream label.
pub fn derive(seed: u64, stream: u64) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A source of uniform draws in `[0, 1)`. Lets tests script the draws that
/// drive threshold and roulette decisions.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: RngCore> UniformSource for R {
    fn next_uniform(&mut self) -> f64 {
        self.gen::<f64>()
    }
}

/// Index chosen by fitness-proportionate selection for the draw `u` in
/// `[0, 1)`. Zero and negative weights are never chosen. Returns `None` when
/// no weight is positive.
pub fn roulette_index(weights: &[f64], u: f64) -> Option<usize> {
    let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if !(total > 0.0) {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if acc > target {
            return Some(i);
        }
    }
    last
}

/// Roulette over `weights`, falling back to a uniform pick when every
/// weight is zero. Returns `None` only for an empty slice.
pub fn roulette_or_uniform<U: UniformSource + ?Sized>(weights: &[f64], u: &mut U) -> Option<usize> {
    if weights.is_empty() {
        return None;
    }
    let draw = u.next_uniform();
    roulette_index(weights, draw).or_else(|| {
        let i = (draw * weights.len() as f64) as usize;
        Some(i.min(weights.len() - 1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_is_never_chosen() {
        let weights = [0.0, 1.0, 0.0, 3.0, 0.0];
        for step in 0..1000 {
            let u = step as f64 / 1000.0;
            let i = roulette_index(&weights, u).unwrap();
            assert!(i == 1 || i == 3);
        }
        assert_eq!(roulette_index(&weights, 0.9999999999), Some(3));
        assert_eq!(roulette_index(&[0.0, 0.0], 0.5), None);
    }

    #[test]
    fn proportions_follow_weights() {
        let mut rng = seeded(7);
        let weights = [0.9, 0.1];
        let n = 10_000;
        let first = (0..n)
            .filter(|_| roulette_or_uniform(&weights, &mut rng) == Some(0))
            .count();
        let share = first as f64 / n as f64;
        assert!((share - 0.9).abs() < 0.02, "share {share}");
    }

    #[test]
    fn all_zero_is_uniform() {
        let mut rng = seeded(11);
        let mut counts = [0usize; 4];
        for _ in 0..8000 {
            counts[roulette_or_uniform(&[0.0; 4], &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 8000.0 - 0.25).abs() < 0.03);
        }
    }

    #[test]
    fn derived_streams_differ() {
        let a: u64 = derive(1, 0).gen();
        let b: u64 = derive(1, 1).gen();
        assert_ne!(a, b);
        let c: u64 = derive(1, 0).gen();
        assert_eq!(a, c);
    }
}
