use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::EvalError;
use crate::par;

pub const MIN_ITERATIONS: usize = 1000;
pub const DEFAULT_ITERATIONS: usize = 10_000;

/// Paired one-sided bootstrap for "A beats B".
///
/// Each iteration resamples item indices with replacement and counts the
/// resample against A when `mean(a) <= mean(b)`. Iteration `i` draws from a
/// ChaCha8 stream `i` under `seed`, so the result does not depend on thread
/// count.
pub fn bootstrap_significance(
    scores_a: &[f64],
    scores_b: &[f64],
    iterations: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if scores_a.len() != scores_b.len() {
        return Err(EvalError::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    if scores_a.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    if iterations < MIN_ITERATIONS {
        return Err(EvalError::TooFewIterations {
            min: MIN_ITERATIONS,
            got: iterations,
        });
    }
    let n = scores_a.len();
    // the sum of paired differences has the same sign as mean(a) - mean(b)
    let diff: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let unfavorable = par::count_range(iterations, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let total: f64 = (0..n).map(|_| diff[rng.random_range(0..n)]).sum();
        total <= 0.0
    });
    Ok(unfavorable as f64 / iterations as f64)
}
