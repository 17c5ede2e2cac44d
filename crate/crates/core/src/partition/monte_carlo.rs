//! Monte-Carlo estimate of `D_n` as the mean of `prod_i rho(i/n, sigma_i/n)`
//! over uniformly random permutations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{log_potential_sum, point_from_dn, Method, PartitionError, PartitionPoint, MIN_MC_SAMPLES};
use crate::bridge::BridgeSolution;

/// Generator used for every Monte-Carlo run, recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64), Fisher-Yates via gen_range";

/// Seeded estimate with its standard error. Bit-identical for a fixed seed.
pub fn mc_estimate_dn(
    sol: &BridgeSolution,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<PartitionPoint, PartitionError> {
    if n == 0 {
        return Err(PartitionError::EmptyRange);
    }
    if samples < MIN_MC_SAMPLES {
        return Err(PartitionError::TooFewSamples(samples));
    }
    let r = sol.unit_density(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();

    // Welford's running mean and sum of squared deviations.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=samples {
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let x: f64 = perm.iter().enumerate().map(|(i, &j)| r[(i, j)]).product();
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let variance = m2 / (samples - 1) as f64;
    let stderr = (variance / samples as f64).sqrt();

    let mut point = point_from_dn(sol, n, mean, log_potential_sum(sol, n), Method::MonteCarlo);
    point.mc_stderr = Some(stderr);
    point.seed = Some(seed);
    Ok(point)
}
