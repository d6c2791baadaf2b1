use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::{rng, Error, Result};

/// Latin hypercube sample of `n` points in the box `ranges`: in every
/// dimension each of the `n` equal-width strata holds exactly one point.
/// A range with equal endpoints yields that constant.
pub fn lhs_sample(ranges: &[(f64, f64)], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::param("n", "need at least one point"));
    }
    for &(lo, hi) in ranges {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::param(
                "ranges",
                format!("empty or invalid range [{lo}, {hi}]"),
            ));
        }
    }
    let mut points = vec![vec![0.0; ranges.len()]; n];
    let mut rng = rng::stream(seed, 0);
    let mut perm: Vec<usize> = (0..n).collect();
    for (d, &(lo, hi)) in ranges.iter().enumerate() {
        perm.shuffle(&mut rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u: f64 = rng.random();
            points[i][d] = lo + (hi - lo) * (stratum as f64 + u) / n as f64;
        }
    }
    Ok(points)
}
