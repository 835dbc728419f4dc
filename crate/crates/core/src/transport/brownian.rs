use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::path::PathSample;

/// Brownian motion with variance `sigma²` per unit time on an `m`-interval
/// grid: cumulative sums of independent `N(0, sigma²/m)` increments from 0.
pub fn sample_brownian<R: Rng + ?Sized>(sigma: f64, m: usize, rng: &mut R) -> Result<PathSample> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    if m == 0 {
        return Err(Error::input("grid must have at least one interval"));
    }
    let scale = sigma / (m as f64).sqrt();
    let increments = (0..m).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    PathSample::from_increments(0.0, increments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn starts_at_zero_and_has_grid() {
        let mut rng = stream(1, Purpose::Brownian, 0, 0);
        let b = sample_brownian(0.7, 16, &mut rng).unwrap();
        assert_eq!(b.m(), 16);
        assert_eq!(b.values()[0], 0.0);
        assert!(sample_brownian(0.0, 16, &mut rng).is_err());
    }

    #[test]
    fn marginal_moments() {
        let sigma: f64 = 0.8;
        let draws = 10_000;
        let mut end = Vec::with_capacity(draws);
        let mut mid = Vec::with_capacity(draws);
        for i in 0..draws {
            let mut rng = stream(11, Purpose::Brownian, 0, i as u64);
            let b = sample_brownian(sigma, 16, &mut rng).unwrap();
            end.push(b.terminal());
            mid.push(b.values()[8]);
        }
        let mean = end.iter().sum::<f64>() / draws as f64;
        let var = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() <= 4.0 * sigma / (draws as f64).sqrt());
        assert!((var(&end) / (sigma * sigma) - 1.0).abs() < 0.1);
        assert!((var(&mid) / (0.5 * sigma * sigma) - 1.0).abs() < 0.1);
    }
}
