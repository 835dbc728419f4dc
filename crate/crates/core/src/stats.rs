//! Small statistical estimators shared by the experiment pipeline.

/// Long-run variance `γ_0 + 2 Σ_{k≥1} γ_k` of a stationary series
/// (Green–Kubo), estimated with a Bartlett window of width `⌈n^{1/3}⌉`.
pub fn green_kubo(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let bandwidth = ((n as f64).cbrt().ceil() as usize).min(n - 1);
    green_kubo_with_bandwidth(series, bandwidth)
}

pub fn green_kubo_with_bandwidth(series: &[f64], bandwidth: usize) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let mut total = autocov(0);
    for lag in 1..=bandwidth.min(n - 1) {
        let weight = 1.0 - lag as f64 / (bandwidth as f64 + 1.0);
        total += 2.0 * weight * autocov(lag);
    }
    total.max(0.0)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (denominator `n − 1`); 0 for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(mean |x|^r)^{1/r}`.
pub fn lr_norm(values: &[f64], r: f64) -> f64 {
    (values.iter().map(|x| x.abs().powf(r)).sum::<f64>() / values.len() as f64).powf(1.0 / r)
}

/// Kolmogorov–Smirnov distance of a sample from the uniform law on `[lo, hi]`.
pub fn ks_uniform(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_kubo_of_constant_is_zero() {
        assert_eq!(green_kubo(&[2.0; 100]), 0.0);
    }

    #[test]
    fn green_kubo_detects_positive_correlation() {
        // x_k = e_k + e_{k-1} for i.i.d. signs e has long-run variance 4, against 1 for e
        use rand::Rng;
        let mut rng = crate::rng::stream(3, crate::rng::Purpose::Generic, 0, 0);
        let e: Vec<f64> = (0..20_000).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let x: Vec<f64> = e.windows(2).map(|w| w[0] + w[1]).collect();
        let white = green_kubo(&e);
        let filtered = green_kubo(&x);
        assert!(filtered > 2.0 * white);
    }

    #[test]
    fn median_and_norms() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!((lr_norm(&[1.0, -1.0], 4.0) - 1.0).abs() < 1e-15);
        assert_eq!(std_dev(&[5.0]), 0.0);
    }

    #[test]
    fn ks_of_perfect_grid() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&v, 0.0, 1.0) - 0.005).abs() < 1e-12);
    }
}
