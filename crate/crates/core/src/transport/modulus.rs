//! The logarithmic modulus `ω_q(t) = (t ℓ(t))^q` and the Hölder-type
//! statistic of a path measured against `ω_{1/2}`.

use crate::error::{Error, Result};
use crate::path::PathSample;

const ONE_THIRD: f64 = 1.0 / 3.0;

/// `ℓ(t) = −log t` on `(0, 1/3]`, `log 3` beyond.
#[inline]
pub fn ell(t: f64) -> f64 {
    if t <= ONE_THIRD {
        -t.ln()
    } else {
        3f64.ln()
    }
}

/// Modulus exponent `q > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusParams {
    q: f64,
}

impl ModulusParams {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::input(format!("modulus exponent must be positive, got {q}")));
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            (t * ell(t)).powf(self.q)
        }
    }
}

/// `ω_q(t)`, with `ω_q(0) = 0`.
pub fn omega(q: f64, t: f64) -> Result<f64> {
    let params = ModulusParams::new(q)?;
    if !(t >= 0.0) {
        return Err(Error::input(format!("omega is defined for t >= 0, got {t}")));
    }
    Ok(params.eval(t))
}

/// `max_{s<t on the grid} |B(t) − B(s)| / ω_{1/2}(t − s)`.
///
/// Grid pairs are at least `1/m` apart, so the denominator never vanishes.
pub fn holder_modulus_statistic(path: &PathSample) -> f64 {
    let m = path.m();
    let dt = 1.0 / m as f64;
    let half = ModulusParams { q: 0.5 };
    let inv_omega: Vec<f64> = (0..=m)
        .map(|k| if k == 0 { 0.0 } else { 1.0 / half.eval(k as f64 * dt) })
        .collect();
    let values = path.values();
    let mut best = 0.0f64;
    for (i, &start) in values.iter().enumerate() {
        let rest = &values[i + 1..];
        for (lag, &end) in rest.iter().enumerate() {
            let ratio = (end - start).abs() * inv_omega[lag + 1];
            if ratio > best {
                best = ratio;
            }
        }
    }
    best
}
