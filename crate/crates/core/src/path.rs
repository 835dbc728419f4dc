//! Piecewise-linear paths on the uniform grid `{0, 1/m, …, 1}`.

use crate::error::{Error, Result};

/// A continuous path on `[0, 1]`, linear between the grid times `i/m`.
///
/// The canonical representation is the starting value plus the `m` grid
/// increments; grid values are their running sums. Reversal permutes
/// increments, so it is an exact involution in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    origin: f64,
    increments: Vec<f64>,
    values: Vec<f64>,
}

impl PathSample {
    pub fn from_increments(origin: f64, increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::input("a path needs at least one grid interval"));
        }
        if !origin.is_finite() || increments.iter().any(|d| !d.is_finite()) {
            return Err(Error::numerical("path values must be finite"));
        }
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = origin;
        values.push(acc);
        for d in &increments {
            acc += d;
            values.push(acc);
        }
        Ok(Self { origin, increments, values })
    }

    /// Builds a path from grid values `v_0, …, v_m`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input("a path needs at least two grid values"));
        }
        let increments = values.windows(2).map(|w| w[1] - w[0]).collect();
        Self::from_increments(values[0], increments)
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::from_increments(0.0, vec![0.0; m])
    }

    /// Samples `f` at the grid times.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("a path needs at least one grid interval"));
        }
        let values: Vec<f64> = (0..=m).map(|i| f(i as f64 / m as f64)).collect();
        Self::from_values(&values)
    }

    /// Number of grid intervals.
    pub fn m(&self) -> usize {
        self.increments.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.m()]
    }

    /// Linear interpolation at `t ∈ [0, 1]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let m = self.m();
        let x = (t.clamp(0.0, 1.0)) * m as f64;
        let i = (x.floor() as usize).min(m - 1);
        let frac = x - i as f64;
        self.values[i] + frac * self.increments[i]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_increments(self.origin * factor, self.increments.iter().map(|d| d * factor).collect())
            .expect("scaling preserves finiteness")
    }
}

/// `g(u)(t) = u(1) − u(1 − t)`.
///
/// The increments of `g(u)` are those of `u` in reverse order, and `g(u)`
/// starts at 0; `g(g(u)) = u` whenever `u(0) = 0`.
pub fn reverse_transform(path: &PathSample) -> PathSample {
    let mut increments = path.increments.clone();
    increments.reverse();
    PathSample::from_increments(0.0, increments).expect("reversal preserves finiteness")
}

/// `max_i |a(i/m) − b(i/m)|`, the sup distance of two piecewise-linear paths
/// on a shared grid.
pub fn sup_distance(a: &PathSample, b: &PathSample) -> Result<f64> {
    if a.m() != b.m() {
        return Err(Error::input(format!("grid mismatch: {} vs {} intervals", a.m(), b.m())));
    }
    Ok(grid_sup(a, b))
}

#[inline]
pub(crate) fn grid_sup(a: &PathSample, b: &PathSample) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversal_examples() {
        let id = PathSample::from_fn(16, |t| t).unwrap();
        let g = reverse_transform(&id);
        assert!(sup_distance(&g, &id).unwrap() < 1e-15);
        let zero = PathSample::zero(8).unwrap();
        assert_eq!(reverse_transform(&zero), zero);
        assert_eq!(reverse_transform(&g), id);
    }

    #[test]
    fn reversal_is_grid_exact_formula() {
        let u = PathSample::from_values(&[0.0, 0.5, -0.25, 2.0, 1.0]).unwrap();
        let g = reverse_transform(&u);
        for i in 0..=4 {
            let expected = u.terminal() - u.values()[4 - i];
            assert!((g.values()[i] - expected).abs() < 1e-15);
        }
        assert_eq!(g.values()[0], 0.0);
    }

    #[test]
    fn sup_distance_examples() {
        let id = PathSample::from_fn(16, |t| t).unwrap();
        let zero = PathSample::zero(16).unwrap();
        let flip = PathSample::from_fn(16, |t| 1.0 - t).unwrap();
        assert_eq!(sup_distance(&id, &id).unwrap(), 0.0);
        assert_eq!(sup_distance(&id, &zero).unwrap(), 1.0);
        assert_eq!(sup_distance(&id, &flip).unwrap(), 1.0);
        assert!(sup_distance(&id, &PathSample::zero(8).unwrap()).is_err());
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let u = PathSample::from_values(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(u.value_at(0.25), 0.5);
        assert_eq!(u.value_at(0.5), 1.0);
        assert_eq!(u.value_at(1.0), 0.0);
    }
}
