use std::io::Write;

use crate::error::{Error, Result};

/// 8-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// `(x, w)` quadrature pairs for `∫_a^b`, weights summing to `b − a`.
pub fn gauss_points(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GAUSS_LEGENDRE_8.iter().map(move |&(x, w)| (mid + half * x, half * w))
}

/// Cell-averaged values on `ny` base cells of `[lo, hi]` times `nu` height
/// cells of `[0, 1]`; `values[i * nu + k]` belongs to base cell `i` and
/// height cell `k`. Base-only functions have `nu = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedFunction {
    lo: f64,
    hi: f64,
    ny: usize,
    nu: usize,
    values: Vec<f64>,
}

impl GriddedFunction {
    pub fn new(lo: f64, hi: f64, ny: usize, nu: usize, values: Vec<f64>) -> Result<Self> {
        if !(lo < hi) || ny == 0 || nu == 0 {
            return Err(Error::input("grid needs a nonempty domain and at least one cell"));
        }
        if values.len() != ny * nu {
            return Err(Error::input(format!("expected {} grid values, got {}", ny * nu, values.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("non-finite grid value at cell {bad}")));
        }
        Ok(Self { lo, hi, ny, nu, values })
    }

    pub fn zeros(lo: f64, hi: f64, ny: usize, nu: usize) -> Self {
        Self { lo, hi, ny, nu, values: vec![0.0; ny * nu] }
    }

    /// Cell averages of `f` over the base cells by 8-point Gauss–Legendre.
    pub fn from_fn(lo: f64, hi: f64, ny: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let h = (hi - lo) / ny as f64;
        let values = (0..ny)
            .map(|i| {
                let a = lo + i as f64 * h;
                gauss_points(a, a + h).map(|(x, w)| w * f(x)).sum::<f64>() / h
            })
            .collect();
        Self::new(lo, hi, ny, 1, values)
    }

    /// Cell averages of `f(y, u)` over base × height cells by tensor
    /// 8-point Gauss–Legendre.
    pub fn from_fn_2d(lo: f64, hi: f64, ny: usize, nu: usize, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let hy = (hi - lo) / ny as f64;
        let hu = 1.0 / nu as f64;
        let mut values = Vec::with_capacity(ny * nu);
        for i in 0..ny {
            let a = lo + i as f64 * hy;
            for k in 0..nu {
                let c = k as f64 * hu;
                let mut acc = 0.0;
                for (y, wy) in gauss_points(a, a + hy) {
                    for (u, wu) in gauss_points(c, c + hu) {
                        acc += wy * wu * f(y, u);
                    }
                }
                values.push(acc / (hy * hu));
            }
        }
        Self::new(lo, hi, ny, nu, values)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.ny == other.ny && self.nu == other.nu
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { values, ..*self }
    }

    /// Base cell containing `y`, clamped to the grid.
    pub fn base_cell(&self, y: f64) -> usize {
        let t = (y - self.lo) / (self.hi - self.lo) * self.ny as f64;
        (t.floor().max(0.0) as usize).min(self.ny - 1)
    }

    /// Piecewise-constant value at `(y, u)`; `u` is read modulo the unit
    /// height and ignored for base-only functions.
    pub fn value_at(&self, y: f64, u: f64) -> f64 {
        let i = self.base_cell(y);
        let k = if self.nu == 1 { 0 } else { ((u.rem_euclid(1.0) * self.nu as f64) as usize).min(self.nu - 1) };
        self.values[i * self.nu + k]
    }

    /// Linear interpolation between base-cell centres (flat beyond the
    /// outermost centres); height is handled piecewise-constantly.
    pub fn interpolate(&self, y: f64, u: f64) -> f64 {
        let k = if self.nu == 1 { 0 } else { ((u.rem_euclid(1.0) * self.nu as f64) as usize).min(self.nu - 1) };
        let t = (y - self.lo) / (self.hi - self.lo) * self.ny as f64 - 0.5;
        if t <= 0.0 {
            return self.values[k];
        }
        let i = t.floor() as usize;
        if i + 1 >= self.ny {
            return self.values[(self.ny - 1) * self.nu + k];
        }
        let w = t - i as f64;
        (1.0 - w) * self.values[i * self.nu + k] + w * self.values[(i + 1) * self.nu + k]
    }

    /// Writes `cell,value` rows; 2D grids use `cell = i * nu + k`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "cell,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{i},{v:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_degree_fifteen() {
        let exact = 1.0 / 16.0;
        let got: f64 = gauss_points(0.0, 1.0).map(|(x, w)| w * x.powi(15)).sum();
        assert!((got - exact).abs() < 1e-15);
    }

    #[test]
    fn cell_averages_of_cos() {
        let n = 64;
        let g = GriddedFunction::from_fn(0.0, 1.0, n, |x| (std::f64::consts::TAU * x).cos()).unwrap();
        for i in 0..n {
            let a = i as f64 / n as f64;
            let exact = ((std::f64::consts::TAU * (a + 1.0 / n as f64)).sin() - (std::f64::consts::TAU * a).sin())
                / std::f64::consts::TAU
                * n as f64;
            assert!((g.values()[i] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn lookup_and_interpolation() {
        let g = GriddedFunction::new(0.5, 1.0, 2, 1, vec![1.0, 3.0]).unwrap();
        assert_eq!(g.value_at(0.6, 0.0), 1.0);
        assert_eq!(g.value_at(1.0, 0.0), 3.0);
        assert_eq!(g.interpolate(0.75, 0.0), 2.0);
        assert_eq!(g.interpolate(0.5, 0.0), 1.0);
        assert!(GriddedFunction::new(0.0, 1.0, 2, 1, vec![1.0]).is_err());
        assert!(GriddedFunction::new(0.0, 1.0, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn two_dimensional_layout() {
        let g = GriddedFunction::from_fn_2d(0.0, 1.0, 2, 2, |y, u| y + 10.0 * u).unwrap();
        assert!((g.value_at(0.1, 0.7) - (0.25 + 7.5)).abs() < 1e-13);
        assert!((g.values()[1] - (0.25 + 7.5)).abs() < 1e-13);
    }
}
