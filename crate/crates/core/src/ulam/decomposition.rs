use crate::dynamics::{FlowState, SuspensionSystem};
use crate::error::{Error, Result};
use crate::process::ObservableSpec;

use super::grid::{gauss_points, GriddedFunction};
use super::operator::Transfer;

/// Default weighted-L¹ truncation tolerance for the `χ` series.
pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of series terms.
pub const DEFAULT_MAX_TERMS: usize = 10_000;

/// Largest `|∫ ψ dμ|` accepted by [`solve_coboundary`].
pub const MEAN_TOLERANCE: f64 = 1e-8;

/// Where the observable lives on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLayout {
    /// Base cells only; `ψ(y) = ∫_0^{h(y)} v(y, s) ds`, the integral of `v`
    /// over one excursion.
    Base,
    /// Base cells × `height_cells` cells of `[0, 1)` for a constant unit
    /// roof, where the time-one map is `(y, u) ↦ (T y, u)` and
    /// `ψ(y, u) = ∫_u^1 v(y, s) ds + ∫_0^u v(T y, s) ds`.
    Suspension { height_cells: usize },
}

/// `ψ` on the grid of `transfer`, centered under the discrete invariant measure.
pub fn observable_on_grid(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    transfer: &Transfer,
    layout: GridLayout,
) -> Result<GriddedFunction> {
    let raw = raw_observable_on_grid(system, v, transfer, layout)?;
    let mean = transfer.mean(&raw);
    Ok(raw.with_values(raw.values().iter().map(|x| x - mean).collect()))
}

/// `ψ` on the grid of `transfer` without centering.
pub fn raw_observable_on_grid(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    transfer: &Transfer,
    layout: GridLayout,
) -> Result<GriddedFunction> {
    let op = transfer.operator();
    if op.base() != system.base() {
        return Err(Error::input("operator and system have different base maps"));
    }
    let (lo, hi) = op.domain();
    let ny = op.cells();
    let eval = |y: f64, u: f64| v.eval(system, &FlowState { y, u });
    // ∫_a^b v(y, s) ds, exact for observables polynomial of degree ≤ 15 in s
    let strip = |y: f64, a: f64, b: f64| -> f64 {
        if b <= a {
            0.0
        } else if v.height_independent() {
            (b - a) * eval(y, a)
        } else {
            gauss_points(a, b).map(|(s, w)| w * eval(y, s)).sum()
        }
    };
    Ok(match layout {
        GridLayout::Base => {
            let mut err = None;
            let g = GriddedFunction::from_fn(lo, hi, ny, |y| match system.roof_at(y) {
                Ok(h) => strip(y, 0.0, h),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            g?
        }
        GridLayout::Suspension { height_cells } => {
            if !system.has_constant_roof() || system.roof().sup() != 1.0 {
                return Err(Error::Config(
                    "the suspension grid needs a constant unit roof; use the base layout".into(),
                ));
            }
            if height_cells == 0 {
                return Err(Error::input("suspension grid needs at least one height cell"));
            }
            let base = *system.base();
            GriddedFunction::from_fn_2d(lo, hi, ny, height_cells, |y, u| {
                let ty = base.apply(y).unwrap_or(y);
                strip(y, u, 1.0) + strip(ty, 0.0, u)
            })?
        }
    })
}

/// Diagnostics of a computed decomposition, all in `L¹(μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `‖ψ − (m + Uχ − χ)‖`; roundoff only.
    pub reconstruction: f64,
    /// `‖L m‖`.
    pub kernel: f64,
    /// `|∫ breve_w dμ|`.
    pub breve_mean: f64,
    /// `‖(I − L)χ − Lψ‖`, the truncation error of the series.
    pub series: f64,
}

/// `ψ = m + χ∘F − χ` on the grid, with `σ² = ∫ m² dμ` and
/// `breve_w = U L(m²) − σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub psi: GriddedFunction,
    pub m: GriddedFunction,
    pub chi: GriddedFunction,
    pub sigma2: f64,
    pub breve_w: GriddedFunction,
    /// Number of series terms `L^k ψ`, `k ≥ 1`, that were summed.
    pub terms: usize,
    /// Weighted L¹ norms of the summed terms.
    pub term_norms: Vec<f64>,
    pub residuals: Residuals,
}

fn sub(a: &GriddedFunction, b: &GriddedFunction) -> GriddedFunction {
    a.with_values(a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect())
}

fn add(a: &GriddedFunction, b: &GriddedFunction) -> GriddedFunction {
    a.with_values(a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect())
}

/// Sums `χ = Σ_{k≥1} L^k ψ` until a term's weighted L¹ norm drops below
/// `tol`, then sets `m = ψ − Uχ + χ`.
pub fn solve_coboundary(psi: &GriddedFunction, transfer: &Transfer, tol: f64, max_terms: usize) -> Result<Decomposition> {
    if !(tol > 0.0) {
        return Err(Error::input(format!("series tolerance must be positive, got {tol}")));
    }
    if max_terms == 0 {
        return Err(Error::input("max_terms must be positive"));
    }
    let mean = transfer.mean(psi);
    if mean.abs() > MEAN_TOLERANCE {
        return Err(Error::input(format!("observable is not centered: mean {mean:e}")));
    }
    let mut chi = psi.with_values(vec![0.0; psi.len()]);
    let mut term = psi.clone();
    let mut norms = Vec::new();
    loop {
        term = transfer.apply_l(&term)?;
        let norm = transfer.l1(&term);
        if !norm.is_finite() {
            return Err(Error::numerical("series term is not finite"));
        }
        chi = add(&chi, &term);
        norms.push(norm);
        if norm < tol {
            break;
        }
        if norms.len() >= max_terms {
            let last = norm;
            let previous = norms[norms.len().saturating_sub(2)];
            return Err(Error::Divergence { previous, last });
        }
    }
    let u_chi = transfer.apply_u(&chi)?;
    let m = add(&sub(psi, &u_chi), &chi);
    let m2 = m.with_values(m.values().iter().map(|x| x * x).collect());
    let sigma2 = transfer.mean(&m2);
    let ul_m2 = transfer.apply_u(&transfer.apply_l(&m2)?)?;
    let breve_w = ul_m2.with_values(ul_m2.values().iter().map(|x| x - sigma2).collect());

    let rebuilt = sub(&add(&m, &u_chi), &chi);
    let l_psi = transfer.apply_l(psi)?;
    let series_defect = sub(&sub(&chi, &transfer.apply_l(&chi)?), &l_psi);
    let residuals = Residuals {
        reconstruction: transfer.l1(&sub(psi, &rebuilt)),
        kernel: transfer.l1(&transfer.apply_l(&m)?),
        breve_mean: transfer.mean(&breve_w).abs(),
        series: transfer.l1(&series_defect),
    };
    Ok(Decomposition {
        psi: psi.clone(),
        m,
        chi,
        sigma2,
        breve_w,
        terms: norms.len(),
        term_norms: norms,
        residuals,
    })
}

/// `V_{n,k} = k/n + (nσ²)^{-1} Σ_{j=1}^{k} breve_w(F_{n−j} x)` for
/// `k = 1..=n`, where `orbit[i] = F_i x`; returns the profile and
/// `max_k |V_{n,k} − k/n|`.
pub fn conditional_variance_profile(orbit: &[FlowState], decomposition: &Decomposition) -> Result<(Vec<f64>, f64)> {
    let n = orbit.len();
    if n == 0 {
        return Err(Error::input("conditional variance needs a nonempty orbit"));
    }
    let sigma2 = decomposition.sigma2;
    if !(sigma2 > 0.0) {
        return Err(Error::input("conditional variance needs sigma² > 0"));
    }
    let scale = 1.0 / (n as f64 * sigma2);
    let mut acc = 0.0;
    let mut max_dev = 0.0f64;
    let profile = (1..=n)
        .map(|k| {
            let s = orbit[n - k];
            acc += decomposition.breve_w.value_at(s.y, s.u);
            let dev = acc * scale;
            max_dev = max_dev.max(dev.abs());
            k as f64 / n as f64 + dev
        })
        .collect();
    Ok((profile, max_dev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BaseMap, Roof};
    use crate::process::ObservableKind;
    use crate::ulam::operator::build_ulam;

    fn doubling(n: usize) -> Transfer {
        Transfer::new(build_ulam(&BaseMap::Doubling, n).unwrap(), 1e-13).unwrap()
    }

    #[test]
    fn doubling_cos_is_a_martingale_difference() {
        let t = doubling(1024);
        let sys = SuspensionSystem::doubling_unit_roof();
        let psi = observable_on_grid(&sys, &ObservableSpec::new(ObservableKind::Cos), &t, GridLayout::Base).unwrap();
        let d = solve_coboundary(&psi, &t, DEFAULT_SERIES_TOLERANCE, DEFAULT_MAX_TERMS).unwrap();
        assert!(d.terms <= 3);
        assert!(d.residuals.kernel <= 1e-8);
        assert!((d.sigma2 - 0.5).abs() < 1e-5);
        assert!(d.chi.values().iter().all(|c| c.abs() < 1e-12));
        assert!(d.residuals.breve_mean <= 1e-8);
    }

    #[test]
    fn zero_observable() {
        let t = doubling(64);
        let zero = GriddedFunction::zeros(0.0, 1.0, 64, 1);
        let d = solve_coboundary(&zero, &t, 1e-9, 10).unwrap();
        assert_eq!(d.sigma2, 0.0);
        assert!(d.m.values().iter().chain(d.chi.values()).all(|&x| x == 0.0));
    }

    #[test]
    fn uncentered_input_rejected() {
        let t = doubling(64);
        let one = GriddedFunction::new(0.0, 1.0, 64, 1, vec![1.0; 64]).unwrap();
        assert!(matches!(solve_coboundary(&one, &t, 1e-9, 10), Err(Error::Input(_))));
    }

    #[test]
    fn identity_does_not_mix() {
        let t = Transfer::new(build_ulam(&BaseMap::Identity, 32).unwrap(), 1e-12).unwrap();
        let psi = GriddedFunction::from_fn(0.0, 1.0, 32, |x| x - 0.5).unwrap();
        let psi = psi.with_values(psi.values().iter().map(|x| x - t.mean(&psi)).collect());
        let err = solve_coboundary(&psi, &t, 1e-9, 50).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn suspension_layout_for_unit_roof() {
        let t = doubling(256);
        let sys = SuspensionSystem::doubling_unit_roof();
        let v = ObservableSpec::new(ObservableKind::Cos);
        let psi = observable_on_grid(&sys, &v, &t, GridLayout::Suspension { height_cells: 8 }).unwrap();
        let d = solve_coboundary(&psi, &t, 1e-9, 100).unwrap();
        // χ(y, u) = u cos 2πy and m = cos 2πy up to cell averaging
        assert!(d.terms <= 3);
        assert!((d.sigma2 - 0.5).abs() < 1e-3);
        assert!((d.chi.value_at(0.1, 0.55) - 0.5625 * (std::f64::consts::TAU * 0.1).cos()).abs() < 0.03);
        assert!(d.residuals.reconstruction < 1e-12);

        let roofed = SuspensionSystem::new(BaseMap::Doubling, Roof::OnePlusY);
        assert!(matches!(
            observable_on_grid(&roofed, &v, &t, GridLayout::Suspension { height_cells: 8 }),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn conditional_variance_examples() {
        let t = doubling(64);
        let sys = SuspensionSystem::doubling_unit_roof();
        let psi = observable_on_grid(&sys, &ObservableSpec::new(ObservableKind::Cos), &t, GridLayout::Base).unwrap();
        let mut d = solve_coboundary(&psi, &t, 1e-9, 100).unwrap();
        let x0 = FlowState::new(0.3, 0.0);
        let (profile, dev) = conditional_variance_profile(&[x0], &d).unwrap();
        let bw = d.breve_w.value_at(0.3, 0.0);
        assert!((profile[0] - (1.0 + bw / d.sigma2)).abs() < 1e-15);
        assert!((dev - bw.abs() / d.sigma2).abs() < 1e-15);

        d.breve_w = d.breve_w.with_values(vec![0.0; 64]);
        let orbit: Vec<FlowState> = (0..10).map(|k| FlowState::new(k as f64 / 10.0, 0.0)).collect();
        let (profile, dev) = conditional_variance_profile(&orbit, &d).unwrap();
        assert_eq!(dev, 0.0);
        for (k, v) in profile.iter().enumerate() {
            assert_eq!(*v, (k + 1) as f64 / 10.0);
        }
        assert!(conditional_variance_profile(&[], &d).is_err());
    }
}
