//! Rate experiments: empirical `𝒲_q(W_n, W)` across a grid of `n`, with
//! bootstrap errors, the Brownian self-distance floor, and log-log fits.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::{SuspensionSystem, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::process::{center_observable, flow_green_kubo, wn_path, MeanProvenance, ObservableSpec, MIN_CENTERING_BUDGET};
use crate::rng::{stream, Purpose};
use crate::stats::std_dev;
use crate::transport::{
    assignment_on_cost, cost_matrix, sample_brownian, wasserstein_1d, EmpiricalMeasure, GridSup, Solver,
    ASSIGNMENT_CAP,
};
use crate::ulam::{self, GridLayout, GriddedFunction};

/// Smallest samples-per-`n` accepted in a plan.
pub const MIN_SAMPLES: usize = 32;

/// Bootstrap resamples per row.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Observables with smaller long-run variance are rejected as degenerate.
pub const MIN_VARIANCE: f64 = 0.01;

/// Where the Brownian reference variance comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceSource {
    /// `σ²` of the Ulam decomposition of the excursion integral on this many
    /// cells, divided by the mean roof.
    Ulam { cells: usize },
    /// Green–Kubo over this many unit time steps of one orbit.
    GreenKubo { steps: usize },
    Fixed(f64),
}

impl VarianceSource {
    pub fn tag(&self) -> String {
        match self {
            VarianceSource::Ulam { cells } => format!("ulam:{cells}"),
            VarianceSource::GreenKubo { steps } => format!("green_kubo:{steps}"),
            VarianceSource::Fixed(v) => format!("fixed:{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub system: SuspensionSystem,
    pub observable: ObservableSpec,
    pub q: f64,
    /// Strictly increasing time horizons.
    pub ns: Vec<u64>,
    /// Samples per `n` for each of the two empirical measures.
    pub samples: usize,
    pub grid_m: usize,
    pub seed: u64,
    pub variance: VarianceSource,
    /// Flow time used to center an uncentered observable when the variance
    /// does not come from an Ulam grid.
    pub centering_budget: u64,
    pub burn_in: usize,
    pub bootstrap: usize,
}

impl ExperimentPlan {
    pub fn new(system: SuspensionSystem, observable: ObservableSpec, ns: Vec<u64>, seed: u64) -> Self {
        Self {
            system,
            observable,
            q: 1.0,
            ns,
            samples: 256,
            grid_m: 16,
            seed,
            variance: VarianceSource::Ulam { cells: 1024 },
            centering_budget: 100_000,
            burn_in: DEFAULT_BURN_IN,
            bootstrap: DEFAULT_BOOTSTRAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.len() < 2 {
            return Err(Error::Config("a rate experiment needs at least two values of n".into()));
        }
        if self.ns.windows(2).any(|w| w[1] <= w[0]) || self.ns[0] < 1 {
            return Err(Error::Config("n values must be positive and strictly increasing".into()));
        }
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config(format!("samples per n must be at least {MIN_SAMPLES}, got {}", self.samples)));
        }
        if self.grid_m > 1 && self.samples > ASSIGNMENT_CAP {
            return Err(Error::Size { size: self.samples, cap: ASSIGNMENT_CAP, hint: "reduce samples per n or use grid_m = 1" });
        }
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::Config(format!("q must be at least 1, got {}", self.q)));
        }
        if self.grid_m < 1 {
            return Err(Error::Config("path grid needs at least one interval".into()));
        }
        if !self.observable.is_centered() && self.centering_budget < MIN_CENTERING_BUDGET {
            return Err(Error::Config(format!("centering budget must be at least {MIN_CENTERING_BUDGET}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: u64,
    pub q: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub grid_m: usize,
    pub solver: Solver,
    pub seed: u64,
    /// Brownian-vs-Brownian distance at the same sample size.
    pub floor: f64,
    /// `𝒲_q` between the time-one marginals of the two samples.
    pub marginal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub sigma2: f64,
    pub variance_source: String,
    /// Mean subtracted from the observable.
    pub mean_offset: f64,
}

pub const RATE_TABLE_HEADER: &str = "n,q,estimate,stderr,N,grid_m,solver,seed,floor";

impl RateTable {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{RATE_TABLE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:e},{:e},{},{},{},{},{:e}",
                r.n,
                r.q,
                r.estimate,
                r.stderr,
                r.samples,
                r.grid_m,
                r.solver.tag(),
                r.seed,
                r.floor
            )?;
        }
        Ok(())
    }
}

/// Flow variance `σ²` from the Ulam decomposition of the excursion integral
/// `ψ(y) = ∫_0^{h(y)} v(y, s) ds`: `σ²_flow = σ²_ψ / ∫ h dμ`.
pub fn ulam_flow_variance(system: &SuspensionSystem, v: &ObservableSpec, cells: usize) -> Result<f64> {
    ulam_statistics(system, v, cells, false).map(|(_, s)| s)
}

/// Like [`ulam_flow_variance`], first centering `v` (when `center` is set)
/// by `∫ ψ dμ / ∫ h dμ` against the Ulam invariant density of the same grid.
pub fn ulam_statistics(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    cells: usize,
    center: bool,
) -> Result<(ObservableSpec, f64)> {
    let transfer = ulam::Transfer::new(ulam::build_ulam(system.base(), cells)?, 1e-13)?;
    let (lo, hi) = transfer.operator().domain();
    let mut err = None;
    let roof = GriddedFunction::from_fn(lo, hi, cells, |y| {
        system.roof_at(y).unwrap_or_else(|e| {
            err.get_or_insert(e);
            1.0
        })
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let mean_roof = transfer.mean(&roof);
    let mut v = *v;
    if center {
        let raw = ulam::raw_observable_on_grid(system, &v, &transfer, GridLayout::Base)?;
        v = v.with_estimated_mean(transfer.mean(&raw) / mean_roof, 0.0, 0.0, MeanProvenance::Ulam { cells });
    }
    let psi = ulam::observable_on_grid(system, &v, &transfer, GridLayout::Base)?;
    let dec = ulam::solve_coboundary(&psi, &transfer, ulam::DEFAULT_SERIES_TOLERANCE, ulam::DEFAULT_MAX_TERMS)?;
    Ok((v, dec.sigma2 / mean_roof))
}

/// `(Ŵ, stderr)` for a precomputed `N × N` matrix of `d^q`; the stderr is the
/// standard deviation of `resamples` bootstrap replicates that resample both
/// clouds with replacement, and is 0 for `N = 1`.
pub fn estimate_with_bootstrap(
    cost: &[f64],
    n: usize,
    q: f64,
    resamples: usize,
    seed: u64,
    key: u64,
) -> (f64, f64) {
    let estimate = assignment_on_cost(cost, n, q).distance;
    if n < 2 || resamples < 2 {
        return (estimate, 0.0);
    }
    let replicates: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Purpose::Bootstrap, key, b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let cols: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let sub: Vec<f64> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| cost[i * n + j])).collect();
            assignment_on_cost(&sub, n, q).distance
        })
        .collect();
    (estimate, std_dev(&replicates))
}

fn brownian_cloud(seed: u64, purpose: Purpose, n: u64, count: usize, sigma: f64, m: usize) -> Result<Vec<PathSample>> {
    (0..count)
        .into_par_iter()
        .map(|i| sample_brownian(sigma, m, &mut stream(seed, purpose, n, i as u64)))
        .collect()
}

/// Independent `W_n` paths, each from its own initial state and stream.
pub fn wn_cloud(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    n: u64,
    count: usize,
    m: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Vec<PathSample>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut init = stream(seed, Purpose::InitialState, n, i as u64);
            let state0 = system.sample_initial_states(1, burn_in, &mut init)?[0];
            let mut rng = stream(seed, Purpose::Trajectory, n, i as u64);
            wn_path(system, v, n as f64, m, state0, &mut rng)
        })
        .collect()
}

/// Resolves the centered observable and the reference variance of a plan.
/// With an Ulam variance source an uncentered observable is centered on the
/// same grid; otherwise by a Birkhoff average over the centering budget.
pub fn prepare(plan: &ExperimentPlan) -> Result<(ObservableSpec, f64)> {
    let birkhoff = || -> Result<ObservableSpec> {
        if plan.observable.is_centered() {
            return Ok(plan.observable);
        }
        let mut rng = stream(plan.seed, Purpose::Centering, 0, 0);
        center_observable(&plan.observable, &plan.system, plan.centering_budget, &mut rng)
    };
    let (v, sigma2) = match plan.variance {
        VarianceSource::Ulam { cells } => {
            ulam_statistics(&plan.system, &plan.observable, cells, !plan.observable.is_centered())?
        }
        VarianceSource::GreenKubo { steps } => {
            let v = birkhoff()?;
            let mut rng = stream(plan.seed, Purpose::GreenKubo, 0, 0);
            let s = flow_green_kubo(&plan.system, &v, steps, &mut rng)?;
            (v, s)
        }
        VarianceSource::Fixed(s) => (birkhoff()?, s),
    };
    if !(sigma2 > MIN_VARIANCE) {
        return Err(Error::Config(format!(
            "observable variance {sigma2:.3e} is degenerate (needs > {MIN_VARIANCE})"
        )));
    }
    Ok((v, sigma2))
}

/// `(Ŵ, stderr)` on the line by the sorted coupling, with the same
/// two-cloud bootstrap as [`estimate_with_bootstrap`].
pub fn estimate_1d_with_bootstrap(a: &[f64], b: &[f64], q: f64, resamples: usize, seed: u64, key: u64) -> Result<(f64, f64)> {
    let estimate = wasserstein_1d(&EmpiricalMeasure::new(a.to_vec())?, &EmpiricalMeasure::new(b.to_vec())?, q)?.distance;
    let n = a.len();
    if n < 2 || resamples < 2 {
        return Ok((estimate, 0.0));
    }
    let replicates = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, Purpose::Bootstrap, key, r as u64);
            let ra: Vec<f64> = (0..n).map(|_| a[rng.gen_range(0..n)]).collect();
            let rb: Vec<f64> = (0..n).map(|_| b[rng.gen_range(0..n)]).collect();
            Ok(wasserstein_1d(&EmpiricalMeasure::new(ra)?, &EmpiricalMeasure::new(rb)?, q)?.distance)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((estimate, std_dev(&replicates)))
}

/// One row of the table for horizon `n`. With `grid_m = 1` the sup metric
/// reduces to the terminal value and the sorted coupling is exact.
pub fn rate_row(plan: &ExperimentPlan, v: &ObservableSpec, sigma: f64, n: u64) -> Result<RateRow> {
    let (count, m, q) = (plan.samples, plan.grid_m, plan.q);
    if m > 1 && count > ASSIGNMENT_CAP {
        return Err(Error::Size { size: count, cap: ASSIGNMENT_CAP, hint: "reduce samples per n" });
    }
    let paths = wn_cloud(&plan.system, v, n, count, m, plan.seed, plan.burn_in)?;
    let brownian = brownian_cloud(plan.seed, Purpose::Brownian, n, count, sigma, m)?;
    let reference = brownian_cloud(plan.seed, Purpose::BrownianFloor, n, count, sigma, m)?;

    let terminal = |cloud: &[PathSample]| cloud.iter().map(|p| p.terminal()).collect::<Vec<f64>>();
    let (tp, tb) = (terminal(&paths), terminal(&brownian));
    let marginal = wasserstein_1d(&EmpiricalMeasure::new(tp.clone())?, &EmpiricalMeasure::new(tb.clone())?, q)?.distance;

    let (estimate, stderr, floor, solver) = if m == 1 {
        let (est, se) = estimate_1d_with_bootstrap(&tp, &tb, q, plan.bootstrap, plan.seed, n)?;
        let floor = wasserstein_1d(&EmpiricalMeasure::new(terminal(&reference))?, &EmpiricalMeasure::new(tb)?, q)?.distance;
        (est, se, floor, Solver::Sorted)
    } else {
        let cost = cost_matrix(&paths, &brownian, q, &GridSup);
        let (est, se) = estimate_with_bootstrap(&cost, count, q, plan.bootstrap, plan.seed, n);
        let floor_cost = cost_matrix(&reference, &brownian, q, &GridSup);
        let floor = assignment_on_cost(&floor_cost, count, q).distance;
        (est, se, floor, Solver::Assignment)
    };
    Ok(RateRow { n, q, estimate, stderr, samples: count, grid_m: m, solver, seed: plan.seed, floor, marginal })
}

pub fn run_rate_experiment(plan: &ExperimentPlan) -> Result<RateTable> {
    plan.validate()?;
    let (v, sigma2) = prepare(plan)?;
    let sigma = sigma2.sqrt();
    let rows = plan.ns.iter().map(|&n| rate_row(plan, &v, sigma, n)).collect::<Result<Vec<_>>>()?;
    Ok(RateTable { rows, sigma2, variance_source: plan.variance.tag(), mean_offset: v.offset() })
}

/// Treatment of the `(log n)^γ` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Free,
    FixedHalf,
    Zero,
}

impl FitMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(FitMode::Free),
            "half" | "fixed_half" => Ok(FitMode::FixedHalf),
            "zero" => Ok(FitMode::Zero),
            other => Err(Error::input(format!("unknown fit mode '{other}' (free | half | zero)"))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            FitMode::Free => "free",
            FitMode::FixedHalf => "fixed_half",
            FitMode::Zero => "zero",
        }
    }
}

/// `Ŵ ≈ C n^α (log n)^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub alpha: f64,
    pub log_c: f64,
    pub gamma: f64,
    pub r2: f64,
    pub mode: FitMode,
    /// Rows that passed the floor filter and entered the fit.
    pub rows_used: usize,
}

impl RateFit {
    /// Flat JSON record `{"alpha":…,"logC":…,"gamma":…,"r2":…,"mode":…}`.
    pub fn to_record(&self) -> String {
        format!(
            "{{\"alpha\":{},\"logC\":{},\"gamma\":{},\"r2\":{},\"mode\":\"{}\"}}",
            self.alpha,
            self.log_c,
            self.gamma,
            self.r2,
            self.mode.tag()
        )
    }
}

/// Weighted least squares `Σ w (y − Xβ)²` by normal equations with
/// partial pivoting; `None` when the design is numerically singular.
fn weighted_least_squares(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let p = x[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for ((row, &yi), &wi) in x.iter().zip(y).zip(w) {
        for r in 0..p {
            for c in 0..p {
                a[r][c] += wi * row[r] * row[c];
            }
            a[r][p] += wi * row[r] * yi;
        }
    }
    // singularity test on the correlation-scaled Gram matrix
    let scale: Vec<f64> = (0..p).map(|k| a[k][k].sqrt()).collect();
    if scale.iter().any(|&s| s == 0.0) {
        return None;
    }
    let mut g = vec![vec![0.0; p]; p];
    for r in 0..p {
        for c in 0..p {
            g[r][c] = a[r][c] / (scale[r] * scale[c]);
        }
    }
    let mut det = 1.0;
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| g[i][col].abs().total_cmp(&g[j][col].abs()))?;
        g.swap(col, piv);
        let d = g[col][col];
        det *= d;
        if d.abs() < 1e-300 {
            return None;
        }
        for r in col + 1..p {
            let f = g[r][col] / d;
            for c in col..p {
                g[r][c] -= f * g[col][c];
            }
        }
    }
    if det.abs() < 1e-9 {
        return None;
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..p).map(|k| a[k][p] / a[k][k]).collect())
}

/// Weighted least squares of `log Ŵ` on `log n` (and `log log n` unless
/// `γ = 0`). Rows at or below twice their floor are dropped first. Weights
/// are `(Ŵ/stderr)²`, the inverse delta-method variance of `log Ŵ`; if any
/// used row has zero stderr the fit is unweighted.
pub fn fit_rate(table: &RateTable, mode: FitMode) -> Result<RateFit> {
    let used: Vec<&RateRow> = table.rows.iter().filter(|r| r.estimate > 2.0 * r.floor).collect();
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 rows above twice the floor, have {} of {}",
            used.len(),
            table.rows.len()
        )));
    }
    if let Some(r) = used.iter().find(|r| !(r.estimate > 0.0) || r.n < 3) {
        return Err(Error::Fit(format!("row n = {} cannot enter a log-log fit", r.n)));
    }
    let unweighted = used.iter().any(|r| !(r.stderr > 0.0));
    let weights: Vec<f64> =
        used.iter().map(|r| if unweighted { 1.0 } else { (r.estimate / r.stderr).powi(2) }).collect();
    let ln = |r: &RateRow| (r.n as f64).ln();
    let y: Vec<f64> = used
        .iter()
        .map(|r| {
            let base = r.estimate.ln();
            if mode == FitMode::FixedHalf {
                base - 0.5 * ln(r).ln()
            } else {
                base
            }
        })
        .collect();
    let x: Vec<Vec<f64>> = used
        .iter()
        .map(|r| match mode {
            FitMode::Free => vec![1.0, ln(r), ln(r).ln()],
            _ => vec![1.0, ln(r)],
        })
        .collect();
    let beta = weighted_least_squares(&x, &y, &weights).ok_or_else(|| {
        Error::Fit(match mode {
            FitMode::Free => "collinear regressors: n range too narrow for a free log exponent; use gamma fixed".into(),
            _ => "collinear regressors: need at least two distinct n".into(),
        })
    })?;
    let gamma = match mode {
        FitMode::Free => beta[2],
        FitMode::FixedHalf => 0.5,
        FitMode::Zero => 0.0,
    };
    let wsum: f64 = weights.iter().sum();
    let ybar = y.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((row, &yi), &wi) in x.iter().zip(&y).zip(&weights) {
        let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        ss_res += wi * (yi - fit).powi(2);
        ss_tot += wi * (yi - ybar).powi(2);
    }
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(RateFit { alpha: beta[1], log_c: beta[0], gamma, r2, mode, rows_used: used.len() })
}

/// Shape of the predicted bound: `n^{−1/2+1/p} (log n)^{1/2}` for
/// `2 < p < 4` and `n^{−1/4} (log n)^{1/2}` for `p ≥ 4`.
pub fn theoretical_rate(p: f64, n: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::input(format!("order p must exceed 2, got {p}")));
    }
    if !(n >= 3.0) {
        return Err(Error::input(format!("n must be at least 3, got {n}")));
    }
    let exponent = if p < 4.0 { -0.5 + 1.0 / p } else { -0.25 };
    Ok(n.powf(exponent) * n.ln().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BaseMap, Roof};
    use crate::process::ObservableKind;

    fn synthetic(f: impl Fn(f64) -> f64) -> RateTable {
        let rows = (4..12)
            .map(|k| {
                let n = 1u64 << k;
                RateRow {
                    n,
                    q: 1.0,
                    estimate: f(n as f64),
                    stderr: 0.01,
                    samples: 64,
                    grid_m: 16,
                    solver: Solver::Assignment,
                    seed: 0,
                    floor: 0.0,
                    marginal: 0.0,
                }
            })
            .collect();
        RateTable { rows, sigma2: 1.0, variance_source: "fixed:1".into(), mean_offset: 0.0 }
    }

    #[test]
    fn recovers_exact_models() {
        let t = synthetic(|n| n.powf(-0.25) * n.ln().sqrt());
        let f = fit_rate(&t, FitMode::FixedHalf).unwrap();
        assert!((f.alpha + 0.25).abs() < 1e-10 && f.log_c.abs() < 1e-10 && f.r2 == 1.0, "{f:?}");
        let t = synthetic(|n| 3.0 * n.powf(-0.5));
        let f = fit_rate(&t, FitMode::Zero).unwrap();
        assert!((f.alpha + 0.5).abs() < 1e-10 && (f.log_c - 3f64.ln()).abs() < 1e-10, "{f:?}");
        let t = synthetic(|n| 2.0 * n.powf(-0.3) * n.ln().powf(0.7));
        let f = fit_rate(&t, FitMode::Free).unwrap();
        assert!((f.alpha + 0.3).abs() < 1e-8 && (f.gamma - 0.7).abs() < 1e-8, "{f:?}");
    }

    #[test]
    fn floor_filter_and_row_count() {
        let mut t = synthetic(|n| n.powf(-0.5));
        for r in &mut t.rows {
            r.floor = 0.02;
        }
        // n^{-1/2} > 0.04 only for n < 625: rows 16..512
        let f = fit_rate(&t, FitMode::Zero).unwrap();
        assert_eq!(f.rows_used, 6);
        t.rows.truncate(2);
        assert!(matches!(fit_rate(&t, FitMode::Free), Err(Error::Fit(_))));
    }

    #[test]
    fn free_gamma_on_narrow_range_is_collinear() {
        let mut t = synthetic(|n| n.powf(-0.25));
        t.rows = vec![t.rows[3].clone(), t.rows[3].clone(), t.rows[4].clone()];
        let err = fit_rate(&t, FitMode::Free).unwrap_err();
        assert!(err.to_string().contains("gamma fixed"), "{err}");
    }

    #[test]
    fn theoretical_rate_shape() {
        for n in [3.0, 10.0, 1e6] {
            assert_eq!(theoretical_rate(4.0, n).unwrap(), theoretical_rate(5.0, n).unwrap());
            let below = theoretical_rate(4.0 - 1e-12, n).unwrap();
            assert!((below - theoretical_rate(4.0, n).unwrap()).abs() < 1e-9);
        }
        let e2 = std::f64::consts::E.powi(2);
        let want = (2.0f64 * (-1.0 / 6.0)).exp() * 2f64.sqrt();
        assert!((theoretical_rate(3.0, e2).unwrap() - want).abs() < 1e-14);
        assert!(theoretical_rate(2.0, 10.0).is_err());
        assert!(theoretical_rate(3.0, 2.0).is_err());
    }

    #[test]
    fn single_pair_has_zero_stderr() {
        let (est, se) = estimate_with_bootstrap(&[0.7], 1, 1.0, 200, 1, 1);
        assert_eq!((est, se), (0.7, 0.0));
    }

    #[test]
    fn plan_validation() {
        let sys = SuspensionSystem::new(BaseMap::Doubling, Roof::Constant(1.0));
        let v = ObservableSpec::new(ObservableKind::Cos).with_analytic_mean(0.0);
        let mut plan = ExperimentPlan::new(sys, v, vec![16, 32], 1);
        assert!(plan.validate().is_ok());
        plan.ns = vec![32, 16];
        assert!(plan.validate().is_err());
        plan.ns = vec![16];
        assert!(plan.validate().is_err());
        plan.ns = vec![16, 32];
        plan.samples = 8;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn degenerate_variance_is_config_error() {
        let sys = SuspensionSystem::new(BaseMap::Doubling, Roof::Constant(1.0));
        let v = ObservableSpec::new(ObservableKind::Zero);
        let mut plan = ExperimentPlan::new(sys, v, vec![16, 32], 1);
        plan.variance = VarianceSource::Ulam { cells: 64 };
        assert!(matches!(run_rate_experiment(&plan), Err(Error::Config(_))));
    }

    #[test]
    fn small_experiment_is_deterministic() {
        let sys = SuspensionSystem::new(BaseMap::Doubling, Roof::Constant(1.0));
        let v = ObservableSpec::new(ObservableKind::Cos).with_analytic_mean(0.0);
        let mut plan = ExperimentPlan::new(sys, v, vec![8, 16, 32], 3);
        plan.samples = 32;
        plan.bootstrap = 20;
        plan.variance = VarianceSource::Ulam { cells: 256 };
        let a = run_rate_experiment(&plan).unwrap();
        let b = run_rate_experiment(&plan).unwrap();
        assert_eq!(a, b);
        assert!((a.sigma2 - 0.5).abs() < 1e-3);
        assert!(a.rows.iter().all(|r| r.estimate >= 0.0 && r.stderr >= 0.0 && r.floor > 0.0));
    }
}
