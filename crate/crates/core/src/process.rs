//! Observables on suspensions, their time integrals `v_t = ∫_0^t v∘Ψ_s ds`,
//! and the rescaled path processes built from them.
//!
//! `W_n(t) = n^{-1/2} v_{nt}` is sampled on a uniform grid of `m + 1` times.
//! The martingale path `X_n` is the polygon through the partial sums of
//! `ζ_{n,j} = m(F_{n−j} x) / (√n σ)`, the orbit read backwards in time.

use rand::Rng;

use crate::dynamics::{FlowState, SuspensionSystem, Trajectory, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::stats::green_kubo;

/// Maximal quadrature step (flow-time units) for height-dependent observables.
pub const QUADRATURE_STEP: f64 = 0.02;

/// Smallest flow-time budget accepted by [`center_observable`].
pub const MIN_CENTERING_BUDGET: u64 = 10_000;

const TAU: f64 = std::f64::consts::TAU;

/// Pointwise evaluators shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservableKind {
    Zero,
    Constant(f64),
    /// `cos(2π y)`
    Cos,
    /// `y`
    Linear,
    /// `(1 − u/h(y)) cos(2π y) + (u/h(y)) cos(2π T y)`, continuous across the
    /// roof identification.
    CosBlend,
}

impl ObservableKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(ObservableKind::Zero),
            "cos" => Ok(ObservableKind::Cos),
            "linear" | "y" => Ok(ObservableKind::Linear),
            "cos_blend" => Ok(ObservableKind::CosBlend),
            other => match other.strip_prefix("const:") {
                Some(c) => c
                    .parse::<f64>()
                    .map(ObservableKind::Constant)
                    .map_err(|_| Error::input(format!("bad constant observable '{other}'"))),
                None => Err(Error::input(format!("unknown observable '{other}'"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            ObservableKind::Zero => "zero".into(),
            ObservableKind::Constant(c) => format!("const:{c}"),
            ObservableKind::Cos => "cos".into(),
            ObservableKind::Linear => "linear".into(),
            ObservableKind::CosBlend => "cos_blend".into(),
        }
    }

    /// True when the value depends on the base point only.
    pub fn height_independent(&self) -> bool {
        !matches!(self, ObservableKind::CosBlend)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanProvenance {
    /// Exact value known in closed form.
    Analytic,
    /// Birkhoff time average over the given flow time.
    Birkhoff { flow_time: f64 },
    /// Integral against the Ulam invariant density on this many cells.
    Ulam { cells: usize },
}

/// The subtracted mean and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub value: f64,
    pub stderr: f64,
    /// Declared tolerance on the residual mean of the centered observable.
    pub tolerance: f64,
    pub provenance: MeanProvenance,
}

/// An observable `v` with Hölder exponent `eta` and a subtracted offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSpec {
    kind: ObservableKind,
    eta: f64,
    offset: f64,
    mean: Option<MeanEstimate>,
}

impl ObservableSpec {
    pub fn new(kind: ObservableKind) -> Self {
        Self { kind, eta: 1.0, offset: 0.0, mean: None }
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::input(format!("regularity must lie in (0, 1], got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    /// Subtracts a known mean.
    pub fn with_analytic_mean(mut self, value: f64) -> Self {
        self.offset = value;
        self.mean = Some(MeanEstimate { value, stderr: 0.0, tolerance: 0.0, provenance: MeanProvenance::Analytic });
        self
    }

    /// Subtracts an estimated mean on top of the current offset.
    pub fn with_estimated_mean(mut self, mean: f64, stderr: f64, tolerance: f64, provenance: MeanProvenance) -> Self {
        self.offset += mean;
        self.mean = Some(MeanEstimate { value: self.offset, stderr, tolerance, provenance });
        self
    }

    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn mean(&self) -> Option<&MeanEstimate> {
        self.mean.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.mean.is_some() || self.kind == ObservableKind::Zero
    }

    pub fn height_independent(&self) -> bool {
        self.kind.height_independent()
    }

    /// `v(y, u)` minus the stored offset.
    pub fn eval(&self, system: &SuspensionSystem, state: &FlowState) -> f64 {
        let raw = match self.kind {
            ObservableKind::Zero => 0.0,
            ObservableKind::Constant(c) => c,
            ObservableKind::Cos => (TAU * state.y).cos(),
            ObservableKind::Linear => state.y,
            ObservableKind::CosBlend => {
                let h = system.roof_at(state.y).unwrap_or(1.0);
                let ty = system.base().apply(state.y).unwrap_or(state.y);
                let w = state.u / h;
                (1.0 - w) * (TAU * state.y).cos() + w * (TAU * ty).cos()
            }
        };
        raw - self.offset
    }
}

/// `∫_{ua}^{ub} v(y, u) du` over one excursion above `y`.
fn excursion_integral(system: &SuspensionSystem, v: &ObservableSpec, y: f64, ua: f64, ub: f64) -> f64 {
    let len = ub - ua;
    if len <= 0.0 {
        return 0.0;
    }
    if v.height_independent() {
        return v.eval(system, &FlowState { y, u: ua }) * len;
    }
    let pieces = (len / QUADRATURE_STEP).ceil().max(1.0) as usize;
    let h = len / pieces as f64;
    let f = |u: f64| v.eval(system, &FlowState { y, u });
    (0..pieces)
        .map(|k| {
            let a = ua + k as f64 * h;
            h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h))
        })
        .sum()
}

/// Cumulative integrals `v_t` at the nondecreasing times `times ⊂ [0, horizon]`.
///
/// Excursion boundaries split the integral exactly; inside an excursion the
/// integrand is integrated in closed form (height-independent observables) or
/// by composite Simpson with step at most [`QUADRATURE_STEP`].
pub fn integrate_on_times(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    trajectory: &Trajectory,
    times: &[f64],
) -> Result<Vec<f64>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::input("integration times must be nonnegative and nondecreasing"));
    }
    if times.last().is_some_and(|&t| t > trajectory.horizon()) {
        return Err(Error::input("integration time beyond the recorded trajectory"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    let mut next = 0usize;
    for k in 0..trajectory.excursions() {
        if next == times.len() {
            break;
        }
        let (y, start, end) = trajectory.excursion(k);
        let mut s = start.max(0.0);
        while next < times.len() && times[next] <= end {
            let t = times[next];
            acc += excursion_integral(system, v, y, s - start, t - start);
            s = t;
            out.push(acc);
            next += 1;
        }
        acc += excursion_integral(system, v, y, s - start, end - start);
    }
    if out.len() != times.len() {
        return Err(Error::numerical("trajectory ended before the last integration time"));
    }
    Ok(out)
}

/// `W_n` on the grid `{i/m}` along a recorded trajectory of length `≥ n`.
pub fn wn_path_on(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    n: f64,
    m: usize,
    trajectory: &Trajectory,
) -> Result<PathSample> {
    check_grid(n, m)?;
    let times: Vec<f64> = (0..=m).map(|i| n * i as f64 / m as f64).collect();
    let scale = 1.0 / n.sqrt();
    let values: Vec<f64> = integrate_on_times(system, v, trajectory, &times)?
        .into_iter()
        .map(|x| x * scale)
        .collect();
    PathSample::from_values(&values)
}

fn check_grid(n: f64, m: usize) -> Result<()> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::input(format!("n must be at least 1, got {n}")));
    }
    if m == 0 {
        return Err(Error::input("path grid needs at least one interval"));
    }
    if n / (m as f64) < QUADRATURE_STEP {
        return Err(Error::Config(format!(
            "grid spacing n/m = {} is finer than the quadrature step {QUADRATURE_STEP}",
            n / m as f64
        )));
    }
    Ok(())
}

/// `W_n(t) = n^{-1/2} ∫_0^{nt} v∘Ψ_s ds` from `state0`.
pub fn wn_path<R: Rng + ?Sized>(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    n: f64,
    m: usize,
    state0: FlowState,
    rng: &mut R,
) -> Result<PathSample> {
    check_grid(n, m)?;
    let trajectory = system.trajectory(state0, n, rng)?;
    wn_path_on(system, v, n, m, &trajectory)
}

/// Polygonal martingale path
/// `X_n(t) = Σ_{j ≤ [nt]} ζ_{n,j} + (nt − [nt]) ζ_{n,[nt]+1}` with
/// `ζ_{n,j} = m(orbit[n − j]) / (√n σ)`, where `orbit[k]` is the state at
/// time `k` and `n = orbit.len()`.
pub fn martingale_path(
    orbit: &[FlowState],
    m_func: impl Fn(&FlowState) -> f64,
    sigma: f64,
    m: usize,
) -> Result<PathSample> {
    let n = orbit.len();
    if n == 0 {
        return Err(Error::input("martingale path needs a nonempty orbit"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    if m == 0 {
        return Err(Error::input("path grid needs at least one interval"));
    }
    let scale = 1.0 / ((n as f64).sqrt() * sigma);
    let zeta: Vec<f64> = (1..=n).map(|j| m_func(&orbit[n - j]) * scale).collect();
    let mut partial = Vec::with_capacity(n + 1);
    partial.push(0.0);
    let mut acc = 0.0;
    for z in &zeta {
        acc += z;
        partial.push(acc);
    }
    let values: Vec<f64> = (0..=m)
        .map(|i| {
            // nt = n i / m, split exactly into integer and fractional parts
            let whole = n * i / m;
            let frac = ((n * i) % m) as f64 / m as f64;
            let mut x = partial[whole];
            if frac > 0.0 {
                x += frac * zeta[whole];
            }
            x
        })
        .collect();
    PathSample::from_values(&values)
}

/// Integrals of `v` over the unit time intervals `[k, k+1)`, `k < count`,
/// starting from `start`. The orbit is generated in chunks so memory stays
/// bounded for long runs.
pub fn unit_increments<R: Rng + ?Sized>(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    start: FlowState,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    const CHUNK: usize = 100_000;
    let mut out = Vec::with_capacity(count);
    let mut state = start;
    while out.len() < count {
        let len = CHUNK.min(count - out.len());
        let trajectory = system.trajectory(state, len as f64, rng)?;
        let times: Vec<f64> = (0..=len).map(|k| k as f64).collect();
        let cumulative = integrate_on_times(system, v, &trajectory, &times)?;
        out.extend(cumulative.windows(2).map(|w| w[1] - w[0]));
        state = trajectory.state_at(len as f64);
    }
    Ok(out)
}

/// Subtracts a Birkhoff-average estimate of `∫ v dμ` computed over `budget`
/// flow-time units; the recorded tolerance is three standard errors, with
/// the standard error taken from the long-run variance of unit increments.
pub fn center_observable<R: Rng + ?Sized>(
    v: &ObservableSpec,
    system: &SuspensionSystem,
    budget: u64,
    rng: &mut R,
) -> Result<ObservableSpec> {
    if budget < MIN_CENTERING_BUDGET {
        return Err(Error::input(format!("centering budget must be at least {MIN_CENTERING_BUDGET}, got {budget}")));
    }
    let start = system.sample_initial_states(1, DEFAULT_BURN_IN, rng)?[0];
    let increments = unit_increments(system, v, start, budget as usize, rng)?;
    let t = budget as f64;
    let mean = increments.iter().sum::<f64>() / t;
    let stderr = (green_kubo(&increments) / t).sqrt();
    Ok(v.with_estimated_mean(mean, stderr, 3.0 * stderr, MeanProvenance::Birkhoff { flow_time: t }))
}

/// Green–Kubo estimate of `σ² = lim t^{-1} E v_t²` from `steps` unit
/// increments along one long orbit.
pub fn flow_green_kubo<R: Rng + ?Sized>(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    steps: usize,
    rng: &mut R,
) -> Result<f64> {
    let start = system.sample_initial_states(1, DEFAULT_BURN_IN, rng)?[0];
    let increments = unit_increments(system, v, start, steps, rng)?;
    Ok(green_kubo(&increments))
}

/// `sup_{0 ≤ t ≤ horizon} |v_t|` along a trajectory.
///
/// Height-independent observables give piecewise-linear `v_t`, whose sup is
/// attained at excursion boundaries; otherwise the sup is taken over those
/// boundaries together with a grid of step [`QUADRATURE_STEP`].
pub fn running_sup(
    system: &SuspensionSystem,
    v: &ObservableSpec,
    trajectory: &Trajectory,
    horizon: f64,
) -> Result<f64> {
    let mut times: Vec<f64> = (0..trajectory.excursions())
        .map(|k| trajectory.excursion(k).2)
        .filter(|&t| t > 0.0 && t < horizon)
        .collect();
    if !v.height_independent() {
        let steps = (horizon / QUADRATURE_STEP).ceil() as usize;
        times.extend((1..steps).map(|k| k as f64 * QUADRATURE_STEP));
        times.sort_by(f64::total_cmp);
    }
    times.push(horizon);
    let values = integrate_on_times(system, v, trajectory, &times)?;
    Ok(values.iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
}
