//! Interval maps, the first-return map of the intermittent (LSV) map, and
//! suspension semiflows built over them.
//!
//! Base maps act on the unit interval, except the induced map which acts on
//! the inducing domain `Y = [1/2, 1]`. A suspension flows upward at unit
//! speed from a base point `y` until it reaches the roof, then jumps to
//! `(T y, 0)`.

use rand::Rng;

use crate::error::{Error, Result};

/// Iteration cap for a single first return of the induced map.
pub const INDUCED_ITERATION_CAP: u64 = 10_000_000;

/// Default number of base-map iterations discarded before sampling.
pub const DEFAULT_BURN_IN: usize = 1_000;

/// Left end of the inducing domain `Y = [1/2, 1]`.
pub const INDUCING_LO: f64 = 0.5;
pub const INDUCING_HI: f64 = 1.0;

const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

/// The Liverani–Saussol–Vaienti map
/// `x ↦ x(1 + 2^β x^β)` on `[0, 1/2)` and `x ↦ 2x − 1` on `[1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsvMap {
    beta: f64,
    coefficient: f64,
}

impl LsvMap {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::input(format!("LSV parameter beta must be positive, got {beta}")));
        }
        Ok(Self {
            beta,
            coefficient: 2f64.powf(beta),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Supremum of the orders `p` for which the map is nonuniformly
    /// expanding; the return time lies in `L^p` for every `p < 1/β`.
    pub fn max_order(&self) -> f64 {
        1.0 / self.beta
    }

    /// One step of the map. The branch point `1/2` belongs to the linear branch.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x < 0.5 {
            let y = x * (1.0 + self.coefficient * x.powf(self.beta));
            // rounding can push the left branch a hair past 1
            y.min(1.0)
        } else {
            2.0 * x - 1.0
        }
    }

    /// Inverse of the left branch, mapping `[0, 1]` onto `[0, 1/2]`.
    ///
    /// Newton's method on the convex increasing function
    /// `x + 2^β x^{1+β} − z`, started to the right of the root, decreases
    /// monotonically to it.
    pub fn left_inverse(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= 1.0 {
            return 0.5;
        }
        let mut x = z.min(0.5);
        for _ in 0..200 {
            let xb = x.powf(self.beta);
            let f = x + self.coefficient * x * xb - z;
            let df = 1.0 + self.coefficient * (1.0 + self.beta) * xb;
            let next = x - f / df;
            if !(next < x) || next <= 0.0 {
                break;
            }
            x = next;
        }
        x
    }

    /// Inverse of the linear branch, mapping `[0, 1]` onto `[1/2, 1]`.
    #[inline]
    pub fn right_inverse(&self, z: f64) -> f64 {
        0.5 * (z + 1.0)
    }
}

/// `x ↦ x(1 + 2^β x^β)` for `x < 1/2`, `2x − 1` otherwise.
pub fn lsv_step(x: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::input(format!("LSV map is defined on [0, 1], got x = {x}")));
    }
    Ok(LsvMap::new(beta)?.apply(x))
}

/// The doubling map `x ↦ 2x mod 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DoublingMap;

impl DoublingMap {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        let y = 2.0 * x;
        if y >= 1.0 {
            y - 1.0
        } else {
            y
        }
    }

    /// Doubling with a fresh random bit shifted in at the 2^-53 position.
    ///
    /// In floating point `2x mod 1` discards one mantissa bit per step and
    /// reaches the fixed point 0 after at most 53 steps. Viewing `x` as a
    /// 53-bit binary expansion, the doubling map is the left shift, and a
    /// Lebesgue-typical point has i.i.d. digits beyond the stored ones; this
    /// step reveals the next digit from `rng`.
    #[inline]
    pub fn apply_refreshed<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        let k = (x * TWO_POW_53) as u64;
        let bit = rng.gen::<bool>() as u64;
        let next = ((k << 1) & ((1u64 << 53) - 1)) | bit;
        next as f64 / TWO_POW_53
    }
}

/// Fractional part of `2x`.
pub fn doubling_step(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::input(format!("doubling map is defined on [0, 1), got x = {x}")));
    }
    Ok(DoublingMap.apply(x))
}

/// One branch of the induced map: the subinterval `Y_r` on which the first
/// return time equals `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedBranch {
    pub return_time: u64,
    pub lo: f64,
    pub hi: f64,
}

/// First-return map `F = T^r` of the LSV map to `Y = [1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedMap {
    lsv: LsvMap,
    cap: u64,
}

impl InducedMap {
    pub fn new(beta: f64) -> Result<Self> {
        Ok(Self {
            lsv: LsvMap::new(beta)?,
            cap: INDUCED_ITERATION_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn lsv(&self) -> &LsvMap {
        &self.lsv
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Returns `(F y, r(y))`.
    pub fn apply(&self, y: f64) -> Result<(f64, u64)> {
        self.excursion(y, |_| {}).map(|(fy, r)| (fy, r))
    }

    /// Runs one excursion from `y`, calling `visit` on each point
    /// `y, T y, …, T^{r-1} y` before returning `(T^r y, r)`.
    pub fn excursion(&self, y: f64, mut visit: impl FnMut(f64)) -> Result<(f64, u64)> {
        if !(INDUCING_LO..=INDUCING_HI).contains(&y) {
            return Err(Error::input(format!("induced map is defined on [1/2, 1], got y = {y}")));
        }
        visit(y);
        let mut x = self.lsv.apply(y);
        let mut r = 1u64;
        while x < INDUCING_LO {
            if r >= self.cap {
                return Err(Error::Truncation { cap: self.cap, start: y });
            }
            visit(x);
            x = self.lsv.apply(x);
            r += 1;
        }
        Ok((x, r))
    }

    /// Inverse branch with return time `r`: `z ↦ (1 + T_L^{-(r-1)} z) / 2`.
    pub fn branch_inverse(&self, r: u64, z: f64) -> f64 {
        let mut x = z;
        for _ in 1..r {
            x = self.lsv.left_inverse(x);
        }
        self.lsv.right_inverse(x)
    }

    /// The first `count` branches `Y_1 = [3/4, 1], Y_2, …`, ordered toward
    /// the indifferent fixed point. Together with the remainder
    /// `[1/2, lo(Y_count))` they partition `Y`.
    pub fn branches(&self, count: usize) -> Vec<InducedBranch> {
        let mut out = Vec::with_capacity(count);
        // a_k = T_L^{-k}(1/2); Y_r = [(1 + a_{r-1})/2, (1 + a_{r-2})/2) with a_{-1} = 1
        let mut upper = 1.0;
        let mut a = 0.5;
        for r in 1..=count as u64 {
            let lo = self.lsv.right_inverse(a);
            let hi = self.lsv.right_inverse(upper);
            out.push(InducedBranch { return_time: r, lo, hi });
            upper = a;
            a = self.lsv.left_inverse(a);
        }
        out
    }
}

/// `(F y, r(y))` for the first return of the LSV map with parameter `beta`
/// to `[1/2, 1]`.
pub fn induced_step(y: f64, beta: f64) -> Result<(f64, u64)> {
    InducedMap::new(beta)?.apply(y)
}

/// Base dynamics of a suspension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseMap {
    /// `x ↦ x`; only useful as a reference discretization.
    Identity,
    Doubling,
    Lsv(LsvMap),
    Induced(InducedMap),
}

impl BaseMap {
    pub fn lsv(beta: f64) -> Result<Self> {
        LsvMap::new(beta).map(BaseMap::Lsv)
    }

    pub fn induced(beta: f64) -> Result<Self> {
        InducedMap::new(beta).map(BaseMap::Induced)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseMap::Identity => "identity",
            BaseMap::Doubling => "doubling",
            BaseMap::Lsv(_) => "lsv",
            BaseMap::Induced(_) => "induced",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            BaseMap::Lsv(m) => Some(m.beta()),
            BaseMap::Induced(m) => Some(m.lsv().beta()),
            _ => None,
        }
    }

    /// Phase interval `[lo, hi]`.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            BaseMap::Induced(_) => (INDUCING_LO, INDUCING_HI),
            _ => (0.0, 1.0),
        }
    }

    /// Deterministic step.
    pub fn apply(&self, y: f64) -> Result<f64> {
        match self {
            BaseMap::Identity => Ok(y),
            BaseMap::Doubling => Ok(DoublingMap.apply(y)),
            BaseMap::Lsv(m) => Ok(m.apply(y)),
            BaseMap::Induced(m) => m.apply(y).map(|(fy, _)| fy),
        }
    }

    /// Step used when generating long orbits; identical to [`BaseMap::apply`]
    /// except for the doubling map, see [`DoublingMap::apply_refreshed`].
    pub fn advance<R: Rng + ?Sized>(&self, y: f64, rng: &mut R) -> Result<f64> {
        match self {
            BaseMap::Doubling => Ok(DoublingMap.apply_refreshed(y, rng)),
            _ => self.apply(y),
        }
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.domain();
        lo + (hi - lo) * rng.gen::<f64>()
    }
}

/// Roof functions shipped with the crate; both satisfy `inf h ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Roof {
    Constant(f64),
    /// `h(y) = 1 + y`
    OnePlusY,
}

impl Roof {
    pub fn constant(height: f64) -> Result<Self> {
        if !(height.is_finite() && height >= 1.0) {
            return Err(Error::input(format!("roof must be at least 1, got {height}")));
        }
        Ok(Roof::Constant(height))
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Roof::Constant(h) => h,
            Roof::OnePlusY => 1.0 + y,
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Roof::Constant(h) => h,
            Roof::OnePlusY => 2.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Roof::Constant(_))
    }

    pub fn name(&self) -> String {
        match self {
            Roof::Constant(h) => format!("constant:{h}"),
            Roof::OnePlusY => "one_plus_y".to_string(),
        }
    }
}

/// A point `(y, u)` of a suspension, `0 ≤ u < roof(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub y: f64,
    pub u: f64,
}

impl FlowState {
    pub fn new(y: f64, u: f64) -> Self {
        Self { y, u }
    }
}

/// Suspension semiflow over a base map with roof `h`. Over the induced map
/// the effective roof is the induced roof `φ(y) = Σ_{i<r(y)} h(T^i y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuspensionSystem {
    base: BaseMap,
    roof: Roof,
}

impl SuspensionSystem {
    pub fn new(base: BaseMap, roof: Roof) -> Self {
        Self { base, roof }
    }

    pub fn doubling_unit_roof() -> Self {
        Self::new(BaseMap::Doubling, Roof::Constant(1.0))
    }

    pub fn base(&self) -> &BaseMap {
        &self.base
    }

    pub fn roof(&self) -> &Roof {
        &self.roof
    }

    /// True when the effective roof is a constant function.
    pub fn has_constant_roof(&self) -> bool {
        self.roof.is_constant() && !matches!(self.base, BaseMap::Induced(_))
    }

    /// Effective roof at `y` together with the next base point.
    fn excursion(&self, y: f64) -> Result<(f64, f64)> {
        match &self.base {
            BaseMap::Induced(m) => {
                let mut phi = 0.0;
                let (fy, _) = m.excursion(y, |x| phi += self.roof.eval(x))?;
                Ok((phi, fy))
            }
            base => Ok((self.roof.eval(y), base.apply(y)?)),
        }
    }

    /// Effective roof at `y`.
    pub fn roof_at(&self, y: f64) -> Result<f64> {
        match &self.base {
            BaseMap::Induced(_) => self.excursion(y).map(|(phi, _)| phi),
            _ => Ok(self.roof.eval(y)),
        }
    }

    fn excursion_advance<R: Rng + ?Sized>(&self, y: f64, rng: &mut R) -> Result<(f64, f64)> {
        match &self.base {
            BaseMap::Doubling => Ok((self.roof.eval(y), DoublingMap.apply_refreshed(y, rng))),
            _ => self.excursion(y),
        }
    }

    pub fn validate_state(&self, state: &FlowState) -> Result<()> {
        let (lo, hi) = self.base.domain();
        if !(lo..=hi).contains(&state.y) {
            return Err(Error::input(format!("base point {} outside [{lo}, {hi}]", state.y)));
        }
        let roof = self.roof_at(state.y)?;
        if !(0.0..roof).contains(&state.u) {
            return Err(Error::input(format!("height {} outside [0, {roof})", state.u)));
        }
        Ok(())
    }

    /// Flows `state` for time `t` with the deterministic base map.
    pub fn evolve(&self, state: FlowState, t: f64) -> Result<FlowState> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::input(format!("flow time must be finite and nonnegative, got {t}")));
        }
        let FlowState { mut y, u } = state;
        let mut u = u + t;
        loop {
            let (roof, next) = self.excursion(y)?;
            if u < roof {
                return Ok(FlowState { y, u });
            }
            u -= roof;
            y = next;
        }
    }

    /// Records the flow from `start` until time `horizon`.
    pub fn trajectory<R: Rng + ?Sized>(&self, start: FlowState, horizon: f64, rng: &mut R) -> Result<Trajectory> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::input(format!("horizon must be finite and nonnegative, got {horizon}")));
        }
        let mut bases = Vec::with_capacity(horizon as usize + 2);
        let mut starts = Vec::with_capacity(horizon as usize + 2);
        let mut y = start.y;
        let mut entry = -start.u;
        loop {
            let (roof, next) = self.excursion_advance(y, rng)?;
            bases.push(y);
            starts.push(entry);
            entry += roof;
            if entry > horizon {
                starts.push(entry);
                break;
            }
            y = next;
        }
        Ok(Trajectory { bases, entries: starts, horizon })
    }

    /// Draws `count` states approximately distributed according to the
    /// suspension measure `(μ_Y × Leb) / φ̄`.
    ///
    /// Base points start uniform and are pushed through `burn_in` base
    /// iterations; they are then weighted by the roof (rejection against
    /// `sup h` for bounded roofs, weighted resampling from a batch of 64 for
    /// the unbounded induced roof) before drawing the height uniformly.
    pub fn sample_initial_states<R: Rng + ?Sized>(
        &self,
        count: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<Vec<FlowState>> {
        if count == 0 {
            return Err(Error::input("count must be at least 1"));
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let (y, roof) = match self.base {
                BaseMap::Induced(_) => self.draw_length_biased(burn_in, rng)?,
                _ => {
                    let y = self.draw_burned(burn_in, rng)?;
                    let roof = self.roof.eval(y);
                    if !self.roof.is_constant() && rng.gen::<f64>() * self.roof.sup() >= roof {
                        continue;
                    }
                    (y, roof)
                }
            };
            out.push(FlowState { y, u: roof * rng.gen::<f64>() });
        }
        Ok(out)
    }

    fn draw_burned<R: Rng + ?Sized>(&self, burn_in: usize, rng: &mut R) -> Result<f64> {
        let mut y = self.base.sample_uniform(rng);
        for _ in 0..burn_in {
            y = self.base.advance(y, rng)?;
        }
        Ok(y)
    }

    fn draw_length_biased<R: Rng + ?Sized>(&self, burn_in: usize, rng: &mut R) -> Result<(f64, f64)> {
        const BATCH: usize = 64;
        let mut candidates = Vec::with_capacity(BATCH);
        let mut total = 0.0;
        for _ in 0..BATCH {
            let y = self.draw_burned(burn_in, rng)?;
            let phi = self.roof_at(y)?;
            total += phi;
            candidates.push((y, phi));
        }
        let mut pick = rng.gen::<f64>() * total;
        for &(y, phi) in &candidates {
            if pick < phi {
                return Ok((y, phi));
            }
            pick -= phi;
        }
        Ok(*candidates.last().expect("nonempty batch"))
    }
}

/// `Ψ_t(state)` for the deterministic base map.
pub fn suspension_evolve(state: FlowState, t: f64, system: &SuspensionSystem) -> Result<FlowState> {
    system.evolve(state, t)
}

/// Draws `count` initial states using the stream `rng`.
pub fn sample_initial_states<R: Rng + ?Sized>(
    system: &SuspensionSystem,
    count: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Vec<FlowState>> {
    system.sample_initial_states(count, burn_in, rng)
}

/// A recorded flow orbit: the base point visited on each roof excursion and
/// the flow time at which each excursion starts.
///
/// Excursion `k` sits over `bases[k]` during `[entries[k], entries[k+1])`;
/// `entries[0] = -u0 ≤ 0` and the last entry exceeds the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    bases: Vec<f64>,
    entries: Vec<f64>,
    horizon: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn excursions(&self) -> usize {
        self.bases.len()
    }

    /// `(base point, start time, end time)` of excursion `k`.
    pub fn excursion(&self, k: usize) -> (f64, f64, f64) {
        (self.bases[k], self.entries[k], self.entries[k + 1])
    }

    pub fn bases(&self) -> &[f64] {
        &self.bases
    }

    /// State at flow time `t ∈ [0, horizon]`.
    pub fn state_at(&self, t: f64) -> FlowState {
        let k = match self.entries.partition_point(|&e| e <= t) {
            0 => 0,
            p => (p - 1).min(self.bases.len() - 1),
        };
        FlowState { y: self.bases[k], u: t - self.entries[k] }
    }

    /// States at the integer times `0, 1, …, count − 1`.
    pub fn unit_time_orbit(&self, count: usize) -> Vec<FlowState> {
        let mut out = Vec::with_capacity(count);
        let mut k = 0usize;
        for i in 0..count {
            let t = i as f64;
            while k + 1 < self.bases.len() && self.entries[k + 1] <= t {
                k += 1;
            }
            out.push(FlowState { y: self.bases[k], u: t - self.entries[k] });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn lsv_examples() {
        assert_eq!(lsv_step(0.75, 0.3).unwrap(), 0.5);
        assert_eq!(lsv_step(0.0, 0.5).unwrap(), 0.0);
        let expected = 0.25 * (1.0 + 2f64.sqrt() * 0.5);
        assert!((lsv_step(0.25, 0.5).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.426_776_695).abs() < 1e-9);
    }

    #[test]
    fn lsv_rejects_out_of_domain() {
        assert!(matches!(lsv_step(1.5, 0.3), Err(Error::Input(_))));
        assert!(matches!(lsv_step(-0.1, 0.3), Err(Error::Input(_))));
        assert!(matches!(lsv_step(0.3, 0.0), Err(Error::Input(_))));
    }

    #[test]
    fn branch_point_goes_right() {
        assert_eq!(lsv_step(0.5, 0.25).unwrap(), 0.0);
    }

    #[test]
    fn doubling_examples() {
        assert_eq!(doubling_step(0.0).unwrap(), 0.0);
        assert_eq!(doubling_step(0.3).unwrap(), 0.6);
        assert!((doubling_step(0.7).unwrap() - 0.4).abs() < 1e-15);
        assert!(doubling_step(1.0).is_err());
    }

    #[test]
    fn refreshed_doubling_keeps_full_precision() {
        let mut rng = stream(1, Purpose::Generic, 0, 0);
        let mut x = 0.3;
        for _ in 0..200 {
            x = DoublingMap.apply_refreshed(x, &mut rng);
        }
        assert!(x > 0.0 && x < 1.0);
        // the top bits still follow the deterministic map
        let y = DoublingMap.apply_refreshed(x, &mut rng);
        assert!((y - DoublingMap.apply(x)).abs() <= 2f64.powi(-53));
    }

    #[test]
    fn left_inverse_inverts_left_branch() {
        let m = LsvMap::new(0.3).unwrap();
        for &z in &[1e-12, 1e-5, 0.1, 0.5, 0.9, 0.999_999] {
            let x = m.left_inverse(z);
            assert!(x < 0.5);
            assert!((m.apply(x) - z).abs() <= 4.0 * f64::EPSILON * z.max(1e-300), "z = {z}");
        }
    }

    #[test]
    fn induced_examples() {
        assert_eq!(induced_step(0.75, 0.5).unwrap(), (0.5, 1));
        let (fy, r) = induced_step(0.9, 0.5).unwrap();
        assert!((fy - 0.8).abs() < 1e-15);
        assert_eq!(r, 1);
        let (_, r) = induced_step(0.6, 0.5).unwrap();
        assert!(r >= 2);
    }

    #[test]
    fn induced_truncates_at_fixed_point() {
        let map = InducedMap::new(0.5).unwrap().with_cap(1_000);
        assert!(matches!(map.apply(0.5), Err(Error::Truncation { cap: 1_000, .. })));
    }

    #[test]
    fn induced_branches_match_return_times() {
        let map = InducedMap::new(0.25).unwrap();
        let branches = map.branches(12);
        assert_eq!(branches[0].lo, 0.75);
        assert_eq!(branches[0].hi, 1.0);
        for w in branches.windows(2) {
            assert_eq!(w[1].hi, w[0].lo);
            assert!(w[1].lo < w[1].hi);
        }
        for b in &branches {
            let mid = 0.5 * (b.lo + b.hi);
            assert_eq!(map.apply(mid).unwrap().1, b.return_time);
            let z = map.apply(mid).unwrap().0;
            assert!((map.branch_inverse(b.return_time, z) - mid).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_examples() {
        let sys = SuspensionSystem::doubling_unit_roof();
        let s = FlowState::new(0.3, 0.0);
        assert_eq!(sys.evolve(s, 0.0).unwrap(), s);
        let s = sys.evolve(FlowState::new(0.3, 0.2), 0.5).unwrap();
        assert_eq!(s.y, 0.3);
        assert!((s.u - 0.7).abs() < 1e-15);
        let s = sys.evolve(FlowState::new(0.3, 0.8), 0.5).unwrap();
        assert_eq!(s.y, 0.6);
        assert!((s.u - 0.3).abs() < 1e-15);
        assert!(sys.evolve(s, -1.0).is_err());
    }

    #[test]
    fn evolve_over_induced_base_uses_induced_roof() {
        let sys = SuspensionSystem::new(BaseMap::induced(0.25).unwrap(), Roof::Constant(1.0));
        // y = 0.6 has return time 3, so the induced roof is 3
        assert_eq!(sys.roof_at(0.6).unwrap(), 3.0);
        let s = sys.evolve(FlowState::new(0.6, 0.0), 2.5).unwrap();
        assert_eq!(s.y, 0.6);
        let s = sys.evolve(FlowState::new(0.6, 0.0), 3.5).unwrap();
        assert!((s.u - 0.5).abs() < 1e-15);
        assert!(s.y >= 0.5);
    }

    #[test]
    fn constant_roof_heights_are_uniform_and_valid() {
        let sys = SuspensionSystem::doubling_unit_roof();
        let mut rng = stream(3, Purpose::InitialState, 0, 0);
        let states = sys.sample_initial_states(3, 0, &mut rng).unwrap();
        assert_eq!(states.len(), 3);
        for s in &states {
            sys.validate_state(s).unwrap();
        }
        assert!(sys.sample_initial_states(0, 0, &mut rng).is_err());
    }

    #[test]
    fn trajectory_replays_evolution() {
        let sys = SuspensionSystem::new(BaseMap::lsv(0.2).unwrap(), Roof::OnePlusY);
        let mut rng = stream(5, Purpose::Trajectory, 0, 0);
        let start = FlowState::new(0.37, 0.4);
        let traj = sys.trajectory(start, 50.0, &mut rng).unwrap();
        for &t in &[0.0, 0.25, 3.0, 17.5, 49.9] {
            let a = traj.state_at(t);
            let b = sys.evolve(start, t).unwrap();
            assert_eq!(a.y, b.y, "t = {t}");
            assert!((a.u - b.u).abs() < 1e-12);
        }
        let orbit = traj.unit_time_orbit(10);
        for (i, s) in orbit.iter().enumerate() {
            assert_eq!(*s, traj.state_at(i as f64));
        }
    }
}
