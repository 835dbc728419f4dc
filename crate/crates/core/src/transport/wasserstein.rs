//! Exact and entropic `q`-Wasserstein distances between equal-size empirical
//! measures.
//!
//! For two clouds of `N` equally weighted atoms the optimal coupling can be
//! taken to be a permutation, so `W_q^q = min_π (1/N) Σ d(a_i, b_π(i))^q`.
//! On the line the sorted coupling is optimal for every `q ≥ 1`.

use rayon::prelude::*;

use super::assignment;
use crate::error::{Error, Result};
use crate::path::{grid_sup, PathSample};

/// Largest cloud accepted by the exact assignment solver.
pub const ASSIGNMENT_CAP: usize = 4096;

/// Largest cloud accepted by exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 9;

/// Ground metric between atoms.
pub trait Metric<A>: Sync {
    fn distance(&self, a: &A, b: &A) -> f64;

    /// Rejects atom collections the metric cannot compare.
    fn check(&self, _a: &[A], _b: &[A]) -> Result<()> {
        Ok(())
    }
}

/// `|a − b|` on the real line.
#[derive(Debug, Clone, Copy, Default)]
pub struct AbsoluteDifference;

impl Metric<f64> for AbsoluteDifference {
    #[inline]
    fn distance(&self, a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }
}

/// Sup distance of piecewise-linear paths on a shared grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridSup;

impl Metric<PathSample> for GridSup {
    #[inline]
    fn distance(&self, a: &PathSample, b: &PathSample) -> f64 {
        grid_sup(a, b)
    }

    fn check(&self, a: &[PathSample], b: &[PathSample]) -> Result<()> {
        let m = a[0].m();
        if a.iter().chain(b).any(|p| p.m() != m) {
            return Err(Error::input("all paths must share one grid"));
        }
        Ok(())
    }
}

/// Equally weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<A> {
    atoms: Vec<A>,
}

impl<A> EmpiricalMeasure<A> {
    pub fn new(atoms: Vec<A>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::input("an empirical measure needs at least one atom"));
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Sorted,
    Assignment,
    BruteForce,
}

impl Solver {
    pub fn tag(&self) -> &'static str {
        match self {
            Solver::Sorted => "sorted",
            Solver::Assignment => "assignment",
            Solver::BruteForce => "brute-force",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub distance: f64,
    /// Atom `i` of the first measure is coupled with atom `pairing[i]` of the second.
    pub pairing: Vec<usize>,
    pub solver: Solver,
}

fn check_order(q: f64) -> Result<()> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::input(format!("Wasserstein order must satisfy q >= 1, got {q}")));
    }
    Ok(())
}

fn check_sizes<A>(a: &EmpiricalMeasure<A>, b: &EmpiricalMeasure<A>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::input(format!(
            "empirical measures must have equal atom counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

#[inline]
fn cost_of(d: f64, q: f64) -> f64 {
    if q == 1.0 {
        d
    } else if q == 2.0 {
        d * d
    } else {
        d.powf(q)
    }
}

/// `(Σ_i cost[i][π(i)] / N)^{1/q}`, summed in row order.
fn mean_cost_root(cost: &[f64], pairing: &[usize], q: f64) -> f64 {
    let n = pairing.len();
    let total: f64 = pairing.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    (total / n as f64).powf(1.0 / q)
}

/// Row-major `N × N` matrix of `d(a_i, b_j)^q`.
pub fn cost_matrix<A: Sync, M: Metric<A>>(a: &[A], b: &[A], q: f64, metric: &M) -> Vec<f64> {
    let n = b.len();
    let mut cost = vec![0.0; a.len() * n];
    cost.par_chunks_mut(n).zip(a.par_iter()).for_each(|(row, x)| {
        for (c, y) in row.iter_mut().zip(b) {
            *c = cost_of(metric.distance(x, y), q);
        }
    });
    cost
}

/// Sorted (order-statistic) coupling on the line.
pub fn wasserstein_1d(a: &EmpiricalMeasure<f64>, b: &EmpiricalMeasure<f64>, q: f64) -> Result<TransportResult> {
    check_order(q)?;
    check_sizes(a, b)?;
    if a.atoms.iter().chain(&b.atoms).any(|x| !x.is_finite()) {
        return Err(Error::input("atoms must be finite"));
    }
    let order = |atoms: &[f64]| {
        let mut idx: Vec<usize> = (0..atoms.len()).collect();
        idx.sort_by(|&i, &j| atoms[i].total_cmp(&atoms[j]).then(i.cmp(&j)));
        idx
    };
    let ia = order(&a.atoms);
    let ib = order(&b.atoms);
    let n = a.len();
    let mut pairing = vec![0usize; n];
    for (&i, &j) in ia.iter().zip(&ib) {
        pairing[i] = j;
    }
    let total: f64 = pairing
        .iter()
        .enumerate()
        .map(|(i, &j)| cost_of((a.atoms[i] - b.atoms[j]).abs(), q))
        .sum();
    Ok(TransportResult {
        distance: (total / n as f64).powf(1.0 / q),
        pairing,
        solver: Solver::Sorted,
    })
}

/// Exact transport through a min-cost perfect matching on `d^q`.
pub fn wasserstein_assignment<A: Sync, M: Metric<A>>(
    a: &EmpiricalMeasure<A>,
    b: &EmpiricalMeasure<A>,
    q: f64,
    metric: &M,
) -> Result<TransportResult> {
    check_order(q)?;
    check_sizes(a, b)?;
    let n = a.len();
    if n > ASSIGNMENT_CAP {
        return Err(Error::Size {
            size: n,
            cap: ASSIGNMENT_CAP,
            hint: "use the entropic solver for larger clouds",
        });
    }
    metric.check(&a.atoms, &b.atoms)?;
    let cost = cost_matrix(&a.atoms, &b.atoms, q, metric);
    Ok(assignment_on_cost(&cost, n, q))
}

/// Solves the matching on a precomputed `d^q` matrix.
pub fn assignment_on_cost(cost: &[f64], n: usize, q: f64) -> TransportResult {
    let pairing = assignment::solve(cost, n);
    TransportResult {
        distance: mean_cost_root(cost, &pairing, q),
        pairing,
        solver: Solver::Assignment,
    }
}

/// Exhaustive minimum over all `N!` permutations (Heap's algorithm).
pub fn wasserstein_brute_force<A: Sync, M: Metric<A>>(
    a: &EmpiricalMeasure<A>,
    b: &EmpiricalMeasure<A>,
    q: f64,
    metric: &M,
) -> Result<TransportResult> {
    check_order(q)?;
    check_sizes(a, b)?;
    let n = a.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::Size {
            size: n,
            cap: BRUTE_FORCE_CAP,
            hint: "use the assignment solver",
        });
    }
    metric.check(&a.atoms, &b.atoms)?;
    let cost = cost_matrix(&a.atoms, &b.atoms, q, metric);
    let eval = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum() };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_total = eval(&perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let total = eval(&perm);
            if total < best_total {
                best_total = total;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(TransportResult {
        distance: mean_cost_root(&cost, &best, q),
        pairing: best,
        solver: Solver::BruteForce,
    })
}

/// Output of the entropic solver.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropicResult {
    /// `(⟨P, C⟩)^{1/q}` for the Sinkhorn plan `P` rounded onto the exact
    /// marginals, so never below the exact distance; the bias grows with `ε`.
    pub value: f64,
    /// Regularized primal minus dual objective at the final iterate.
    pub duality_gap: f64,
    /// `Σ_i |row_i(P) − 1/N|` after the last column update.
    pub marginal_error: f64,
    pub iterations: usize,
}

/// Marginal error below which Sinkhorn is considered converged.
pub const SINKHORN_TOLERANCE: f64 = 1e-4;

/// Projects a nonnegative plan onto couplings of two uniform measures:
/// scale down overfull rows and columns, then spread the deficit as a
/// rank-one correction.
fn round_to_marginals(plan: &mut [f64], n: usize) {
    let target = 1.0 / n as f64;
    for i in 0..n {
        let row = &mut plan[i * n..(i + 1) * n];
        let sum: f64 = row.iter().sum();
        if sum > target {
            row.iter_mut().for_each(|p| *p *= target / sum);
        }
    }
    for j in 0..n {
        let sum: f64 = (0..n).map(|i| plan[i * n + j]).sum();
        if sum > target {
            (0..n).for_each(|i| plan[i * n + j] *= target / sum);
        }
    }
    let rows: Vec<f64> = (0..n).map(|i| (target - plan[i * n..(i + 1) * n].iter().sum::<f64>()).max(0.0)).collect();
    let cols: Vec<f64> = (0..n).map(|j| (target - (0..n).map(|i| plan[i * n + j]).sum::<f64>()).max(0.0)).collect();
    let deficit: f64 = rows.iter().sum();
    if deficit > 0.0 {
        for i in 0..n {
            for j in 0..n {
                plan[i * n + j] += rows[i] * cols[j] / deficit;
            }
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn iterations on the `d^q` cost matrix.
pub fn wasserstein_entropic<A: Sync, M: Metric<A>>(
    a: &EmpiricalMeasure<A>,
    b: &EmpiricalMeasure<A>,
    q: f64,
    metric: &M,
    epsilon: f64,
    iterations: usize,
) -> Result<EntropicResult> {
    check_order(q)?;
    check_sizes(a, b)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::input(format!("epsilon must be positive, got {epsilon}")));
    }
    metric.check(&a.atoms, &b.atoms)?;
    let n = a.len();
    let cost = cost_matrix(&a.atoms, &b.atoms, q, metric);
    let log_w = -(n as f64).ln();
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; n];
    let mut marginal_error = f64::INFINITY;
    let mut done = 0usize;
    // ε-scaling: anneal from the cost range down to `epsilon`, warm-starting
    // the potentials, so small targets do not stall
    let range = cost.iter().cloned().fold(0.0f64, f64::max);
    let mut eps = range.max(epsilon);
    for it in 0..iterations.max(1) {
        eps = (eps * 0.7).max(epsilon);
        for i in 0..n {
            let row = &cost[i * n..(i + 1) * n];
            f[i] = eps * log_w - eps * log_sum_exp(row.iter().zip(&g).map(|(c, gj)| (gj - c) / eps));
        }
        for j in 0..n {
            g[j] = eps * log_w - eps * log_sum_exp((0..n).map(|i| (f[i] - cost[i * n + j]) / eps));
        }
        done = it + 1;
        if eps > epsilon {
            continue;
        }
        marginal_error = (0..n)
            .map(|i| {
                let row: f64 = (0..n).map(|j| ((f[i] + g[j] - cost[i * n + j]) / epsilon).exp()).sum();
                (row - 1.0 / n as f64).abs()
            })
            .sum();
        if marginal_error < SINKHORN_TOLERANCE {
            break;
        }
    }
    let mut plan = vec![0.0f64; n * n];
    let mut transport = 0.0;
    let mut entropy = 0.0;
    let mut mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            let log_p = (f[i] + g[j] - cost[i * n + j]) / epsilon;
            let p = log_p.exp();
            plan[i * n + j] = p;
            transport += p * cost[i * n + j];
            if p > 0.0 {
                entropy += p * (log_p - 2.0 * log_w);
            }
            mass += p;
        }
    }
    let dual: f64 = (f.iter().sum::<f64>() + g.iter().sum::<f64>()) / n as f64 - epsilon * (mass - 1.0);
    let duality_gap = transport + epsilon * entropy - dual;
    round_to_marginals(&mut plan, n);
    let transport: f64 = plan.iter().zip(&cost).map(|(p, c)| p * c).sum();
    if marginal_error >= SINKHORN_TOLERANCE {
        return Err(Error::numerical(format!(
            "Sinkhorn did not converge in {done} iterations: marginal error {marginal_error:.3e}, duality gap {duality_gap:.3e}"
        )));
    }
    Ok(EntropicResult {
        value: transport.max(0.0).powf(1.0 / q),
        duality_gap,
        marginal_error,
        iterations: done,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(v: &[f64]) -> EmpiricalMeasure<f64> {
        EmpiricalMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(wasserstein_1d(&reals(&[0.0]), &reals(&[1.0]), 1.0).unwrap().distance, 1.0);
        assert_eq!(wasserstein_1d(&reals(&[0.0, 1.0]), &reals(&[0.0, 2.0]), 1.0).unwrap().distance, 0.5);
        let a = reals(&[0.3, -1.0, 2.5]);
        for q in [1.0, 2.0, 3.5] {
            assert_eq!(wasserstein_1d(&a, &a, q).unwrap().distance, 0.0);
        }
    }

    #[test]
    fn size_and_order_errors() {
        assert!(matches!(wasserstein_1d(&reals(&[0.0]), &reals(&[0.0, 1.0]), 1.0), Err(Error::Input(_))));
        assert!(matches!(wasserstein_1d(&reals(&[0.0]), &reals(&[1.0]), 0.5), Err(Error::Input(_))));
        assert!(EmpiricalMeasure::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn assignment_single_atom() {
        let r = wasserstein_assignment(&reals(&[0.25]), &reals(&[2.0]), 2.0, &AbsoluteDifference).unwrap();
        assert_eq!(r.distance, 1.75);
        assert_eq!(r.pairing, vec![0]);
        assert_eq!(r.solver, Solver::Assignment);
    }

    #[test]
    fn assignment_over_cap_is_size_error() {
        let a = reals(&vec![0.0; ASSIGNMENT_CAP + 1]);
        let err = wasserstein_assignment(&a, &a, 1.0, &AbsoluteDifference).unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = EmpiricalMeasure::new(vec![PathSample::zero(4).unwrap()]).unwrap();
        let b = EmpiricalMeasure::new(vec![PathSample::zero(8).unwrap()]).unwrap();
        assert!(wasserstein_assignment(&a, &b, 1.0, &GridSup).is_err());
    }

    #[test]
    fn entropic_two_atom_example() {
        let r = wasserstein_entropic(&reals(&[0.0, 1.0]), &reals(&[0.0, 2.0]), 1.0, &AbsoluteDifference, 0.01, 10_000)
            .unwrap();
        assert!((r.value - 0.5).abs() <= 0.01, "{r:?}");
    }

    #[test]
    fn entropic_identical_measures_near_zero() {
        let a = reals(&[0.0, 1.0, 3.0, 7.0]);
        let r = wasserstein_entropic(&a, &a, 1.0, &AbsoluteDifference, 0.01, 10_000).unwrap();
        assert!(r.value < 1e-6, "{r:?}");
    }

    #[test]
    fn entropic_reports_nonconvergence() {
        let a = reals(&[0.0, 0.1, 0.2, 5.0]);
        let b = reals(&[0.05, 0.15, 4.0, 9.0]);
        let err = wasserstein_entropic(&a, &b, 1.0, &AbsoluteDifference, 1e-3, 1).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref msg) if msg.contains("duality gap")));
    }
}
