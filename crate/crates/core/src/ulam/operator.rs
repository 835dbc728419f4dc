use rayon::prelude::*;

use crate::dynamics::{BaseMap, LsvMap};
use crate::error::{Error, Result};

use super::grid::GriddedFunction;

/// Smallest accepted number of cells.
pub const MIN_CELLS: usize = 16;

/// Iteration cap for the invariant-density power iteration.
pub const DENSITY_MAX_ITERATIONS: usize = 100_000;

/// Induced-map branches beyond this count are rejected as a size error.
pub const MAX_INDUCED_BRANCHES: usize = 1_000_000;

/// The unresolved tail of short induced branches is lumped into the first
/// cell once its length drops below this fraction of a cell.
pub const INDUCED_TAIL_FRACTION: f64 = 1e-7;

/// Row-stochastic Ulam matrix `P_ij = |cell_i ∩ T^{-1} cell_j| / |cell_i|`
/// in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamOperator {
    base: BaseMap,
    cells: usize,
    lo: f64,
    hi: f64,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Overlap triplets `(row, col, length)` of preimages with cells.
type Triplets = Vec<(usize, usize, f64)>;

fn distribute(lo: f64, h: f64, cells: usize, col: usize, a: f64, b: f64, scale: f64, out: &mut Triplets) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let first = (((a - lo) / h).floor().max(0.0) as usize).min(cells - 1);
    let mut i = first;
    while i < cells {
        let c0 = lo + i as f64 * h;
        if c0 >= b {
            break;
        }
        let overlap = b.min(c0 + h) - a.max(c0);
        if overlap > 0.0 {
            out.push((i, col, overlap * scale));
        }
        i += 1;
    }
}

/// Overlaps of the preimages of every cell under one monotone inverse branch.
fn branch_triplets(lo: f64, h: f64, cells: usize, preimages: &[f64], scale: f64) -> Triplets {
    (0..cells)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            distribute(lo, h, cells, j, preimages[j], preimages[j + 1], scale, &mut out);
            out
        })
        .flatten()
        .collect()
}

fn induced_triplets(lsv: &LsvMap, lo: f64, h: f64, cells: usize, grid: &[f64]) -> Result<Triplets> {
    let mut triplets = Vec::new();
    // level[j] = T_L^{-(r-1)}(z_j); branch r is z ↦ (1 + level) / 2
    let mut level = grid.to_vec();
    let mut r = 1usize;
    loop {
        let pre: Vec<f64> = level.iter().map(|&w| lsv.right_inverse(w)).collect();
        triplets.extend(branch_triplets(lo, h, cells, &pre, 1.0));
        // the remaining tail is [1/2, lo(Y_r))
        let tail = pre[0] - lo;
        if tail <= INDUCED_TAIL_FRACTION * h {
            let width = pre[cells] - pre[0];
            if tail > 0.0 && width > 0.0 {
                for j in 0..cells {
                    triplets.push((0, j, tail * (pre[j + 1] - pre[j]) / width));
                }
            }
            break;
        }
        r += 1;
        if r > MAX_INDUCED_BRANCHES {
            return Err(Error::Size {
                size: r,
                cap: MAX_INDUCED_BRANCHES,
                hint: "induced branches accumulate too slowly; use a smaller beta",
            });
        }
        level = level.par_iter().map(|&w| lsv.left_inverse(w)).collect();
    }
    Ok(triplets)
}

impl UlamOperator {
    pub fn build(base: &BaseMap, cells: usize) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::input(format!("Ulam grid needs at least {MIN_CELLS} cells, got {cells}")));
        }
        let (lo, hi) = base.domain();
        let h = (hi - lo) / cells as f64;
        let grid: Vec<f64> = (0..=cells).map(|j| if j == cells { hi } else { lo + j as f64 * h }).collect();
        let map_all = |g: &(dyn Fn(f64) -> f64 + Sync)| -> Vec<f64> { grid.par_iter().map(|&z| g(z)).collect() };
        let triplets = match base {
            BaseMap::Identity => branch_triplets(lo, h, cells, &grid, 1.0),
            BaseMap::Doubling => {
                let mut t = branch_triplets(lo, h, cells, &map_all(&|z| 0.5 * z), 1.0);
                t.extend(branch_triplets(lo, h, cells, &map_all(&|z| 0.5 * (z + 1.0)), 1.0));
                t
            }
            BaseMap::Lsv(m) => {
                let mut t = branch_triplets(lo, h, cells, &map_all(&|z| m.left_inverse(z)), 1.0);
                t.extend(branch_triplets(lo, h, cells, &map_all(&|z| m.right_inverse(z)), 1.0));
                t
            }
            BaseMap::Induced(m) => induced_triplets(m.lsv(), lo, h, cells, &grid)?,
        };
        Self::from_triplets(*base, cells, triplets)
    }

    fn from_triplets(base: BaseMap, cells: usize, mut triplets: Triplets) -> Result<Self> {
        let (lo, hi) = base.domain();
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; cells + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..cells {
            row_ptr[i + 1] += row_ptr[i];
        }
        for i in 0..cells {
            let row = &mut vals[row_ptr[i]..row_ptr[i + 1]];
            let total: f64 = row.iter().sum();
            if !(total > 0.0) {
                return Err(Error::numerical(format!("Ulam row {i} has no mass")));
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        Ok(Self { base, cells, lo, hi, row_ptr, cols, vals })
    }

    /// Reassembles an operator from its stored rows (used by the cache).
    pub(crate) fn from_csr(base: BaseMap, cells: usize, row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<f64>) -> Result<Self> {
        let (lo, hi) = base.domain();
        if row_ptr.len() != cells + 1 || cols.len() != vals.len() || row_ptr[cells] != vals.len() {
            return Err(Error::input("inconsistent compressed-row data"));
        }
        if cols.iter().any(|&j| j >= cells) || row_ptr.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input("compressed-row data out of range"));
        }
        Ok(Self { base, cells, lo, hi, row_ptr, cols, vals })
    }

    pub fn base(&self) -> &BaseMap {
        &self.base
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub(crate) fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    /// Dense entry `P_ij` (linear scan of row `i`).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().position(|&c| c == j).map_or(0.0, |p| vals[p])
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `μ ↦ μ P`, the pushforward of a cell-mass vector.
    pub fn push_forward(&self, masses: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cells];
        for (i, &m) in masses.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                out[j] += m * p;
            }
        }
        out
    }

    /// Koopman action `f ↦ P f` on `stride` interleaved columns.
    pub fn koopman(&self, f: &[f64], stride: usize) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for i in 0..self.cells {
            let (cols, vals) = self.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                for k in 0..stride {
                    out[i * stride + k] += p * f[j * stride + k];
                }
            }
        }
        out
    }

    /// Transfer operator with respect to the cell masses `mu`:
    /// `(L f)_j = Σ_i mu_i P_ij f_i / mu_j`, and 0 on cells of zero mass.
    pub fn transfer(&self, masses: &[f64], f: &[f64], stride: usize) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for i in 0..self.cells {
            let (cols, vals) = self.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                let w = masses[i] * p;
                for k in 0..stride {
                    out[j * stride + k] += w * f[i * stride + k];
                }
            }
        }
        for j in 0..self.cells {
            let m = masses[j];
            for k in 0..stride {
                let v = &mut out[j * stride + k];
                *v = if m > 0.0 { *v / m } else { 0.0 };
            }
        }
        out
    }

    /// Writes `row,col,value` triplets.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "row,col,value")?;
        for i in 0..self.cells {
            let (cols, vals) = self.row(i);
            for (j, v) in cols.iter().zip(vals) {
                writeln!(out, "{i},{j},{v:e}")?;
            }
        }
        Ok(())
    }
}

pub fn build_ulam(base: &BaseMap, cells: usize) -> Result<UlamOperator> {
    UlamOperator::build(base, cells)
}

/// Invariant density (cell averages, integrating to 1) by power iteration
/// of `μ ↦ μP` from the uniform vector until successive iterates differ by
/// less than `tol` in L¹.
pub fn invariant_density(op: &UlamOperator, tol: f64) -> Result<GriddedFunction> {
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    let n = op.cells();
    let mut mu = vec![1.0 / n as f64; n];
    let mut converged = false;
    for _ in 0..DENSITY_MAX_ITERATIONS {
        let mut next = op.push_forward(&mu);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numerical(format!(
            "invariant density did not converge to {tol:e} in {DENSITY_MAX_ITERATIONS} iterations"
        )));
    }
    let (lo, hi) = op.domain();
    let width = op.cell_width();
    GriddedFunction::new(lo, hi, n, 1, mu.into_iter().map(|m| m / width).collect())
}

/// An Ulam operator paired with its invariant cell masses; carries the
/// transfer operator `L` and its μ-adjoint, the Koopman operator `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    op: UlamOperator,
    density: GriddedFunction,
    masses: Vec<f64>,
}

impl Transfer {
    pub fn new(op: UlamOperator, density_tol: f64) -> Result<Self> {
        let density = invariant_density(&op, density_tol)?;
        Ok(Self::with_density(op, density))
    }

    pub fn with_density(op: UlamOperator, density: GriddedFunction) -> Self {
        let width = op.cell_width();
        let masses = density.values().iter().map(|d| d * width).collect();
        Self { op, density, masses }
    }

    pub fn operator(&self) -> &UlamOperator {
        &self.op
    }

    pub fn density(&self) -> &GriddedFunction {
        &self.density
    }

    /// Cell masses `μ_i` of the invariant measure.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    fn check(&self, f: &GriddedFunction) -> Result<()> {
        if f.ny() != self.op.cells() || f.domain() != self.op.domain() {
            return Err(Error::input("grid function does not live on the operator's grid"));
        }
        Ok(())
    }

    /// `L f`; height columns are transported unchanged.
    pub fn apply_l(&self, f: &GriddedFunction) -> Result<GriddedFunction> {
        self.check(f)?;
        Ok(f.with_values(self.op.transfer(&self.masses, f.values(), f.nu())))
    }

    /// `U f`, the grid analogue of `f ∘ F`.
    pub fn apply_u(&self, f: &GriddedFunction) -> Result<GriddedFunction> {
        self.check(f)?;
        Ok(f.with_values(self.op.koopman(f.values(), f.nu())))
    }

    /// `∫ f dμ`, height cells weighted uniformly.
    pub fn mean(&self, f: &GriddedFunction) -> f64 {
        let nu = f.nu();
        f.values().chunks(nu).zip(&self.masses).map(|(c, m)| m * c.iter().sum::<f64>() / nu as f64).sum()
    }

    /// `∫ |f| dμ`.
    pub fn l1(&self, f: &GriddedFunction) -> f64 {
        let nu = f.nu();
        f.values()
            .chunks(nu)
            .zip(&self.masses)
            .map(|(c, m)| m * c.iter().map(|v| v.abs()).sum::<f64>() / nu as f64)
            .sum()
    }

    /// `⟨f, g⟩_μ`.
    pub fn inner(&self, f: &GriddedFunction, g: &GriddedFunction) -> f64 {
        let prod = f.with_values(f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect());
        self.mean(&prod)
    }
}
