//! Parameter-plane sweeps and measured entrainment boundaries.
//!
//! A scan rasterizes a rectangular grid over two of
//! {omega, sigma, eps, eta, lambda}, running the entrainment detector and
//! the rotation number in every cell. Cells are pure functions of the
//! parameters, so grids are deterministic and identical under any worker
//! count.
//!
//! Boundary measurements exploit that the residual `G = F^q - id - p` is
//! pointwise strictly increasing in the detuning: the lower tongue edge is
//! the root of `sigma -> max G` and the upper edge the root of
//! `sigma -> min G`. Edges are refined to 1e-9; measuring a pinched pocket
//! whose width is far below grid resolution therefore needs no exhaustive
//! scanning.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{
    entrainment_test_with, residual_extrema, rotation_number_with, ForcingTable, LiftedMap,
    OscillatorParams,
};
use crate::error::Error;
use crate::normalform::{center_estimate, predicted_boundaries};
use crate::scalar::{lit, Real};
use crate::Result;

/// Parameters that can span a scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Omega,
    Sigma,
    Eps,
    Eta,
    Lambda,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::Omega => "omega",
            Param::Sigma => "sigma",
            Param::Eps => "eps",
            Param::Eta => "eta",
            Param::Lambda => "lambda",
        }
    }
}

/// One scan axis: parameter name, range and sample count.
#[derive(Debug, Clone)]
pub struct AxisSpec<T: Real> {
    param: Param,
    lo: T,
    hi: T,
    n: usize,
}

impl<T: Real> AxisSpec<T> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must be rejected too
    pub fn new(param: Param, mut lo: T, mut hi: T, n: usize) -> Result<Self> {
        if param == Param::Lambda {
            lo = lo.max(T::zero()).min(T::one());
            hi = hi.max(T::zero()).min(T::one());
        }
        if n < 2 {
            return Err(Error::OutOfRange {
                name: "axis sample count",
                value: n as f64,
                requirement: "n >= 2",
            });
        }
        if !(lo < hi) {
            return Err(Error::OutOfRange {
                name: "axis range",
                value: lo.to_f64().unwrap_or(f64::NAN),
                requirement: "lo < hi",
            });
        }
        Ok(Self { param, lo, hi, n })
    }

    pub fn param(&self) -> Param {
        self.param
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// i-th grid value, endpoints inclusive.
    pub fn value(&self, i: usize) -> T {
        let frac = lit::<T>(i as f64 / (self.n - 1) as f64);
        self.lo + (self.hi - self.lo) * frac
    }

    /// Grid spacing (one cell).
    pub fn cell(&self) -> T {
        (self.hi - self.lo) / lit::<T>((self.n - 1) as f64)
    }
}

fn apply_override<T: Real>(
    params: &OscillatorParams<T>,
    param: Param,
    value: T,
) -> Result<OscillatorParams<T>> {
    match param {
        Param::Omega => {
            let pq = lit::<T>(params.p() as f64) / lit::<T>(params.q() as f64);
            Ok(params.with_sigma(value - pq))
        }
        Param::Sigma => Ok(params.with_sigma(value)),
        Param::Eps => params.with_eps(value),
        Param::Eta => params.with_eta(value),
        Param::Lambda => params.with_lambda(value),
    }
}

/// Per-cell scan record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T: Real> {
    pub entrained: bool,
    pub degenerate: bool,
    pub rotation: T,
    pub width: Option<T>,
}

/// Rectangular scan result; cells are stored row-major with axis2 as rows.
#[derive(Debug, Clone)]
pub struct ScanGrid<T: Real> {
    axis1: AxisSpec<T>,
    axis2: AxisSpec<T>,
    cells: Vec<Cell<T>>,
}

impl<T: Real> ScanGrid<T> {
    pub fn axis1(&self) -> &AxisSpec<T> {
        &self.axis1
    }

    pub fn axis2(&self) -> &AxisSpec<T> {
        &self.axis2
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn cell(&self, col: usize, row: usize) -> &Cell<T> {
        &self.cells[row * self.axis1.n + col]
    }

    /// CSV with one row per cell: axis values, flags and rotation number.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{},{},entrained,degenerate,rotation\n",
            self.axis1.param.name(),
            self.axis2.param.name()
        ));
        for row in 0..self.axis2.n {
            for col in 0..self.axis1.n {
                let c = self.cell(col, row);
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    format_float(self.axis1.value(col)),
                    format_float(self.axis2.value(row)),
                    c.entrained as u8,
                    c.degenerate as u8,
                    format_float(c.rotation),
                ));
            }
        }
        out
    }

    /// Binary 8-bit PGM raster: entrained 255, degenerate 128, else 0.
    /// Axis2 runs along rows, first row first.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5 {} {} 255\n", self.axis1.n, self.axis2.n).into_bytes();
        for cell in &self.cells {
            out.push(if cell.entrained {
                255
            } else if cell.degenerate {
                128
            } else {
                0
            });
        }
        out
    }
}

/// Serializes a scalar with 17 significant digits, enough to round-trip.
pub fn format_float<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64().unwrap_or(f64::NAN))
}

/// Scan request: two axes plus the iterate count for rotation numbers.
#[derive(Debug, Clone)]
pub struct ScanSpec<T: Real> {
    pub axis1: AxisSpec<T>,
    pub axis2: AxisSpec<T>,
    pub rotation_iters: u32,
}

impl<T: Real> ScanSpec<T> {
    pub fn new(axis1: AxisSpec<T>, axis2: AxisSpec<T>, rotation_iters: u32) -> Result<Self> {
        if axis1.param == axis2.param {
            return Err(Error::OutOfRange {
                name: "axes",
                value: f64::NAN,
                requirement: "the two scan axes must differ",
            });
        }
        if rotation_iters < 256 {
            return Err(Error::OutOfRange {
                name: "rotation_iters",
                value: rotation_iters as f64,
                requirement: "rotation_iters >= 256",
            });
        }
        Ok(Self { axis1, axis2, rotation_iters })
    }
}

/// Rasterizes the grid. Cells are independent and evaluated by rayon's
/// current thread pool; the result does not depend on scheduling.
pub fn scan<T: Real>(spec: &ScanSpec<T>, base: &OscillatorParams<T>) -> Result<ScanGrid<T>> {
    let (a1, a2) = (&spec.axis1, &spec.axis2);
    // Forcing tables depend only on lambda; share them across the grid.
    let steps = base.steps_per_period();
    let lambda_tables: Option<Vec<Arc<ForcingTable<T>>>> = if a1.param == Param::Lambda {
        Some(build_tables(base, a1, steps)?)
    } else if a2.param == Param::Lambda {
        Some(build_tables(base, a2, steps)?)
    } else {
        None
    };
    let shared_table = if lambda_tables.is_none() {
        Some(Arc::new(ForcingTable::new(base.forcing(), steps)))
    } else {
        None
    };

    let total = a1.n * a2.n;
    let cells = (0..total)
        .into_par_iter()
        .map(|idx| -> Result<Cell<T>> {
            let col = idx % a1.n;
            let row = idx / a1.n;
            let params = apply_override(
                &apply_override(base, a1.param, a1.value(col))?,
                a2.param,
                a2.value(row),
            )?;
            let table = match (&lambda_tables, &shared_table) {
                (Some(tables), _) => {
                    let i = if a1.param == Param::Lambda { col } else { row };
                    tables[i].clone()
                }
                (None, Some(t)) => t.clone(),
                _ => unreachable!(),
            };
            let map = LiftedMap::with_table(&params, table);
            let t = entrainment_test_with(&map);
            let rotation = rotation_number_with(&map, T::zero(), spec.rotation_iters);
            Ok(Cell { entrained: t.entrained, degenerate: t.degenerate, rotation, width: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanGrid { axis1: a1.clone(), axis2: a2.clone(), cells })
}

fn build_tables<T: Real>(
    base: &OscillatorParams<T>,
    axis: &AxisSpec<T>,
    steps: u32,
) -> Result<Vec<Arc<ForcingTable<T>>>> {
    (0..axis.n)
        .map(|i| {
            let f = base.forcing().at_lambda(axis.value(i))?;
            Ok(Arc::new(ForcingTable::new(&f, steps)))
        })
        .collect()
}

/// Measured detuning interval of entrainment.
#[derive(Debug, Clone, Copy)]
pub struct WidthMeasurement<T: Real> {
    pub sigma_lo: T,
    pub sigma_hi: T,
    /// False when no entrained detuning exists on the search bracket; the
    /// bounds then satisfy `sigma_lo > sigma_hi`.
    pub found: bool,
}

impl<T: Real> WidthMeasurement<T> {
    pub fn width(&self) -> T {
        if self.found {
            self.sigma_hi - self.sigma_lo
        } else {
            T::zero()
        }
    }

    fn empty() -> Self {
        Self { sigma_lo: T::infinity(), sigma_hi: T::neg_infinity(), found: false }
    }
}

/// Bisection tolerance for measured boundaries.
const EDGE_TOL: f64 = 1e-9;

/// Measures the entrained detuning interval at daylight fraction `lambda`.
///
/// The search starts from the first-order center estimate and brackets each
/// edge outward inside `[-0.5/q, 0.5/q]` (adjacent tongues live one unit of
/// `1/q` away), then bisects the entrainment predicate to 1e-9. When the
/// center is not entrained the edges are instead located as roots of the
/// monotone maps `sigma -> max G` and `sigma -> min G`, which resolves
/// hairline pockets without exhaustive scanning; an inverted root pair
/// means no entrained detuning exists.
pub fn measure_width<T: Real>(
    lambda: T,
    base: &OscillatorParams<T>,
) -> Result<WidthMeasurement<T>> {
    let params = base.with_lambda(lambda)?;
    let table = Arc::new(ForcingTable::new(params.forcing(), params.steps_per_period()));
    let q = lit::<T>(params.q() as f64);
    let cap = lit::<T>(0.5) / q;
    let seed = center_estimate(&params).max(-cap).min(cap);

    let at = |sigma: T| LiftedMap::with_table(&params.with_sigma(sigma), table.clone());
    let entrained = |sigma: T| entrainment_test_with(&at(sigma)).entrained;

    if entrained(seed) {
        // Outward expansion then predicate bisection per edge.
        let (plo, phi) = predicted_boundaries(&params, lambda);
        let scale = ((phi - plo) * lit::<T>(0.25)).max(lit::<T>(1e-7));
        let hi = bisect_predicate(&entrained, seed, scale, cap, true);
        let lo = bisect_predicate(&entrained, seed, scale, -cap, false);
        return Ok(WidthMeasurement { sigma_lo: lo, sigma_hi: hi, found: true });
    }

    // Monotone-root path. Lower edge: root of max G; upper: root of min G.
    let max_g = |sigma: T| residual_extrema(&at(sigma)).1;
    let min_g = |sigma: T| residual_extrema(&at(sigma)).0;
    let lo = match scalar_root(&max_g, seed, -cap, cap) {
        Some(r) => r,
        None => return Ok(WidthMeasurement::empty()),
    };
    let hi = match scalar_root(&min_g, seed, -cap, cap) {
        Some(r) => r,
        None => return Ok(WidthMeasurement::empty()),
    };
    if hi > lo {
        // Confirm this is a genuine (non-degenerate) entrained interval.
        let mid = (lo + hi) * lit::<T>(0.5);
        let t = entrainment_test_with(&at(mid));
        if t.entrained {
            return Ok(WidthMeasurement { sigma_lo: lo, sigma_hi: hi, found: true });
        }
    }
    Ok(WidthMeasurement::empty())
}

/// Expands from an entrained point toward `cap` until the predicate flips,
/// then bisects the flip to `EDGE_TOL`.
fn bisect_predicate<T: Real>(
    entrained: &impl Fn(T) -> bool,
    seed: T,
    scale: T,
    cap: T,
    upward: bool,
) -> T {
    let mut inside = seed;
    let mut step = scale;
    let two = lit::<T>(2.0);
    let mut outside = loop {
        let candidate = if upward { inside + step } else { inside - step };
        let clamped = if upward { candidate.min(cap) } else { candidate.max(cap) };
        if entrained(clamped) {
            inside = clamped;
            if clamped == cap {
                // Entrained all the way to the bracket edge.
                return cap;
            }
            step = step * two;
        } else {
            break clamped;
        }
    };
    let tol = lit::<T>(EDGE_TOL);
    while (outside - inside).abs() > tol {
        let mid = (outside + inside) * lit::<T>(0.5);
        if entrained(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    (outside + inside) * lit::<T>(0.5)
}

/// Root of a scalar function that is strictly increasing in sigma,
/// bracketed by outward expansion from `seed` and refined by bisection.
fn scalar_root<T: Real>(f: &impl Fn(T) -> T, seed: T, lo_cap: T, hi_cap: T) -> Option<T> {
    let v0 = f(seed);
    if v0 == T::zero() {
        return Some(seed);
    }
    let upward = v0 < T::zero();
    let mut near = seed;
    let mut step = lit::<T>(1e-6);
    let two = lit::<T>(2.0);
    let mut far = loop {
        let candidate = if upward { near + step } else { near - step };
        let clamped = if upward { candidate.min(hi_cap) } else { candidate.max(lo_cap) };
        let v = f(clamped);
        if (v < T::zero()) == upward {
            near = clamped;
            if clamped == hi_cap || clamped == lo_cap {
                return None; // no sign change inside the bracket
            }
            step = step * two;
        } else {
            break clamped;
        }
    };
    let tol = lit::<T>(EDGE_TOL * 0.1);
    while (far - near).abs() > tol {
        let mid = (far + near) * lit::<T>(0.5);
        let v = f(mid);
        if (v < T::zero()) == upward {
            near = mid;
        } else {
            far = mid;
        }
    }
    Some((far + near) * lit::<T>(0.5))
}

/// Interior pinch location read off a raster whose second axis is the
/// daylight fraction.
///
/// The number of entrained cells in a row measures the tongue width at
/// that season in units of the grid cell, so a pinch shows up as a
/// connected region of rows whose count drops below the typical level.
/// Whether an individual thin row is hit at all depends on how the grid
/// lines happen to fall, which makes gap *edges* noisy; the count-deficit
/// centroid below is stable against that.
///
/// Within the occupied row range, rows are scored by their deficit below
/// the median count; the centroid of the deficit component carrying the
/// most mass is the pinch estimate. `None` when nothing is entrained or
/// no row falls below the median.
pub fn interior_pinch<T: Real>(grid: &ScanGrid<T>) -> Option<T> {
    let rows = grid.axis2.len();
    let cols = grid.axis1.len();
    let counts: Vec<usize> = (0..rows)
        .map(|r| (0..cols).filter(|&c| grid.cell(c, r).entrained).count())
        .collect();
    let first = counts.iter().position(|&c| c > 0)?;
    let last = rows - 1 - counts.iter().rev().position(|&c| c > 0)?;
    let mut sorted: Vec<usize> = counts[first..=last].to_vec();
    sorted.sort_unstable();
    let median = sorted[sorted.len() / 2];
    if median == 0 {
        return None;
    }
    // Connected components of rows below the median; keep the heaviest.
    let deficit = |r: usize| median.saturating_sub(counts[r]);
    let mut best: Option<(usize, usize, usize)> = None; // (mass, start, end)
    let mut run: Option<(usize, usize, usize)> = None;
    for r in first..=last {
        let d = deficit(r);
        if d > 0 {
            let entry = run.get_or_insert((0, r, r));
            entry.0 += d;
            entry.2 = r;
        }
        if (d == 0 || r == last) && run.is_some() {
            let done = run.take().unwrap();
            if best.is_none_or(|b| done.0 > b.0) {
                best = Some(done);
            }
        }
    }
    let (_, start, end) = best?;
    let mut mass = T::zero();
    let mut weighted = T::zero();
    for r in start..=end {
        let d = lit::<T>(deficit(r) as f64);
        mass = mass + d;
        weighted = weighted + d * grid.axis2.value(r);
    }
    Some(weighted / mass)
}

/// Maximal runs of entrained daylight fractions at fixed frequency,
/// sampled at 512 points and refined by bisection at the run edges.
pub fn seasonal_range<T: Real>(
    omega: T,
    base: &OscillatorParams<T>,
) -> Result<Vec<(T, T)>> {
    const N: usize = 512;
    let pq = lit::<T>(base.p() as f64) / lit::<T>(base.q() as f64);
    let at_sigma = base.with_sigma(omega - pq);
    let entrained_at = |lambda: T| -> Result<bool> {
        let params = at_sigma.with_lambda(lambda)?;
        Ok(entrainment_test_with(&LiftedMap::new(&params)).entrained)
    };
    let flags = (0..N)
        .into_par_iter()
        .map(|j| entrained_at(lit::<T>(j as f64 / (N - 1) as f64)))
        .collect::<Result<Vec<_>>>()?;

    let grid = |j: usize| lit::<T>(j as f64 / (N - 1) as f64);
    let tol = lit::<T>(EDGE_TOL);
    let refine = |mut inside: T, mut outside: T| -> Result<T> {
        while (outside - inside).abs() > tol {
            let mid = (outside + inside) * lit::<T>(0.5);
            if entrained_at(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok((outside + inside) * lit::<T>(0.5))
    };

    let mut intervals = Vec::new();
    let mut j = 0usize;
    while j < N {
        if !flags[j] {
            j += 1;
            continue;
        }
        let run_start = j;
        while j + 1 < N && flags[j + 1] {
            j += 1;
        }
        let run_end = j;
        let lo = if run_start == 0 {
            T::zero()
        } else {
            refine(grid(run_start), grid(run_start - 1))?
        };
        let hi = if run_end == N - 1 {
            T::one()
        } else {
            refine(grid(run_end), grid(run_end + 1))?
        };
        intervals.push((lo, hi));
        j += 1;
    }
    Ok(intervals)
}
