//! D-decomposition of the normalized PID parameter space.
//!
//! For a fixed `r1` the closed-loop characteristic
//! `G(s) = r0 + r1 s + r2 s^2 + B(s) e^{sL}` can only change its number of
//! right-half-plane zeros across
//!
//! * the real root boundary `r0 = 0` (`G(0) = r0`),
//! * complex root boundaries: for each positive zero `w` of
//!   `g(w) = r1 w + Im{B(jw) e^{jwL}}` the line
//!   `r0 = w^2 r2 - Re{B(jw) e^{jwL}}` on which `G(jw) = 0`.
//!
//! There is no infinite root boundary because `deg B = 3 > 2`. The lines cut the
//! `(r2, r0)` window into convex cells, each of which has a constant zero
//! count; one interior witness per cell decides it.

pub mod arrangement;

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::netmodel::{PlantCoefficients, Triplet};
use crate::quasipoly::{build_characteristic, QuasiError, StabilityVerdict};
use arrangement::{arrange, EdgeKind, Line, Point, Polygon};

pub use arrangement::{EdgeKind as Edge, Point as PlanePoint, Polygon as Cell};

/// Default search limit for crossing frequencies, rad/s.
pub const DEFAULT_OMEGA_MAX: f64 = 120.0;
/// Default number of uniform samples used to bracket zeros of `g`.
pub const DEFAULT_G_SAMPLES: usize = 10_000;

/// Box in the `(r2, r0)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub r2_min: f64,
    pub r2_max: f64,
    pub r0_min: f64,
    pub r0_max: f64,
}

impl Window {
    pub const fn new(r2_min: f64, r2_max: f64, r0_min: f64, r0_max: f64) -> Self {
        Self { r2_min, r2_max, r0_min, r0_max }
    }

    pub fn is_valid(&self) -> bool {
        let vals = [self.r2_min, self.r2_max, self.r0_min, self.r0_max];
        vals.iter().all(|v| v.is_finite()) && self.r2_min < self.r2_max && self.r0_min < self.r0_max
    }
}

impl Default for Window {
    fn default() -> Self {
        Self::new(0.0, 6.0, 0.0, 4.0)
    }
}

/// Complex root boundary `r0 = slope * r2 + intercept` for crossing frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbLine {
    pub omega: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl CrbLine {
    pub fn r0_at(&self, r2: f64) -> f64 {
        self.slope * r2 + self.intercept
    }

    fn line(&self) -> Line {
        Line::from_slope(self.slope, self.intercept)
    }
}

/// Knobs of the boundary search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    pub omega_max: f64,
    pub g_samples: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self { omega_max: DEFAULT_OMEGA_MAX, g_samples: DEFAULT_G_SAMPLES }
    }
}

/// A classified cell of one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedCell {
    pub polygon: Polygon,
    /// Interior point `(r2, r0)` the verdict was computed at.
    pub witness: Point,
    pub verdict: StabilityVerdict,
}

impl ClassifiedCell {
    pub fn is_stable(&self) -> bool {
        self.verdict.stable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRegion {
    pub r1: f64,
    pub window: Window,
    pub crb_lines: Vec<CrbLine>,
    /// Every cell of the arrangement inside the window with `r0 >= 0`.
    pub cells: Vec<ClassifiedCell>,
    /// Cells for which no usable interior witness could be found.
    pub dropped_cells: usize,
}

impl SliceRegion {
    pub fn stable_cells(&self) -> impl Iterator<Item = &ClassifiedCell> {
        self.cells.iter().filter(|c| c.is_stable())
    }

    pub fn is_empty(&self) -> bool {
        self.stable_cells().next().is_none()
    }

    /// Stable cell whose interior holds `(r2, r0)` by more than `tol`.
    pub fn stable_cell_containing(&self, r2: f64, r0: f64, tol: f64) -> Option<&ClassifiedCell> {
        let p = Point::new(r2, r0);
        self.stable_cells().find(|c| c.polygon.contains(p, tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRegion {
    pub slices: Vec<SliceRegion>,
    pub r1_range: (f64, f64),
    pub plant: PlantCoefficients,
}

impl StabilityRegion {
    /// Slices must already be sorted by `r1`.
    pub fn from_slices(slices: Vec<SliceRegion>, r1_range: (f64, f64), plant: PlantCoefficients) -> Self {
        debug_assert!(slices.windows(2).all(|w| w[0].r1 <= w[1].r1));
        Self { slices, r1_range, plant }
    }

    pub fn is_empty(&self) -> bool {
        self.slices.iter().all(SliceRegion::is_empty)
    }

    /// Slice closest to `r1` if `r1` lies within half a grid step of the grid.
    pub fn nearest_slice(&self, r1: f64) -> Option<&SliceRegion> {
        let first = self.slices.first()?;
        let last = self.slices.last()?;
        let half = if self.slices.len() > 1 {
            0.5 * (last.r1 - first.r1) / (self.slices.len() - 1) as f64
        } else {
            0.0
        };
        if r1 < first.r1 - half || r1 > last.r1 + half {
            return None;
        }
        self.slices.iter().min_by(|a, b| {
            (a.r1 - r1).abs().partial_cmp(&(b.r1 - r1).abs()).expect("finite r1")
        })
    }
}

fn b_rotated(plant: &PlantCoefficients, omega: f64) -> Complex64 {
    let s = Complex64::new(0.0, omega);
    let b = plant.b_poly();
    let val = b.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c);
    val * Complex64::from_polar(1.0, omega * plant.delay)
}

/// `r1 w + Im{B(jw) e^{jwL}}`, the imaginary part of `G(jw)` with `r0`, `r2` eliminated.
pub fn g_of_omega(omega: f64, r1: f64, plant: &PlantCoefficients) -> f64 {
    r1 * omega + b_rotated(plant, omega).im
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width_tol: f64, value_tol: f64) -> f64 {
    let mut flo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 || (hi - lo < width_tol && fm.abs() < value_tol) {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

/// Sign-change-bracketed zeros of `g` on `(0, omega_max]`, ascending.
pub fn find_g_zeros(r1: f64, omega_max: f64, plant: &PlantCoefficients) -> Vec<f64> {
    find_g_zeros_with(r1, omega_max, DEFAULT_G_SAMPLES, plant)
}

pub fn find_g_zeros_with(r1: f64, omega_max: f64, samples: usize, plant: &PlantCoefficients) -> Vec<f64> {
    let g = |w: f64| g_of_omega(w, r1, plant);
    let step = omega_max / samples as f64;
    let grid: Vec<(f64, f64)> = (1..=samples)
        .map(|i| {
            let w = i as f64 * step;
            (w, g(w))
        })
        .collect();

    // Intervals next to a sign change or a local dip of |g| are rescanned at
    // ten times the density, which separates closely spaced zero pairs.
    let n = grid.len();
    let crosses = |i: usize| grid[i].1 == 0.0 || (grid[i].1 < 0.0) != (grid[i + 1].1 < 0.0);
    let mut refine = alloc::vec![false; n.saturating_sub(1)];
    for i in 0..n.saturating_sub(1) {
        if crosses(i) {
            for k in i.saturating_sub(1)..=(i + 1).min(n - 2) {
                refine[k] = true;
            }
        }
        if i > 0 && grid[i].1.abs() < grid[i - 1].1.abs() && grid[i].1.abs() < grid[i + 1].1.abs() {
            refine[i - 1] = true;
            refine[i] = true;
        }
    }

    let width_tol = 1e-10 * omega_max;
    let value_tol = 1e-9 * r1.abs().max(1.0) * omega_max;
    let mut zeros = Vec::new();
    let push = |lo: (f64, f64), hi: (f64, f64), zeros: &mut Vec<f64>| {
        if lo.1 == 0.0 {
            zeros.push(lo.0);
        } else if (lo.1 < 0.0) != (hi.1 < 0.0) && hi.1 != 0.0 {
            zeros.push(bisect(g, lo.0, hi.0, width_tol, value_tol));
        }
    };
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (grid[i], grid[i + 1]);
        if refine[i] {
            let sub = 10;
            let mut prev = a;
            for k in 1..=sub {
                let w = if k == sub { b.0 } else { a.0 + (b.0 - a.0) * k as f64 / sub as f64 };
                let cur = if k == sub { b } else { (w, g(w)) };
                push(prev, cur, &mut zeros);
                prev = cur;
            }
        } else {
            push(a, b, &mut zeros);
        }
    }
    if let Some(&(w, v)) = grid.last() {
        if v == 0.0 {
            zeros.push(w);
        }
    }
    zeros.dedup_by(|a, b| (*a - *b).abs() <= width_tol);
    zeros
}

/// Line through all `(r2, r0)` with `G(j omega) = 0` at the given `r1`.
pub fn crb_line_at(omega: f64, plant: &PlantCoefficients) -> CrbLine {
    CrbLine {
        omega,
        slope: omega * omega,
        intercept: -b_rotated(plant, omega).re,
    }
}

pub fn crb_lines(r1: f64, plant: &PlantCoefficients, omega_max: f64) -> Vec<CrbLine> {
    find_g_zeros(r1, omega_max, plant)
        .into_iter()
        .map(|w| crb_line_at(w, plant))
        .collect()
}

/// `|G(j omega)|` at a point of a boundary line, relative to the size of the summands.
pub fn boundary_residual(plant: &PlantCoefficients, r1: f64, line: &CrbLine, r2: f64) -> f64 {
    let t = Triplet::new(line.r0_at(r2), r1, r2);
    let s = Complex64::new(0.0, line.omega);
    let q = build_characteristic(plant, &t).expect("plant characteristic is retarded");
    let scale: f64 = q
        .terms()
        .iter()
        .map(|term| term.poly.iter().rev().fold(0.0, |acc, &c| acc * line.omega + c.abs()))
        .sum();
    q.eval(s).norm() / scale.max(1.0)
}

/// Verdict at `(r2, r0)` with the slice's `r1`.
pub fn verdict_at(plant: &PlantCoefficients, t: &Triplet) -> Result<StabilityVerdict, QuasiError> {
    build_characteristic(plant, t)?.rhp_zero_count()
}

fn candidate_witnesses(poly: &Polygon) -> impl Iterator<Item = Point> + '_ {
    let c = poly.centroid();
    let toward_vertices = poly.vertices.iter().map(move |&v| c.lerp(v, 0.5));
    let toward_edges = (0..poly.len()).map(move |i| {
        let (a, b) = poly.edge(i);
        c.lerp(a.lerp(b, 0.5), 0.5)
    });
    core::iter::once(c).chain(toward_vertices).chain(toward_edges)
}

pub fn slice_region(r1: f64, window: Window, plant: &PlantCoefficients) -> SliceRegion {
    slice_region_with(r1, window, plant, &SliceOptions::default())
}

pub fn slice_region_with(
    r1: f64,
    window: Window,
    plant: &PlantCoefficients,
    opts: &SliceOptions,
) -> SliceRegion {
    let lines = find_g_zeros_with(r1, opts.omega_max, opts.g_samples, plant)
        .into_iter()
        .map(|w| crb_line_at(w, plant))
        .collect::<Vec<_>>();
    let mut region = SliceRegion { r1, window, crb_lines: lines, cells: Vec::new(), dropped_cells: 0 };
    if !window.is_valid() || window.r0_max <= 0.0 {
        return region;
    }

    // Cells below the real root boundary are never retained.
    let r0_lo = window.r0_min.max(0.0);
    let bottom = if r0_lo == 0.0 { EdgeKind::Rrb } else { EdgeKind::Window };
    let square = Polygon::rectangle(window.r2_min, window.r2_max, r0_lo, window.r0_max, bottom);

    let cuts: Vec<(Line, EdgeKind)> = region
        .crb_lines
        .iter()
        .enumerate()
        .map(|(i, l)| (l.line(), EdgeKind::Crb(i)))
        .collect();
    let witness_tol = 1e-9 * (window.r2_max - window.r2_min).max(window.r0_max - r0_lo);

    for polygon in arrange(square, &cuts) {
        let mut found = None;
        for p in candidate_witnesses(&polygon) {
            let clear = cuts.iter().all(|(l, _)| l.signed_distance(p).abs() > witness_tol)
                && p.y > witness_tol;
            if !clear {
                continue;
            }
            match verdict_at(plant, &Triplet::new(p.y, r1, p.x)) {
                Ok(v) => {
                    found = Some((p, v));
                    break;
                }
                Err(_) => continue,
            }
        }
        match found {
            Some((witness, verdict)) => region.cells.push(ClassifiedCell { polygon, witness, verdict }),
            None => region.dropped_cells += 1,
        }
    }
    region
}

/// Uniform `r1` grid from `r1_range.0` to `r1_range.1` inclusive.
pub fn r1_grid(r1_range: (f64, f64), r1_steps: usize) -> Vec<f64> {
    assert!(r1_steps >= 2, "r1 sweep needs at least two steps");
    let (lo, hi) = r1_range;
    (0..r1_steps)
        .map(|i| {
            // Weighted endpoints keep decimal grids such as 0.05 steps exact where possible.
            let n = (r1_steps - 1) as f64;
            (lo * (n - i as f64) + hi * i as f64) / n
        })
        .collect()
}

pub fn sweep(
    r1_range: (f64, f64),
    r1_steps: usize,
    window: Window,
    plant: &PlantCoefficients,
) -> StabilityRegion {
    let slices = r1_grid(r1_range, r1_steps)
        .into_iter()
        .map(|r1| slice_region(r1, window, plant))
        .collect();
    StabilityRegion::from_slices(slices, r1_range, *plant)
}

/// Membership tolerance around polygon edges; closer points are re-verified directly.
pub const CONTAINS_TOL: f64 = 1e-6;

pub fn contains(region: &StabilityRegion, t: &Triplet) -> bool {
    if !t.is_finite() || t.r0 <= 0.0 {
        return false;
    }
    let Some(slice) = region.nearest_slice(t.r1) else {
        return false;
    };
    let p = Point::new(t.r2, t.r0);
    let mut near_boundary = false;
    for cell in slice.stable_cells() {
        match cell.polygon.boundary_distance(p) {
            Some(d) if d > CONTAINS_TOL => return true,
            Some(_) => near_boundary = true,
            None => {}
        }
    }
    if !near_boundary {
        // Points just outside a stable cell are also re-checked.
        near_boundary = slice.cells.iter().any(|c| {
            c.polygon.boundary_distance(p).is_some_and(|d| d <= CONTAINS_TOL)
        });
    }
    near_boundary && verdict_at(&region.plant, t).is_ok_and(|v| v.stable)
}

/// Midpoint of the longest complex-root edge of the stable cell around `(r2, r0)`.
///
/// Such a point puts a conjugate pair exactly on the imaginary axis, which makes
/// it the reference "marginal" design next to an interior one.
pub fn crb_edge_midpoint(slice: &SliceRegion, r2: f64, r0: f64) -> Option<Triplet> {
    let cell = slice.stable_cell_containing(r2, r0, 0.0)?;
    let poly = &cell.polygon;
    let mut best: Option<(f64, Point)> = None;
    for i in 0..poly.len() {
        if !matches!(poly.kinds[i], EdgeKind::Crb(_)) {
            continue;
        }
        let (a, b) = poly.edge(i);
        let len = (b.x - a.x).hypot(b.y - a.y);
        if best.is_none_or(|(l, _)| len > l) {
            best = Some((len, a.lerp(b, 0.5)));
        }
    }
    best.map(|(_, m)| Triplet::new(m.y, slice.r1, m.x))
}
