//! Frequency responses, the mixed-sensitivity cost and the brute-force search.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;
// Unused only when std is linked somewhere in the build.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::netmodel::{triplet_to_gains, ModelError, OperatingPoint, PidGains, PlantCoefficients, Triplet};
use crate::paramspace::{SliceRegion, StabilityRegion};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FreqError {
    #[error("plant denominator vanishes at omega = {0}")]
    DenominatorVanishes(f64),
    #[error("controller response requested at omega = {0}; the integrator needs omega > 0")]
    NonPositiveFrequency(f64),
    #[error("return difference 1 + PC vanishes at omega = {0}")]
    UnstableLoop(f64),
    #[error("weight has a pole at omega = {0}")]
    WeightPole(f64),
    #[error("invalid frequency grid")]
    InvalidGrid,
    #[error("stability region has no stable cell")]
    EmptyRegion,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Real rational transfer function, coefficients constant term first.
#[derive(Debug, Clone, PartialEq)]
pub struct Rational {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

fn horner(poly: &[f64], s: Complex64) -> Complex64 {
    poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

impl Rational {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        Self { num, den }
    }

    pub fn eval(&self, s: Complex64) -> Option<Complex64> {
        let den = horner(&self.den, s);
        let scale: f64 = self.den.iter().map(|c| c.abs()).sum();
        if den.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        Some(horner(&self.num, s) / den)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub w1: Rational,
    pub w2: Rational,
}

impl Default for Weights {
    /// `W1 = (1 + 0.01 s) / (0.01 + s)`, `W2 = s + 1`.
    fn default() -> Self {
        Self {
            w1: Rational::new(alloc::vec![1.0, 0.01], alloc::vec![0.01, 1.0]),
            w2: Rational::new(alloc::vec![1.0, 1.0], alloc::vec![1.0]),
        }
    }
}

/// Log-spaced frequencies, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self { omega_min: 1e-3, omega_max: 1e3, points: 2000 }
    }
}

impl FrequencyGrid {
    pub fn is_valid(&self) -> bool {
        self.omega_min > 0.0 && self.omega_max > self.omega_min && self.points >= 2 && self.omega_max.is_finite()
    }

    pub fn omegas(&self) -> Vec<f64> {
        let (a, b) = (self.omega_min.log10(), self.omega_max.log10());
        let n = self.points - 1;
        (0..=n)
            .map(|i| match i {
                0 => self.omega_min,
                i if i == n => self.omega_max,
                i => 10f64.powf(a + (b - a) * i as f64 / n as f64),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostResult {
    /// `max |W1 S|^2 + |W2 T|^2` over the grid.
    pub psi: f64,
    pub argmax_omega: f64,
    pub grid: FrequencyGrid,
}

impl CostResult {
    /// Square root of `psi`, the usual mixed-sensitivity norm.
    pub fn psi_sqrt(&self) -> f64 {
        self.psi.sqrt()
    }
}

pub fn plant_response(plant: &PlantCoefficients, omega: f64) -> Result<Complex64, FreqError> {
    let s = Complex64::new(0.0, omega);
    let delay = Complex64::from_polar(1.0, -omega * plant.delay);
    let [d0, d1, d2] = plant.den_poly;
    let den = (s * d2 + d1) * s + d0 + s * delay * plant.den_delay_coeff;
    let scale = d0.abs() + (d1.abs() + (d2.abs() * omega)) * omega + plant.den_delay_coeff.abs() * omega;
    if den.norm() < 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(FreqError::DenominatorVanishes(omega));
    }
    Ok(delay * plant.num_gain / den)
}

pub fn controller_response(g: &PidGains, omega: f64) -> Result<Complex64, FreqError> {
    if !(omega > 0.0) {
        return Err(FreqError::NonPositiveFrequency(omega));
    }
    Ok(Complex64::new(g.kp, omega * g.kd - g.ki / omega))
}

/// Sensitivity and complementary sensitivity at one frequency.
pub fn sensitivities(p: Complex64, c: Complex64, omega: f64) -> Result<(Complex64, Complex64), FreqError> {
    let l = p * c;
    let ret = l + 1.0;
    if ret.norm() < 1e-12 {
        return Err(FreqError::UnstableLoop(omega));
    }
    Ok((ret.inv(), l / ret))
}

/// Plant and weight responses tabulated on a grid, reused across candidates.
#[derive(Debug, Clone)]
pub struct CostEvaluator {
    grid: FrequencyGrid,
    omegas: Vec<f64>,
    plant: Vec<Complex64>,
    w1_sq: Vec<f64>,
    w2_sq: Vec<f64>,
}

impl CostEvaluator {
    pub fn new(plant: &PlantCoefficients, w: &Weights, grid: FrequencyGrid) -> Result<Self, FreqError> {
        if !grid.is_valid() {
            return Err(FreqError::InvalidGrid);
        }
        let omegas = grid.omegas();
        let mut p = Vec::with_capacity(omegas.len());
        let mut w1_sq = Vec::with_capacity(omegas.len());
        let mut w2_sq = Vec::with_capacity(omegas.len());
        for &om in &omegas {
            let s = Complex64::new(0.0, om);
            p.push(plant_response(plant, om)?);
            w1_sq.push(w.w1.eval(s).ok_or(FreqError::WeightPole(om))?.norm_sqr());
            w2_sq.push(w.w2.eval(s).ok_or(FreqError::WeightPole(om))?.norm_sqr());
        }
        Ok(Self { grid, omegas, plant: p, w1_sq, w2_sq })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn cost(&self, g: &PidGains) -> Result<CostResult, FreqError> {
        let mut psi = f64::NEG_INFINITY;
        let mut argmax = self.omegas[0];
        for (k, &om) in self.omegas.iter().enumerate() {
            let c = controller_response(g, om)?;
            let (s, t) = sensitivities(self.plant[k], c, om)?;
            let v = self.w1_sq[k] * s.norm_sqr() + self.w2_sq[k] * t.norm_sqr();
            if !v.is_finite() {
                return Err(FreqError::UnstableLoop(om));
            }
            if v > psi {
                psi = v;
                argmax = om;
            }
        }
        Ok(CostResult { psi, argmax_omega: argmax, grid: self.grid })
    }
}

pub fn mixed_sensitivity_cost(
    plant: &PlantCoefficients,
    g: &PidGains,
    w: &Weights,
    grid: FrequencyGrid,
) -> Result<CostResult, FreqError> {
    CostEvaluator::new(plant, w, grid)?.cost(g)
}

/// One probed candidate of the grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub triplet: Triplet,
    pub psi: f64,
}

/// Everything probed on one slice; `best` is `None` for empty slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSearch {
    pub r1: f64,
    pub probes: Vec<Probe>,
    pub best: Option<Probe>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPoint {
    pub triplet: Triplet,
    pub gains: PidGains,
    pub psi: f64,
    /// `(r1, min psi)` for every non-empty slice, ascending in `r1`.
    pub slice_costs: Vec<(f64, f64)>,
}

/// Ascending `(psi, r1, r2, r0)`, the deterministic tie-break order.
fn probe_order(a: &Probe, b: &Probe) -> Ordering {
    a.psi
        .total_cmp(&b.psi)
        .then(a.triplet.r1.total_cmp(&b.triplet.r1))
        .then(a.triplet.r2.total_cmp(&b.triplet.r2))
        .then(a.triplet.r0.total_cmp(&b.triplet.r0))
}

/// Probe a `density x density` grid over the bounding box of every stable cell,
/// keeping strictly interior points.
pub fn search_slice(
    slice: &SliceRegion,
    eval: &CostEvaluator,
    op: &OperatingPoint,
    density: usize,
) -> Result<SliceSearch, FreqError> {
    let mut probes = Vec::new();
    let density = density.max(1);
    for cell in slice.stable_cells() {
        let (lo, hi) = cell.polygon.bounding_box();
        for i in 0..density {
            let r2 = lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / density as f64;
            for j in 0..density {
                let r0 = lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / density as f64;
                if !cell.polygon.contains(crate::paramspace::PlanePoint::new(r2, r0), crate::paramspace::CONTAINS_TOL) {
                    continue;
                }
                let triplet = Triplet::new(r0, slice.r1, r2);
                let gains = triplet_to_gains(&triplet, op)?;
                match eval.cost(&gains) {
                    Ok(c) => probes.push(Probe { triplet, psi: c.psi }),
                    Err(FreqError::UnstableLoop(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        // Cells thinner than the grid still get their witness probed.
        if !probes.iter().any(|p| cell.polygon.contains(
            crate::paramspace::PlanePoint::new(p.triplet.r2, p.triplet.r0), 0.0))
        {
            let triplet = Triplet::new(cell.witness.y, slice.r1, cell.witness.x);
            if let Ok(c) = eval.cost(&triplet_to_gains(&triplet, op)?) {
                probes.push(Probe { triplet, psi: c.psi });
            }
        }
    }
    let best = probes.iter().copied().min_by(probe_order);
    Ok(SliceSearch { r1: slice.r1, probes, best })
}

/// Combine per-slice searches into the global optimum.
pub fn assemble(searches: &[SliceSearch], op: &OperatingPoint) -> Result<OptimalPoint, FreqError> {
    let best = searches
        .iter()
        .filter_map(|s| s.best)
        .min_by(probe_order)
        .ok_or(FreqError::EmptyRegion)?;
    let slice_costs = searches.iter().filter_map(|s| s.best.map(|b| (s.r1, b.psi))).collect();
    Ok(OptimalPoint {
        triplet: best.triplet,
        gains: triplet_to_gains(&best.triplet, op)?,
        psi: best.psi,
        slice_costs,
    })
}

pub fn optimize(
    region: &StabilityRegion,
    op: &OperatingPoint,
    w: &Weights,
    grid: FrequencyGrid,
    density: usize,
) -> Result<OptimalPoint, FreqError> {
    if region.is_empty() {
        return Err(FreqError::EmptyRegion);
    }
    let eval = CostEvaluator::new(&region.plant, w, grid)?;
    let searches = region
        .slices
        .iter()
        .map(|s| search_slice(s, &eval, op, density))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(&searches, op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{compute_operating_point, linearize, CoefficientMode, NetworkParams};
    use approx::assert_relative_eq;

    fn nominal() -> (OperatingPoint, PlantCoefficients) {
        let op = compute_operating_point(&NetworkParams::nominal()).unwrap();
        (op, linearize(&op, CoefficientMode::PaperCompat))
    }

    #[test]
    fn static_plant_gain() {
        let (op, plant) = nominal();
        let p = plant_response(&plant, 0.0).unwrap();
        assert_eq!(p.im, 0.0);
        assert_relative_eq!(p.re, op.gain_k / 2.0);
        assert_relative_eq!(p.re, 409.6, max_relative = 1e-12);
    }

    #[test]
    fn plant_rolls_off() {
        let (_, plant) = nominal();
        let a = plant_response(&plant, 10.0).unwrap().norm();
        let b = plant_response(&plant, 1000.0).unwrap().norm();
        assert!(b < a / 1000.0);
    }

    #[test]
    fn controller_values() {
        let c = controller_response(&PidGains::new(1.0, 1.0, 1.0), 1.0).unwrap();
        assert_eq!(c, Complex64::new(1.0, 0.0));
        assert!(controller_response(&PidGains::new(1.0, 1.0, 1.0), 0.0).is_err());
        let bounded = controller_response(&PidGains::new(2.0, 0.0, 1.0), 1e-9).unwrap();
        assert!(bounded.norm() < 2.0 + 1e-6);
        // Frozen: 3.845e-3 + j (2.091e-3 - 1.488e-3) at omega = 1.
        let c = controller_response(&PidGains::new(3.845e-3, 1.488e-3, 2.091e-3), 1.0).unwrap();
        assert_relative_eq!(c.re, 3.845e-3);
        assert_relative_eq!(c.im, 6.03e-4, max_relative = 1e-12);
    }

    #[test]
    fn sensitivities_sum_to_one() {
        let (op, plant) = nominal();
        let g = triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap();
        for om in FrequencyGrid::default().omegas() {
            let (s, t) = sensitivities(plant_response(&plant, om).unwrap(), controller_response(&g, om).unwrap(), om)
                .unwrap();
            assert!((s + t - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn integral_action_kills_low_frequency_sensitivity() {
        let (op, plant) = nominal();
        let g = triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap();
        let s = |om: f64| {
            sensitivities(plant_response(&plant, om).unwrap(), controller_response(&g, om).unwrap(), om)
                .unwrap()
                .0
                .norm()
        };
        assert!(s(1e-3) < 1e-2);
        assert!(s(1e-3) < s(1e-2));
    }

    #[test]
    fn published_optimum_cost_fixture() {
        let (op, plant) = nominal();
        let g = triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap();
        let c = mixed_sensitivity_cost(&plant, &g, &Weights::default(), FrequencyGrid::default()).unwrap();
        // Frozen from an independent numpy evaluation of the same formula.
        assert_relative_eq!(c.psi, 8.898947200458458, max_relative = 1e-9);
        assert_relative_eq!(c.argmax_omega, 2.299751127333137, max_relative = 1e-9);
        assert_relative_eq!(c.psi_sqrt() * c.psi_sqrt(), c.psi, max_relative = 1e-12);
    }

    #[test]
    fn grid_refinement_converges() {
        let (op, plant) = nominal();
        let g = triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap();
        let w = Weights::default();
        let a = mixed_sensitivity_cost(&plant, &g, &w, FrequencyGrid::default()).unwrap().psi;
        let b = mixed_sensitivity_cost(&plant, &g, &w, FrequencyGrid { points: 8000, ..FrequencyGrid::default() })
            .unwrap()
            .psi;
        assert!((a - b).abs() <= 0.01 * b);
    }

    #[test]
    fn grid_endpoints() {
        let om = FrequencyGrid::default().omegas();
        assert_eq!(om.len(), 2000);
        assert_eq!(om[0], 1e-3);
        assert_eq!(om[1999], 1e3);
        assert!(om.windows(2).all(|w| w[0] < w[1]));
        assert!(!FrequencyGrid { omega_min: 0.0, ..FrequencyGrid::default() }.is_valid());
    }

    #[test]
    fn weight_pole_is_reported() {
        let (_, plant) = nominal();
        let w = Weights {
            w1: Rational::new(alloc::vec![1.0], alloc::vec![-1.0, 0.0, 1.0]),
            ..Weights::default()
        };
        // s^2 - 1 has no zeros on the imaginary axis; s^2 + 1 has one at omega = 1.
        assert!(CostEvaluator::new(&plant, &w, FrequencyGrid::default()).is_ok());
        let w = Weights { w1: Rational::new(alloc::vec![1.0], alloc::vec![1.0, 0.0, 1.0]), ..w };
        let grid = FrequencyGrid { omega_min: 0.5, omega_max: 2.0, points: 3 };
        assert_eq!(CostEvaluator::new(&plant, &w, grid).unwrap_err(), FreqError::WeightPole(1.0));
    }

    #[test]
    fn tie_break_prefers_smaller_r1_then_r2() {
        let p = |r0, r1, r2| Probe { triplet: Triplet::new(r0, r1, r2), psi: 1.0 };
        let searches = [
            SliceSearch { r1: 2.0, probes: alloc::vec![], best: Some(p(1.0, 2.0, 1.0)) },
            SliceSearch { r1: 1.0, probes: alloc::vec![], best: Some(p(1.0, 1.0, 2.0)) },
            SliceSearch { r1: 1.0, probes: alloc::vec![], best: Some(p(0.5, 1.0, 2.0)) },
        ];
        let (op, _) = nominal();
        let best = assemble(&searches, &op).unwrap();
        assert_eq!(best.triplet, Triplet::new(0.5, 1.0, 2.0));
        assert_eq!(assemble(&[], &op).unwrap_err(), FreqError::EmptyRegion);
    }
}
