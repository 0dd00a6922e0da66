//! Retarded quasi-polynomials and right-half-plane zero counting.
//!
//! A quasi-polynomial here is `G(s) = sum_k P_k(s) e^{s h_k}`. It is *retarded*
//! when one term carries the largest shift `L > 0` and its polynomial has a
//! strictly higher degree than every other term. Zeros are counted on
//! `H(s) = e^{-sL} G(s)`, which has the same zeros, stays bounded on the closed
//! right half plane and is dominated by the leading term for large `|s|`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
// Unused only when std is linked somewhere in the build.
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::netmodel::{PlantCoefficients, Triplet};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuasiError {
    #[error("quasi-polynomial is not of retarded type: {0}")]
    NotRetarded(&'static str),
    #[error("quasi-polynomial has non-finite coefficients or shifts")]
    NonFinite,
    /// `|G(j omega)|` fell below the boundary threshold; the point sits on a stability boundary.
    #[error("zero on the imaginary axis near omega = {omega} (|G| = {margin:e})")]
    ImaginaryAxisZero { omega: f64, margin: f64 },
    #[error("winding number did not converge under contour refinement")]
    ContourResolutionExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    /// Coefficients, constant term first.
    pub poly: Vec<f64>,
    /// Exponential shift `h` in `e^{s h}`, seconds.
    pub shift: f64,
}

impl Term {
    pub fn new(poly: Vec<f64>, shift: f64) -> Self {
        Self { poly, shift }
    }

    fn degree(&self) -> Option<usize> {
        self.poly.iter().rposition(|&c| c != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPolynomial {
    terms: Vec<Term>,
    main: usize,
    degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub rhp_zero_count: usize,
    pub contour_radius: f64,
    /// Smallest `|G|` seen on the imaginary-axis part of the contour.
    pub margin: f64,
}

/// Tuning knobs of the contour walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    /// Minimum number of base samples on each contour piece.
    pub min_samples: usize,
    /// Number of times the base density may be doubled before giving up.
    pub max_doublings: u32,
    /// Depth limit of the local bisection between two base samples.
    pub max_depth: u32,
    /// Imaginary-axis zero threshold relative to the coefficient scale.
    pub axis_tol: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { min_samples: 128, max_doublings: 4, max_depth: 50, axis_tol: 1e-9 }
    }
}

// Largest phase increment accepted between neighbouring samples.
const MAX_PHASE_STEP: f64 = PI / 4.0;

fn horner(poly: &[f64], s: Complex64) -> Complex64 {
    poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

impl QuasiPolynomial {
    pub fn new(terms: Vec<Term>) -> Result<Self, QuasiError> {
        if terms.is_empty() {
            return Err(QuasiError::NotRetarded("no terms"));
        }
        if terms.iter().any(|t| !t.shift.is_finite() || t.poly.iter().any(|c| !c.is_finite())) {
            return Err(QuasiError::NonFinite);
        }
        let max_shift = terms.iter().map(|t| t.shift).fold(f64::NEG_INFINITY, f64::max);
        if max_shift <= 0.0 {
            return Err(QuasiError::NotRetarded("largest shift must be positive"));
        }
        let mut at_max = terms.iter().enumerate().filter(|(_, t)| t.shift == max_shift);
        let (main, main_term) = at_max.next().expect("max attained");
        if at_max.next().is_some() {
            return Err(QuasiError::NotRetarded("largest shift attained by several terms"));
        }
        let degree = main_term
            .degree()
            .ok_or(QuasiError::NotRetarded("leading term is identically zero"))?;
        let dominated = terms
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != main)
            .all(|(_, t)| t.degree().map_or(true, |d| d < degree));
        if !dominated {
            return Err(QuasiError::NotRetarded(
                "leading term must have strictly the highest degree",
            ));
        }
        Ok(Self { terms, main, degree })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest shift `L`.
    pub fn max_shift(&self) -> f64 {
        self.terms[self.main].shift
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.terms.iter().map(|t| horner(&t.poly, s) * (s * t.shift).exp()).sum()
    }

    /// `e^{-sL} G(s)`.
    pub fn eval_scaled(&self, s: Complex64) -> Complex64 {
        let l = self.max_shift();
        self.terms
            .iter()
            .map(|t| {
                let p = horner(&t.poly, s);
                if t.shift == l {
                    p
                } else {
                    p * (s * (t.shift - l)).exp()
                }
            })
            .sum()
    }

    /// Sum of absolute coefficient values; the scale of the axis-zero threshold.
    pub fn coefficient_scale(&self) -> f64 {
        self.terms.iter().flat_map(|t| t.poly.iter()).map(|c| c.abs()).sum()
    }

    /// Radius beyond which no zero with `Re s >= 0` can exist, doubled.
    ///
    /// On `Re s >= 0` every non-leading exponential has modulus at most one, so
    /// a zero needs `|a_n| |s|^n <= sum_{i<n} A_i |s|^i`, where `A_i` collects
    /// the moduli of all other coefficients of power `i`. Every positive root of
    /// that majorant lies below Fujiwara's `2 max_i (A_i / |a_n|)^(1 / (n - i))`.
    pub fn rhp_bound(&self) -> f64 {
        let main = &self.terms[self.main];
        let n = self.degree;
        let lead = main.poly[n].abs();
        let mut by_power = alloc::vec![0.0; n];
        for (k, t) in self.terms.iter().enumerate() {
            // Entries above `n` in other terms are zero by the retarded check.
            let len = if k == self.main { n } else { t.poly.len().min(n) };
            for (i, c) in t.poly[..len].iter().enumerate() {
                by_power[i] += c.abs();
            }
        }
        let fujiwara = by_power
            .iter()
            .enumerate()
            .map(|(i, a)| 2.0 * (a / lead).powf(1.0 / (n - i) as f64))
            .fold(0.0, f64::max);
        2.0 * f64::max(1.0, fujiwara)
    }

    pub fn rhp_zero_count(&self) -> Result<StabilityVerdict, QuasiError> {
        self.rhp_zero_count_with(&CountOptions::default())
    }

    pub fn rhp_zero_count_with(&self, opts: &CountOptions) -> Result<StabilityVerdict, QuasiError> {
        let radius = self.rhp_bound();
        let threshold = opts.axis_tol * self.coefficient_scale().max(f64::MIN_POSITIVE);
        let base = opts
            .min_samples
            .max((16.0 * (radius * self.max_shift() + self.degree as f64)).ceil() as usize);

        let mut previous: Option<i64> = None;
        let mut margin = f64::INFINITY;
        for doubling in 0..=opts.max_doublings {
            let n = base << doubling;
            let walk = self.walk_contour(radius, n, opts.max_depth);
            if walk.margin < margin {
                margin = walk.margin;
            }
            if walk.margin < threshold {
                return Err(QuasiError::ImaginaryAxisZero {
                    omega: walk.margin_omega,
                    margin: walk.margin,
                });
            }
            let turns = walk.phase / (2.0 * PI);
            let count = turns.round();
            if walk.resolved && (turns - count).abs() < 0.25 {
                let count = count as i64;
                if previous == Some(count) {
                    if count < 0 {
                        return Err(QuasiError::ContourResolutionExceeded);
                    }
                    return Ok(StabilityVerdict {
                        stable: count == 0,
                        rhp_zero_count: count as usize,
                        contour_radius: radius,
                        margin,
                    });
                }
                previous = Some(count);
            } else {
                previous = None;
            }
        }
        Err(QuasiError::ContourResolutionExceeded)
    }

    fn walk_contour(&self, radius: f64, n: usize, max_depth: u32) -> Walk {
        let mut walk = Walk {
            phase: 0.0,
            margin: f64::INFINITY,
            margin_omega: 0.0,
            resolved: true,
        };
        // Counterclockwise: right semicircle from -jR to +jR, then down the axis.
        let arc = |t: f64| Complex64::from_polar(radius, -FRAC_PI_2 + PI * t);
        self.walk_piece(&arc, n, max_depth, false, &mut walk);
        let upper = |t: f64| Complex64::new(0.0, radius * (1.0 - t));
        self.walk_piece(&upper, n, max_depth, true, &mut walk);
        let lower = |t: f64| Complex64::new(0.0, -radius * t);
        self.walk_piece(&lower, n, max_depth, true, &mut walk);
        walk
    }

    fn walk_piece(
        &self,
        path: &dyn Fn(f64) -> Complex64,
        n: usize,
        max_depth: u32,
        on_axis: bool,
        walk: &mut Walk,
    ) {
        let sample = |t: f64, walk: &mut Walk| {
            let s = path(t);
            let h = self.eval_scaled(s);
            if on_axis {
                let m = h.norm();
                if m < walk.margin {
                    walk.margin = m;
                    walk.margin_omega = s.im;
                }
            }
            h
        };
        let mut t0 = 0.0;
        let mut h0 = sample(t0, walk);
        for i in 1..=n {
            let t1 = i as f64 / n as f64;
            let h1 = sample(t1, walk);
            let mut stack: Vec<(f64, Complex64, f64, Complex64, u32)> = Vec::new();
            stack.push((t0, h0, t1, h1, 0));
            while let Some((ta, ha, tb, hb, depth)) = stack.pop() {
                let step = (hb / ha).arg();
                if step.abs() <= MAX_PHASE_STEP {
                    walk.phase += step;
                    continue;
                }
                if depth >= max_depth {
                    walk.phase += step;
                    walk.resolved = false;
                    continue;
                }
                let tm = 0.5 * (ta + tb);
                let hm = sample(tm, walk);
                // Second half first so the first half is processed next.
                stack.push((tm, hm, tb, hb, depth + 1));
                stack.push((ta, ha, tm, hm, depth + 1));
            }
            t0 = t1;
            h0 = h1;
        }
    }
}

struct Walk {
    phase: f64,
    margin: f64,
    margin_omega: f64,
    resolved: bool,
}

/// `G(s) = (r0 + r1 s + r2 s^2) + B(s) e^{sL}` for the closed PID loop.
pub fn build_characteristic(
    plant: &PlantCoefficients,
    t: &Triplet,
) -> Result<QuasiPolynomial, QuasiError> {
    QuasiPolynomial::new(alloc::vec![
        Term::new(alloc::vec![t.r0, t.r1, t.r2], 0.0),
        Term::new(plant.b_poly().to_vec(), plant.delay),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{compute_operating_point, linearize, CoefficientMode, NetworkParams};
    use alloc::vec;

    /// `s e^{s tau} + a`, characteristic of `x' = -a x(t - tau)`.
    fn scalar_delay(a: f64, tau: f64) -> QuasiPolynomial {
        QuasiPolynomial::new(vec![Term::new(vec![0.0, 1.0], tau), Term::new(vec![a], 0.0)]).unwrap()
    }

    fn nominal_plant(mode: CoefficientMode) -> PlantCoefficients {
        linearize(&compute_operating_point(&NetworkParams::nominal()).unwrap(), mode)
    }

    #[test]
    fn scalar_delay_equation() {
        let v = scalar_delay(0.5, 1.0).rhp_zero_count().unwrap();
        assert!(v.stable);
        assert_eq!(v.rhp_zero_count, 0);
        assert!(v.margin > 0.0);
        let v = scalar_delay(2.0, 1.0).rhp_zero_count().unwrap();
        assert!(!v.stable);
        // aτ = 2 lies between pi/2 and 5pi/2: exactly one conjugate pair crossed.
        assert_eq!(v.rhp_zero_count, 2);
    }

    #[test]
    fn analytic_criterion_grid() {
        for &a in &[0.1, 0.5, 1.0, 1.4, 2.0, 3.0] {
            for &tau in &[0.1, 0.5, 1.0, 1.3, 2.0] {
                let v = scalar_delay(a, tau).rhp_zero_count().unwrap();
                assert_eq!(v.stable, a * tau < FRAC_PI_2, "a = {a}, tau = {tau}");
            }
        }
    }

    #[test]
    fn polynomial_without_delay_is_rejected() {
        let err = QuasiPolynomial::new(vec![Term::new(vec![1.0, 1.0], 0.0)]).unwrap_err();
        assert!(matches!(err, QuasiError::NotRetarded(_)));
    }

    #[test]
    fn neutral_type_is_rejected() {
        let err = QuasiPolynomial::new(vec![
            Term::new(vec![0.0, 1.0], 1.0),
            Term::new(vec![1.0, 0.5], 0.0),
        ])
        .unwrap_err();
        assert!(matches!(err, QuasiError::NotRetarded(_)));
        assert_eq!(QuasiPolynomial::new(vec![]).unwrap_err(), QuasiError::NotRetarded("no terms"));
        assert_eq!(
            QuasiPolynomial::new(vec![Term::new(vec![f64::NAN, 1.0], 1.0)]).unwrap_err(),
            QuasiError::NonFinite
        );
    }

    #[test]
    fn zero_at_origin_is_an_axis_zero() {
        let q = build_characteristic(&nominal_plant(CoefficientMode::PaperCompat), &Triplet::default())
            .unwrap();
        assert_eq!(q.eval(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        assert!(matches!(q.rhp_zero_count(), Err(QuasiError::ImaginaryAxisZero { .. })));
    }

    #[test]
    fn characteristic_layout() {
        let plant = nominal_plant(CoefficientMode::PaperCompat);
        let q = build_characteristic(&plant, &Triplet::new(1.0, 2.0, 3.0)).unwrap();
        let terms = q.terms();
        assert_eq!(terms[0], Term::new(vec![1.0, 2.0, 3.0], 0.0));
        assert_eq!(terms[1].shift, 0.533);
        let expected = [0.0, 2.0, 2.239, 1.706];
        for (c, e) in terms[1].poly.iter().zip(expected) {
            assert!((c - e).abs() < 5e-4);
        }
        assert_eq!(q.eval(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));

        let derived = build_characteristic(&nominal_plant(CoefficientMode::Derived), &Triplet::default())
            .unwrap();
        assert!((derived.terms()[1].poly[3] - 0.910).abs() < 5e-4);
    }

    #[test]
    fn published_optimum_is_stable() {
        let plant = nominal_plant(CoefficientMode::PaperCompat);
        let v = build_characteristic(&plant, &Triplet::paper_optimal())
            .unwrap()
            .rhp_zero_count()
            .unwrap();
        assert!(v.stable);
    }

    #[test]
    fn counts_polynomial_roots() {
        // (s - 1)(s - 2)(s + 3) e^{0.1 s} + 0: two right-half-plane zeros.
        // Written with a tiny constant term so the polynomial is the leading one.
        let q = QuasiPolynomial::new(vec![
            Term::new(vec![6.0, -7.0, 0.0, 1.0], 0.1),
            Term::new(vec![0.0], 0.0),
        ])
        .unwrap();
        assert_eq!(q.rhp_zero_count().unwrap().rhp_zero_count, 2);
    }

    #[test]
    fn bound_covers_far_zeros() {
        // (s - 40)(s - 50)(s + 1) e^{0.2 s}: the far zeros sit near the bound's scale.
        let q = QuasiPolynomial::new(vec![
            Term::new(vec![2000.0, 1910.0, -89.0, 1.0], 0.2),
            Term::new(vec![0.0], 0.0),
        ])
        .unwrap();
        assert!(q.rhp_bound() > 50.0);
        let v = q.rhp_zero_count().unwrap();
        assert_eq!(v.rhp_zero_count, 2);
        // Large coefficients grow the radius like a root, not linearly.
        let plant = nominal_plant(CoefficientMode::PaperCompat);
        let big = build_characteristic(&plant, &Triplet::new(1.0, -1e6, 2.0)).unwrap();
        assert!(big.rhp_bound() < 1e4);
    }

    #[test]
    fn doubling_density_does_not_change_count() {
        let plant = nominal_plant(CoefficientMode::PaperCompat);
        for t in [Triplet::paper_optimal(), Triplet::new(3.0, 6.0, 0.2), Triplet::new(0.5, -1.0, 4.0)] {
            let q = build_characteristic(&plant, &t).unwrap();
            let coarse = q.rhp_zero_count().unwrap();
            let fine = q
                .rhp_zero_count_with(&CountOptions { min_samples: 4096, ..CountOptions::default() })
                .unwrap();
            assert_eq!(coarse.rhp_zero_count, fine.rhp_zero_count);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conjugate_symmetry(
                r0 in -5.0f64..5.0, r1 in -5.0f64..5.0, r2 in -5.0f64..5.0,
                re in -3.0f64..3.0, im in -30.0f64..30.0,
            ) {
                let plant = nominal_plant(CoefficientMode::PaperCompat);
                let q = build_characteristic(&plant, &Triplet::new(r0, r1, r2)).unwrap();
                let s = Complex64::new(re, im);
                let a = q.eval(s.conj());
                let b = q.eval(s).conj();
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }

            #[test]
            fn stable_verdicts_never_vanish_on_axis(
                r0 in 0.05f64..4.0, r1 in -2.0f64..8.0, r2 in 0.0f64..6.0,
            ) {
                let plant = nominal_plant(CoefficientMode::PaperCompat);
                let q = build_characteristic(&plant, &Triplet::new(r0, r1, r2)).unwrap();
                if let Ok(v) = q.rhp_zero_count() {
                    if v.stable {
                        let n = 20_000;
                        let min = (0..=n)
                            .map(|i| q.eval(Complex64::new(0.0, v.contour_radius * i as f64 / n as f64)).norm())
                            .fold(f64::INFINITY, f64::min);
                        prop_assert!(min > 0.0);
                    }
                }
            }
        }
    }
}
