//! Network constants, equilibrium, linearized plant and the gain transform.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid network parameter: {0}")]
    InvalidParams(&'static str),
    #[error("round-trip delay must be positive (got {0} s)")]
    NonPositiveDelay(f64),
    /// `p0 = 2 / w0^2` would exceed one.
    #[error("equilibrium window {w0} < sqrt(2) makes the marking probability exceed 1")]
    WindowTooSmall { w0: f64 },
    #[error("plant gain K is zero, the gain transform is singular")]
    ZeroGain,
}

/// Constants of a single bottleneck shared by `n_flows` homogeneous TCP flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Number of TCP sessions `N`.
    pub n_flows: f64,
    /// Link capacity `C` in packets per second.
    pub capacity: f64,
    /// Propagation delay `T_p` in seconds.
    pub prop_delay: f64,
    /// Desired queue length `q0` in packets.
    pub q_ref: f64,
}

impl NetworkParams {
    pub const fn new(n_flows: f64, capacity: f64, prop_delay: f64, q_ref: f64) -> Self {
        Self { n_flows, capacity, prop_delay, q_ref }
    }

    /// Values known to the controller in the performance experiment.
    pub const fn nominal() -> Self {
        Self::new(50.0, 300.0, 0.2, 100.0)
    }

    /// Values of the real plant in the performance experiment.
    pub const fn real_plant() -> Self {
        Self::new(40.0, 250.0, 0.3, 100.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = self.n_flows.is_finite()
            && self.capacity.is_finite()
            && self.prop_delay.is_finite()
            && self.q_ref.is_finite();
        if !finite {
            return Err(ModelError::InvalidParams("all parameters must be finite"));
        }
        if self.n_flows < 1.0 {
            return Err(ModelError::InvalidParams("n_flows must be at least 1"));
        }
        if self.capacity <= 0.0 {
            return Err(ModelError::InvalidParams("capacity must be positive"));
        }
        if self.prop_delay < 0.0 {
            return Err(ModelError::InvalidParams("prop_delay must be nonnegative"));
        }
        if self.q_ref < 0.0 {
            return Err(ModelError::InvalidParams("q_ref must be nonnegative"));
        }
        Ok(())
    }
}

/// Equilibrium `(R0, W0, p0)` of the fluid model and the plant gain `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub r0_delay: f64,
    pub w0: f64,
    pub p0: f64,
    pub gain_k: f64,
}

pub fn compute_operating_point(params: &NetworkParams) -> Result<OperatingPoint, ModelError> {
    params.validate()?;
    let r0_delay = params.q_ref / params.capacity + params.prop_delay;
    if r0_delay <= 0.0 {
        return Err(ModelError::NonPositiveDelay(r0_delay));
    }
    // R0 * C = q0 + Tp * C exactly; avoids the rounding of the division above.
    let w0 = (params.q_ref + params.prop_delay * params.capacity) / params.n_flows;
    if w0 * w0 < 2.0 {
        return Err(ModelError::WindowTooSmall { w0 });
    }
    let p0 = 2.0 / (w0 * w0);
    let gain_k = params.n_flows * w0 * w0 * w0 / 2.0;
    Ok(OperatingPoint { r0_delay, w0, p0, gain_k })
}

/// Which cubic coefficient the delay-free part of `s * D_p(s)` carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CoefficientMode {
    /// `W0 * R0^2`, consistent with the linearized plant.
    Derived,
    /// `W0 * R0`, with the delay quantized to whole milliseconds. Reproduces the
    /// published characteristic `(1.706 s^3 + 2.239 s^2 + 2 s) e^{0.533 s}`.
    #[default]
    PaperCompat,
}

/// `P(s) = K e^{-Ls} / (d2 s^2 + d1 s + d0 + c s e^{-Ls})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantCoefficients {
    pub num_gain: f64,
    /// Dead time `L` in seconds.
    pub delay: f64,
    /// `[d0, d1, d2]`, constant term first.
    pub den_poly: [f64; 3],
    /// `c`, the coefficient of `s e^{-Ls}`.
    pub den_delay_coeff: f64,
    pub mode: CoefficientMode,
}

impl PlantCoefficients {
    /// Coefficients of `B(s) = s * (d2 s^2 + d1 s + d0)`, constant term first.
    pub fn b_poly(&self) -> [f64; 4] {
        [0.0, self.den_poly[0], self.den_poly[1], self.den_poly[2]]
    }
}

pub fn linearize(op: &OperatingPoint, mode: CoefficientMode) -> PlantCoefficients {
    let r0 = op.r0_delay;
    let (delay, cubic) = match mode {
        CoefficientMode::Derived => (r0, op.w0 * r0 * r0),
        CoefficientMode::PaperCompat => {
            let quantized = libm::round(r0 * 1000.0) / 1000.0;
            (quantized, op.w0 * quantized)
        }
    };
    PlantCoefficients {
        num_gain: op.gain_k,
        delay,
        den_poly: [2.0, (op.w0 + 1.0) * delay, cubic],
        den_delay_coeff: r0,
        mode,
    }
}

/// `C(s) = kp + kd s + ki / s`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    pub const fn pi(kp: f64, ki: f64) -> Self {
        Self { kp, ki, kd: 0.0 }
    }
}

/// Normalized controller parameters `r0 = K ki`, `r1 = K kp`, `r2 = K kd + R0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Triplet {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl Triplet {
    pub const fn new(r0: f64, r1: f64, r2: f64) -> Self {
        Self { r0, r1, r2 }
    }

    /// The published optimum.
    pub const fn paper_optimal() -> Self {
        Self::new(1.2189, 3.15, 2.2460)
    }

    pub fn is_finite(&self) -> bool {
        self.r0.is_finite() && self.r1.is_finite() && self.r2.is_finite()
    }
}

pub fn gains_to_triplet(g: &PidGains, op: &OperatingPoint) -> Triplet {
    Triplet {
        r0: op.gain_k * g.ki,
        r1: op.gain_k * g.kp,
        r2: op.gain_k * g.kd + op.r0_delay,
    }
}

pub fn triplet_to_gains(t: &Triplet, op: &OperatingPoint) -> Result<PidGains, ModelError> {
    if op.gain_k == 0.0 {
        return Err(ModelError::ZeroGain);
    }
    Ok(PidGains {
        kp: t.r1 / op.gain_k,
        ki: t.r0 / op.gain_k,
        kd: (t.r2 - op.r0_delay) / op.gain_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nominal() -> OperatingPoint {
        compute_operating_point(&NetworkParams::nominal()).unwrap()
    }

    fn sig3(x: f64) -> f64 {
        let mag = libm::floor(libm::log10(x.abs()));
        let scale = libm::pow(10.0, 2.0 - mag);
        libm::round(x * scale) / scale
    }

    #[test]
    fn nominal_operating_point() {
        let op = nominal();
        assert_relative_eq!(op.r0_delay, 0.5 + 1.0 / 30.0, max_relative = 1e-15);
        assert_eq!(op.w0, 3.2);
        assert_relative_eq!(op.gain_k, 819.2, max_relative = 1e-14);
        assert_relative_eq!(op.p0, 0.1953125, max_relative = 1e-14);
    }

    #[test]
    fn real_plant_operating_point() {
        let op = compute_operating_point(&NetworkParams::real_plant()).unwrap();
        assert_relative_eq!(op.r0_delay, 0.7, max_relative = 1e-14);
        assert_eq!(op.w0, 4.375);
    }

    #[test]
    fn zero_delay_is_rejected() {
        let err = compute_operating_point(&NetworkParams::new(1.0, 1.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, ModelError::NonPositiveDelay(_)));
    }

    #[test]
    fn small_window_is_rejected() {
        // W0 = (10 + 0.1 * 100) / 20 = 1 < sqrt(2)
        let err = compute_operating_point(&NetworkParams::new(20.0, 100.0, 0.1, 10.0)).unwrap_err();
        assert_eq!(err, ModelError::WindowTooSmall { w0: 1.0 });
    }

    #[test]
    fn invalid_params_are_rejected() {
        for p in [
            NetworkParams::new(0.5, 300.0, 0.2, 100.0),
            NetworkParams::new(50.0, 0.0, 0.2, 100.0),
            NetworkParams::new(50.0, 300.0, -0.1, 100.0),
            NetworkParams::new(50.0, 300.0, 0.2, -1.0),
            NetworkParams::new(f64::NAN, 300.0, 0.2, 100.0),
        ] {
            assert!(matches!(compute_operating_point(&p), Err(ModelError::InvalidParams(_))));
        }
    }

    #[test]
    fn paper_compat_coefficients() {
        let plant = linearize(&nominal(), CoefficientMode::PaperCompat);
        let b = plant.b_poly();
        assert_eq!(b[0], 0.0);
        assert!((b[1] - 2.0).abs() < 5e-4);
        assert!((b[2] - 2.239).abs() < 5e-4);
        assert!((b[3] - 1.706).abs() < 5e-4);
        assert_eq!(plant.delay, 0.533);
        assert_relative_eq!(plant.den_delay_coeff, nominal().r0_delay);
    }

    #[test]
    fn derived_cubic_coefficient() {
        let plant = linearize(&nominal(), CoefficientMode::Derived);
        // 3.2 * (8/15)^2 = 0.910222...
        assert!((plant.den_poly[2] - 0.9102).abs() < 5e-5);
        assert_eq!(plant.delay, nominal().r0_delay);
    }

    #[test]
    fn unit_substitution() {
        let op = OperatingPoint { r0_delay: 1.0, w0: 1.0, p0: 2.0, gain_k: 0.5 };
        for mode in [CoefficientMode::Derived, CoefficientMode::PaperCompat] {
            assert_eq!(linearize(&op, mode).den_poly, [2.0, 2.0, 1.0]);
        }
    }

    #[test]
    fn optimal_gains_map_to_published_triplet() {
        let op = nominal();
        let t = gains_to_triplet(&PidGains::new(3.845e-3, 1.488e-3, 2.091e-3), &op);
        assert!((t.r0 - 1.2189).abs() < 1e-3);
        assert!((t.r1 - 3.15).abs() < 1e-3);
        assert!((t.r2 - 2.2460).abs() < 1e-3);
    }

    #[test]
    fn published_triplets_map_to_published_gains() {
        let op = nominal();
        let g = triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap();
        assert_eq!(sig3(g.kp), 3.85e-3);
        assert_eq!(sig3(g.ki), 1.49e-3);
        assert_eq!(sig3(g.kd), 2.09e-3);

        let g = triplet_to_gains(&Triplet::new(0.839, 1.0, 0.7016), &op).unwrap();
        assert_eq!(sig3(g.kp), 1.22e-3);
        assert_eq!(sig3(g.kd), 2.05e-4);
        assert_eq!(sig3(g.ki), 1.02e-3);
    }

    #[test]
    fn zero_gains_and_zero_triplet() {
        let op = nominal();
        let t = gains_to_triplet(&PidGains::default(), &op);
        assert_eq!(t, Triplet::new(0.0, 0.0, op.r0_delay));
        let g = triplet_to_gains(&t, &op).unwrap();
        assert_eq!(g, PidGains::default());
    }

    #[test]
    fn singular_transform() {
        let op = OperatingPoint { r0_delay: 1.0, w0: 2.0, p0: 0.5, gain_k: 0.0 };
        assert_eq!(triplet_to_gains(&Triplet::default(), &op), Err(ModelError::ZeroGain));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn params() -> impl Strategy<Value = NetworkParams> {
            (1.0f64..500.0, 10.0f64..1e4, 0.0f64..2.0, 0.0f64..1000.0)
                .prop_map(|(n, c, tp, q)| NetworkParams::new(n, c, tp, q))
        }

        proptest! {
            #[test]
            fn equilibrium_identities(p in params()) {
                if let Ok(op) = compute_operating_point(&p) {
                    let w = op.r0_delay * p.capacity / p.n_flows;
                    prop_assert!((w - op.w0).abs() <= 1e-12 * op.w0);
                    prop_assert!((op.p0 * op.w0 * op.w0 - 2.0).abs() <= 1e-12);
                    prop_assert!(op.p0 > 0.0 && op.p0 <= 1.0);
                    prop_assert!(op.gain_k > 0.0);
                }
            }

            #[test]
            fn transform_round_trip(
                p in params(),
                r0 in -10.0f64..10.0, r1 in -10.0f64..10.0, r2 in -10.0f64..10.0,
            ) {
                if let Ok(op) = compute_operating_point(&p) {
                    let t = Triplet::new(r0, r1, r2);
                    let back = gains_to_triplet(&triplet_to_gains(&t, &op).unwrap(), &op);
                    let scale = 1.0 + op.r0_delay;
                    prop_assert!((back.r0 - r0).abs() <= 1e-12 * (1.0 + r0.abs()));
                    prop_assert!((back.r1 - r1).abs() <= 1e-12 * (1.0 + r1.abs()));
                    prop_assert!((back.r2 - r2).abs() <= 1e-12 * (scale + r2.abs()));
                }
            }
        }
    }
}
