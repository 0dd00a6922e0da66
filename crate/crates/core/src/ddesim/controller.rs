//! Sampled PID for the marking probability.

use crate::netmodel::{OperatingPoint, PidGains};

/// Discrete PID acting on `e = q - q_ref`.
///
/// The gains are those of the linearized loop, so the output is added to the
/// equilibrium marking probability `bias` the controller believes in. The
/// derivative is filtered, `kd s / (1 + tc s)`, discretized by backward Euler.
/// Integration is frozen while the output is saturated and the error pushes
/// further into saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub gains: PidGains,
    pub bias: f64,
    pub integ: f64,
    pub deriv_filter_state: f64,
    pub sample_period: f64,
    pub deriv_filter_tc: f64,
    last_error: Option<f64>,
    /// Output held since the last sample.
    pub output: f64,
    /// Bypass the loop and emit `bias` forever.
    pub open_loop: bool,
}

/// Default controller sampling period, seconds.
pub const DEFAULT_SAMPLE_PERIOD: f64 = 1.0 / 160.0;

impl ControllerState {
    pub fn new(gains: PidGains, bias: f64, sample_period: f64, deriv_filter_tc: f64) -> Self {
        Self {
            gains,
            bias,
            integ: 0.0,
            deriv_filter_state: 0.0,
            sample_period,
            deriv_filter_tc,
            last_error: None,
            output: bias.clamp(0.0, 1.0),
            open_loop: false,
        }
    }

    /// PID around the operating point the controller was designed for.
    pub fn pid(gains: PidGains, view: &OperatingPoint) -> Self {
        Self::new(gains, view.p0, DEFAULT_SAMPLE_PERIOD, view.r0_delay / 20.0)
    }

    /// Constant marking probability.
    pub fn constant(p: f64) -> Self {
        let mut c = Self::new(PidGains::default(), p, DEFAULT_SAMPLE_PERIOD, 0.0);
        c.open_loop = true;
        c
    }

    pub fn is_valid(&self) -> bool {
        let g = &self.gains;
        g.kp.is_finite()
            && g.ki.is_finite()
            && g.kd.is_finite()
            && self.bias.is_finite()
            && self.sample_period > 0.0
            && self.deriv_filter_tc >= 0.0
    }

    /// Take one sample of the queue and return the new held output in `[0, 1]`.
    pub fn update(&mut self, q: f64, q_ref: f64) -> f64 {
        if self.open_loop {
            self.output = self.bias.clamp(0.0, 1.0);
            return self.output;
        }
        let e = q - q_ref;
        let ts = self.sample_period;
        let prev = self.last_error.unwrap_or(e);
        let tc = self.deriv_filter_tc;
        self.deriv_filter_state = (tc * self.deriv_filter_state + self.gains.kd * (e - prev)) / (tc + ts);
        self.last_error = Some(e);

        let pd = self.bias + self.gains.kp * e + self.deriv_filter_state;
        let trial = pd + self.gains.ki * (self.integ + e * ts);
        let winding_up = (trial > 1.0 && e > 0.0) || (trial < 0.0 && e < 0.0);
        if !winding_up {
            self.integ += e * ts;
        }
        self.output = (pd + self.gains.ki * self.integ).clamp(0.0, 1.0);
        self.output
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_clamped() {
        let mut c = ControllerState::new(PidGains::new(1.0, 1.0, 0.0), 0.0, 0.1, 0.0);
        assert_eq!(c.update(1000.0, 0.0), 1.0);
        assert_eq!(c.update(-1000.0, 0.0), 0.0);
    }

    #[test]
    fn integral_freezes_in_saturation() {
        let mut c = ControllerState::new(PidGains::new(0.0, 1.0, 0.0), 0.0, 0.1, 0.0);
        for _ in 0..100 {
            c.update(0.0, 100.0);
        }
        assert_eq!(c.integ, 0.0);
        // Integrates as soon as the error helps leave the bound.
        c.update(110.0, 100.0);
        assert!((c.integ - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plain_integrator() {
        let mut c = ControllerState::new(PidGains::new(0.0, 0.01, 0.0), 0.2, 0.5, 0.0);
        for _ in 0..4 {
            c.update(110.0, 100.0);
        }
        // 0.2 + 0.01 * (4 * 10 * 0.5)
        assert!((c.output - 0.4).abs() < 1e-12);
    }

    #[test]
    fn filtered_derivative_step() {
        let tc = 0.1;
        let ts = 0.1;
        let mut c = ControllerState::new(PidGains::new(0.0, 0.0, 1.0), 0.5, ts, tc);
        c.update(0.0, 0.0);
        let first = c.update(0.1, 0.0) - 0.5;
        // kd * de / (tc + ts)
        assert!((first - 0.5).abs() < 1e-12);
        let second = c.update(0.1, 0.0) - 0.5;
        assert!((second - 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_holds() {
        let mut c = ControllerState::constant(0.3);
        assert_eq!(c.update(0.0, 100.0), 0.3);
        assert_eq!(c.update(500.0, 100.0), 0.3);
    }
}
