//! Network scenarios: what the plant really does and what the controller assumes.

use super::signal::{Param, SignalSpec};
use crate::netmodel::NetworkParams;

/// Lower bounds applied to realized signals.
pub const CAPACITY_FLOOR: f64 = 1.0;
pub const FLOWS_FLOOR: f64 = 1.0;
pub const DELAY_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub capacity: Param,
    pub n_flows: Param,
    pub prop_delay: Param,
    pub duration: f64,
    pub q_ref: f64,
    /// Parameters the controller was tuned for.
    pub controller_view: NetworkParams,
}

/// Names accepted by [`Scenario::by_name`].
pub const PRESET_NAMES: [&str; 2] = ["perf-nominal", "robust-sec4"];

impl Scenario {
    /// Constant network, all values from `params`.
    pub fn constant(params: &NetworkParams, duration: f64) -> Self {
        Self {
            capacity: Param::Constant(params.capacity),
            n_flows: Param::Constant(params.n_flows),
            prop_delay: Param::Constant(params.prop_delay),
            duration,
            q_ref: params.q_ref,
            controller_view: *params,
        }
    }

    /// Real plant N = 40, C = 250, Tp = 0.3 against a controller tuned for the nominal network.
    pub fn perf_nominal() -> Self {
        Self { controller_view: NetworkParams::nominal(), ..Self::constant(&NetworkParams::real_plant(), 100.0) }
    }

    /// Noisy, pulsed capacity, load and delay. The three signals use seeds `seed`, `seed + 1`, `seed + 2`.
    pub fn robust_sec4(seed: u64) -> Self {
        let spec = |mean, variance, pulse_period, pulse_amplitude, seed| SignalSpec {
            mean,
            variance,
            pulse_period,
            pulse_amplitude,
            seed,
            sample_period: 0.1,
        };
        Self {
            capacity: Param::Signal(spec(250.0, 50.0, 60.0, 60.0, seed)),
            n_flows: Param::Signal(spec(45.0, 30.0, 20.0, 10.0, seed.wrapping_add(1))),
            prop_delay: Param::Signal(spec(0.8, 0.05, 20.0, 0.2, seed.wrapping_add(2))),
            duration: 150.0,
            q_ref: 100.0,
            controller_view: NetworkParams::new(50.0, 300.0, 0.7, 100.0),
        }
    }

    pub fn by_name(name: &str, seed: u64) -> Option<Self> {
        match name {
            "perf-nominal" => Some(Self::perf_nominal()),
            "robust-sec4" => Some(Self::robust_sec4(seed)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err("duration must be positive and finite");
        }
        if !(self.q_ref >= 0.0 && self.q_ref.is_finite()) {
            return Err("q_ref must be nonnegative and finite");
        }
        if !(self.capacity.is_valid() && self.n_flows.is_valid() && self.prop_delay.is_valid()) {
            return Err("invalid network signal");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESET_NAMES {
            let s = Scenario::by_name(name, 7).unwrap();
            assert!(s.validate().is_ok());
        }
        assert!(Scenario::by_name("nope", 0).is_none());
    }

    #[test]
    fn robust_seeds_are_distinct() {
        let s = Scenario::robust_sec4(10);
        let seeds: [u64; 3] = [&s.capacity, &s.n_flows, &s.prop_delay].map(|p| match p {
            Param::Signal(spec) => spec.seed,
            Param::Constant(_) => unreachable!(),
        });
        assert_eq!(seeds, [10, 11, 12]);
    }

    #[test]
    fn invalid_duration() {
        let mut s = Scenario::perf_nominal();
        s.duration = 0.0;
        assert!(s.validate().is_err());
    }
}
