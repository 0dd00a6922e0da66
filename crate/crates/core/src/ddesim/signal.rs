//! Piecewise-constant disturbance signals: mean plus square pulse plus held gaussian noise.

// Unused only when std is linked somewhere in the build.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    pub mean: f64,
    pub variance: f64,
    pub pulse_period: f64,
    pub pulse_amplitude: f64,
    pub seed: u64,
    /// Hold time of each gaussian sample, seconds.
    pub sample_period: f64,
}

impl SignalSpec {
    pub fn constant(value: f64) -> Self {
        Self { mean: value, variance: 0.0, pulse_period: 1.0, pulse_amplitude: 0.0, seed: 0, sample_period: 1.0 }
    }

    pub fn is_valid(&self) -> bool {
        self.mean.is_finite()
            && self.variance >= 0.0
            && self.variance.is_finite()
            && self.pulse_period > 0.0
            && self.pulse_amplitude.is_finite()
            && self.sample_period > 0.0
    }

    /// `amplitude` during the first half of every period, zero otherwise.
    pub fn pulse(&self, t: f64) -> f64 {
        let phase = t - (t / self.pulse_period).floor() * self.pulse_period;
        if phase < 0.5 * self.pulse_period {
            self.pulse_amplitude
        } else {
            0.0
        }
    }

    /// Standard normal sample held on `[k T, (k + 1) T)`; one ChaCha stream per interval.
    pub fn noise_sample(&self, k: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        StandardNormal.sample(&mut rng)
    }

    pub fn hold_index(&self, t: f64) -> u64 {
        (t.max(0.0) / self.sample_period).floor() as u64
    }
}

pub fn make_signal(spec: &SignalSpec, t: f64) -> f64 {
    let noise = if spec.variance > 0.0 {
        spec.variance.sqrt() * spec.noise_sample(spec.hold_index(t))
    } else {
        0.0
    };
    spec.mean + spec.pulse(t) + noise
}

/// A network quantity that is either fixed or a disturbance signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Constant(f64),
    Signal(SignalSpec),
}

impl Param {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Param::Constant(v) => *v,
            Param::Signal(spec) => make_signal(spec, t),
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Param::Constant(v) => v.is_finite(),
            Param::Signal(spec) => spec.is_valid(),
        }
    }
}

/// Memoizes the most recent noise interval so repeated queries are cheap.
#[derive(Debug, Clone)]
pub(crate) struct Realizer {
    param: Param,
    floor: f64,
    cached: Option<(u64, f64)>,
}

impl Realizer {
    pub(crate) fn new(param: Param, floor: f64) -> Self {
        Self { param, floor, cached: None }
    }

    pub(crate) fn at(&mut self, t: f64) -> f64 {
        let raw = match &self.param {
            Param::Constant(v) => *v,
            Param::Signal(spec) => {
                let noise = if spec.variance > 0.0 {
                    let k = spec.hold_index(t);
                    let z = match self.cached {
                        Some((ck, z)) if ck == k => z,
                        _ => {
                            let z = spec.noise_sample(k);
                            self.cached = Some((k, z));
                            z
                        }
                    };
                    spec.variance.sqrt() * z
                } else {
                    0.0
                };
                spec.mean + spec.pulse(t) + noise
            }
        };
        raw.max(self.floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capacity_spec(seed: u64) -> SignalSpec {
        SignalSpec { mean: 250.0, variance: 50.0, pulse_period: 60.0, pulse_amplitude: 60.0, seed, sample_period: 0.1 }
    }

    #[test]
    fn noiseless_pulseless_is_constant() {
        let spec = SignalSpec { variance: 0.0, pulse_amplitude: 0.0, ..capacity_spec(1) };
        for k in 0..100 {
            assert_eq!(make_signal(&spec, k as f64 * 0.37), 250.0);
        }
    }

    #[test]
    fn long_run_mean() {
        let spec = capacity_spec(7);
        let n = 120_000;
        let t_end = 60.0 * 200.0;
        let mean = (0..n).map(|i| make_signal(&spec, t_end * i as f64 / n as f64)).sum::<f64>() / n as f64;
        // 250 + 60 * 50% duty; the noise mean over 120k held samples has std ~ 0.02.
        assert!((mean - 280.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn seeded_sequences_repeat() {
        let a: alloc::vec::Vec<f64> = (0..500).map(|i| make_signal(&capacity_spec(3), i as f64 * 0.05)).collect();
        let b: alloc::vec::Vec<f64> = (0..500).map(|i| make_signal(&capacity_spec(3), i as f64 * 0.05)).collect();
        assert_eq!(a, b);
        let c: alloc::vec::Vec<f64> = (0..500).map(|i| make_signal(&capacity_spec(4), i as f64 * 0.05)).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_is_held() {
        let spec = SignalSpec { pulse_amplitude: 0.0, ..capacity_spec(5) };
        assert_eq!(make_signal(&spec, 0.01), make_signal(&spec, 0.09));
        assert_ne!(make_signal(&spec, 0.09), make_signal(&spec, 0.11));
    }

    #[test]
    fn realizer_matches_make_signal_and_floors() {
        let spec = capacity_spec(9);
        let mut r = Realizer::new(Param::Signal(spec), 1.0);
        for i in 0..1000 {
            let t = i as f64 * 0.013;
            assert_eq!(r.at(t), make_signal(&spec, t).max(1.0));
        }
        let mut low = Realizer::new(Param::Constant(-5.0), 1e-3);
        assert_eq!(low.at(0.0), 1e-3);
    }
}
