//! Nonlinear fluid model of TCP flows through an AQM router, with a sampled
//! controller in the loop.
//!
//! State `(W, q)` obeys
//! `W' = 1/R - W W(t-R) p(t-R) / (2 R(t-R))`, `q' = N W / R - C`,
//! with `R = q/C + Tp` and `q'` projected to stay nonnegative at `q = 0`.

mod controller;
mod metrics;
mod scenario;
mod signal;

use alloc::vec::Vec;

// Unused only when std is linked somewhere in the build.
#[allow(unused_imports)]
use num_traits::Float;

use thiserror::Error;

pub use controller::{ControllerState, DEFAULT_SAMPLE_PERIOD};
pub use metrics::{compute_metrics, Metrics, SETTLING_BAND};
pub use scenario::{Scenario, CAPACITY_FLOOR, DELAY_FLOOR, FLOWS_FLOOR, PRESET_NAMES};
pub use signal::{make_signal, Param, SignalSpec};

use signal::Realizer;

/// States beyond this magnitude are reported as divergent.
const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error("step {step} exceeds R/20 = {limit} at t = {t}")]
    StepTooLarge { t: f64, step: f64, limit: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("invalid simulation options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// `W = 1`, empty queue.
    Cold,
    /// `q = q_ref` and the matching window for the network at `t = 0`.
    Equilibrium,
    Custom { w: f64, q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub step: f64,
    pub initial: InitialState,
    /// Keep every `record_every`-th integration step in the trace.
    pub record_every: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { step: 1e-3, initial: InitialState::Cold, record_every: 10 }
    }
}

/// Recorded samples; all series have the same length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub time: Vec<f64>,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub n_flows: Vec<f64>,
    pub capacity: Vec<f64>,
    pub prop_delay: Vec<f64>,
    /// The run stopped early on a non-finite or runaway state.
    pub divergent: bool,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    fn push(&mut self, t: f64, w: f64, q: f64, p: f64, net: Net) {
        self.time.push(t);
        self.w.push(w);
        self.q.push(q);
        self.p.push(p);
        self.n_flows.push(net.n);
        self.capacity.push(net.c);
        self.prop_delay.push(net.tp);
    }
}

#[derive(Debug, Clone, Copy)]
struct Net {
    n: f64,
    c: f64,
    tp: f64,
}

struct Network {
    n: Realizer,
    c: Realizer,
    tp: Realizer,
}

impl Network {
    fn new(s: &Scenario) -> Self {
        Self {
            n: Realizer::new(s.n_flows.clone(), FLOWS_FLOOR),
            c: Realizer::new(s.capacity.clone(), CAPACITY_FLOOR),
            tp: Realizer::new(s.prop_delay.clone(), DELAY_FLOOR),
        }
    }

    fn at(&mut self, t: f64) -> Net {
        Net { n: self.n.at(t), c: self.c.at(t), tp: self.tp.at(t) }
    }
}

/// Uniform-step history, constant before `t = 0`.
struct History {
    step: f64,
    w: Vec<f64>,
    rtt: Vec<f64>,
    /// Marking probability held over `[t_i, t_{i+1})`.
    p: Vec<f64>,
}

impl History {
    fn position(&self, t: f64) -> (usize, f64) {
        if t <= 0.0 {
            return (0, 0.0);
        }
        let x = t / self.step;
        let i = x.floor() as usize;
        if i + 1 >= self.w.len() {
            (self.w.len() - 1, 0.0)
        } else {
            (i, x - i as f64)
        }
    }

    fn w_at(&self, t: f64) -> f64 {
        let (i, f) = self.position(t);
        if f == 0.0 {
            self.w[i]
        } else {
            self.w[i] + f * (self.w[i + 1] - self.w[i])
        }
    }

    fn rtt_at(&self, t: f64) -> f64 {
        let (i, f) = self.position(t);
        if f == 0.0 {
            self.rtt[i]
        } else {
            self.rtt[i] + f * (self.rtt[i + 1] - self.rtt[i])
        }
    }

    fn p_at(&self, t: f64) -> f64 {
        let (i, _) = self.position(t);
        self.p[i.min(self.p.len() - 1)]
    }
}

fn rates(w: f64, q: f64, t: f64, net: Net, hist: &History) -> (f64, f64) {
    let rtt = q.max(0.0) / net.c + net.tp;
    let td = t - rtt;
    let w_d = hist.w_at(td);
    let rtt_d = hist.rtt_at(td);
    let p_d = hist.p_at(td);
    let dw = 1.0 / rtt - w * w_d * p_d / (2.0 * rtt_d);
    let mut dq = net.n * w / rtt - net.c;
    if q <= 0.0 && dq < 0.0 {
        dq = 0.0;
    }
    (dw, dq)
}

/// Integrate `scenario` with `controller` in the loop by fixed-step RK4.
pub fn simulate(scenario: &Scenario, mut controller: ControllerState, opts: &SimOptions) -> Result<SimTrace, SimError> {
    scenario.validate().map_err(SimError::InvalidScenario)?;
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(SimError::InvalidOptions("step must be positive and finite"));
    }
    if opts.record_every == 0 {
        return Err(SimError::InvalidOptions("record_every must be at least 1"));
    }
    if !controller.is_valid() {
        return Err(SimError::InvalidOptions("controller parameters must be finite"));
    }
    let h = opts.step;
    let steps = (scenario.duration / h).round() as usize;
    let mut network = Network::new(scenario);

    let net0 = network.at(0.0);
    let (mut w, mut q) = match opts.initial {
        InitialState::Cold => (1.0, 0.0),
        InitialState::Equilibrium => {
            let q = scenario.q_ref;
            (q / net0.n + net0.tp * net0.c / net0.n, q)
        }
        InitialState::Custom { w, q } => (w, q.max(0.0)),
    };
    if !(w.is_finite() && q.is_finite()) {
        return Err(SimError::InvalidOptions("initial state must be finite"));
    }

    let ts = controller.sample_period;
    let mut next_sample: u64 = 0;
    let mut p = controller.output;

    let mut hist = History {
        step: h,
        w: Vec::with_capacity(steps + 1),
        rtt: Vec::with_capacity(steps + 1),
        p: Vec::with_capacity(steps + 1),
    };
    let mut trace = SimTrace::default();

    for i in 0..=steps {
        let t = i as f64 * h;
        let net = network.at(t);
        let rtt = q / net.c + net.tp;
        if h > rtt / 20.0 {
            return Err(SimError::StepTooLarge { t, step: h, limit: rtt / 20.0 });
        }
        // Sample instants falling in (t - h, t].
        while (next_sample as f64) * ts <= t + 1e-9 * h {
            p = controller.update(q, scenario.q_ref);
            next_sample += 1;
        }
        hist.w.push(w);
        hist.rtt.push(rtt);
        hist.p.push(p);
        if i % opts.record_every == 0 || i == steps {
            trace.push(t, w, q, p, net);
        }
        if i == steps {
            break;
        }

        let mid = network.at(t + 0.5 * h);
        let end = network.at(t + h);
        let (k1w, k1q) = rates(w, q, t, net, &hist);
        let (k2w, k2q) = rates(w + 0.5 * h * k1w, q + 0.5 * h * k1q, t + 0.5 * h, mid, &hist);
        let (k3w, k3q) = rates(w + 0.5 * h * k2w, q + 0.5 * h * k2q, t + 0.5 * h, mid, &hist);
        let (k4w, k4q) = rates(w + h * k3w, q + h * k3q, t + h, end, &hist);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        q = (q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)).max(0.0);

        if !(w.is_finite() && q.is_finite()) || w.abs() > DIVERGENCE_LIMIT || q > DIVERGENCE_LIMIT {
            trace.divergent = true;
            break;
        }
    }
    Ok(trace)
}
