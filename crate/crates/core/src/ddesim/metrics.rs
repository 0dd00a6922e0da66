//! Step-response figures of a queue trace.

use super::SimTrace;

/// Settling band around the reference, fraction of `q_ref`.
pub const SETTLING_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// First 10 % crossing to first 90 % crossing of `q_ref`; `None` if 90 % is never reached.
    pub rise_time: Option<f64>,
    /// Start of the final stay inside the +-5 % band; `None` when the trace never settles.
    pub settling_time: Option<f64>,
    /// Peak above `q_ref` in percent of `q_ref`.
    pub overshoot: f64,
    /// `(min q, max q)` after the transient cutoff.
    pub deviation_range: (f64, f64),
    pub never_settles: bool,
}

impl Metrics {
    pub fn deviation_width(&self) -> f64 {
        self.deviation_range.1 - self.deviation_range.0
    }
}

pub fn compute_metrics(trace: &SimTrace, q_ref: f64, transient_cutoff: f64) -> Metrics {
    assert!(!trace.is_empty(), "metrics need a nonempty trace");
    let t = &trace.time;
    let q = &trace.q;

    let crossing = |level: f64| t.iter().zip(q).find(|(_, &v)| v >= level).map(|(&ti, _)| ti);
    let rise_time = match (crossing(0.1 * q_ref), crossing(0.9 * q_ref)) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };

    let band = SETTLING_BAND * q_ref;
    // Walk back from the end while inside the band.
    let mut settle_idx = None;
    for i in (0..q.len()).rev() {
        if (q[i] - q_ref).abs() <= band {
            settle_idx = Some(i);
        } else {
            break;
        }
    }
    let never_settles = trace.divergent || settle_idx.is_none();
    let settling_time = if never_settles { None } else { settle_idx.map(|i| t[i] - t[0]) };

    let peak = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let overshoot = if q_ref > 0.0 { ((peak - q_ref) / q_ref * 100.0).max(0.0) } else { 0.0 };

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&ti, &v) in t.iter().zip(q) {
        if ti > transient_cutoff {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        // Cutoff past the end: fall back to the last sample.
        let last = *q.last().expect("nonempty");
        lo = last;
        hi = last;
    }

    Metrics { rise_time, settling_time, overshoot, deviation_range: (lo, hi), never_settles }
}
