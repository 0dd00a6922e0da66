//! PID tuning for active queue management on a delayed TCP fluid model.
//!
//! The pipeline is:
//!
//! 1. [`netmodel`]: operating point of `N` homogeneous TCP flows through one
//!    bottleneck, the linearized plant, and the affine map between PID gains
//!    and the normalized triplet `(r0, r1, r2)`.
//! 2. [`quasipoly`]: the closed-loop characteristic quasi-polynomial and an
//!    argument-principle count of its right-half-plane zeros.
//! 3. [`paramspace`]: D-decomposition of the `(r2, r0)` plane for fixed `r1`
//!    into cells bounded by real- and complex-root boundaries, and a sweep
//!    over `r1` that assembles the stabilizing set.
//! 4. [`freqdesign`]: sensitivity functions, the weighted mixed-sensitivity
//!    cost, and a brute-force search for the cheapest stabilizing triplet.
//! 5. [`ddesim`]: fixed-step integration of the nonlinear delay-differential
//!    TCP/AQM model with a sampled PID in the loop, disturbance signals, and
//!    step-response metrics.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod ddesim;
pub mod freqdesign;
pub mod netmodel;
pub mod paramspace;
pub mod quasipoly;

pub use num_complex::Complex64;

pub use ddesim::{
    compute_metrics, make_signal, simulate, ControllerState, Metrics, Param, Scenario, SignalSpec,
    SimError, SimOptions, SimTrace,
};
pub use freqdesign::{
    controller_response, mixed_sensitivity_cost, optimize, plant_response, CostResult,
    FreqError, FrequencyGrid, OptimalPoint, Rational, Weights,
};
pub use netmodel::{
    compute_operating_point, gains_to_triplet, linearize, triplet_to_gains, CoefficientMode,
    ModelError, NetworkParams, OperatingPoint, PidGains, PlantCoefficients, Triplet,
};
pub use paramspace::{
    contains, crb_edge_midpoint, crb_lines, find_g_zeros, g_of_omega, slice_region, sweep, CrbLine, SliceRegion,
    StabilityRegion, Window,
};
pub use quasipoly::{build_characteristic, QuasiError, QuasiPolynomial, StabilityVerdict, Term};
