//! Acceptance criteria for the full pipeline. Each check returns an
//! [`Outcome`]; the `acceptance` test target prints them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use aqmtune::cli::write_csv;
use aqmtune::export;
use aqmtune::pipeline::{optimize_parallel, plant_for, run_all, sweep_parallel, ControllerFactory};
use aqmtune_core::ddesim::{compute_metrics, ControllerState, InitialState, Scenario, SimOptions};
use aqmtune_core::freqdesign::{FrequencyGrid, Weights};
use aqmtune_core::netmodel::{
    compute_operating_point, gains_to_triplet, triplet_to_gains, CoefficientMode, NetworkParams, OperatingPoint,
    PlantCoefficients, Triplet,
};
use aqmtune_core::paramspace::{
    boundary_residual, contains, crb_edge_midpoint, crb_lines, verdict_at, SliceOptions, StabilityRegion, Window,
    DEFAULT_OMEGA_MAX,
};
use aqmtune_core::quasipoly::{QuasiPolynomial, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R1_RANGE: (f64, f64) = (-2.0, 8.0);
const R1_STEPS: usize = 201;
const DENSITY: usize = 40;
const ROBUST_SEED: u64 = 1;
const TRANSIENT_CUTOFF: f64 = 20.0;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

/// One finished criterion.
pub struct Report {
    pub id: u32,
    pub name: &'static str,
    pub outcome: Outcome,
    pub elapsed: Duration,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn nominal() -> (OperatingPoint, PlantCoefficients) {
    plant_for(&NetworkParams::nominal(), CoefficientMode::PaperCompat).expect("nominal plant")
}

/// `x` rounded to three significant figures equals `want` (already written with three).
fn sig3(x: f64, want: f64) -> bool {
    let scale = 10f64.powf(2.0 - x.abs().log10().floor());
    ((x * scale).round() / scale - want).abs() <= 1e-12 * want.abs()
}

fn operating_point() -> Outcome {
    let n = compute_operating_point(&NetworkParams::nominal()).unwrap();
    let r = compute_operating_point(&NetworkParams::real_plant()).unwrap();
    let ok = (n.r0_delay - 0.5333).abs() <= 5e-4
        && n.w0 == 3.2
        && (n.gain_k - 819.2).abs() <= 1e-12 * 819.2
        && (r.r0_delay - 0.7).abs() <= 1e-12
        && r.w0 == 4.375;
    outcome(
        ok,
        format!("nominal R0 = {}, W0 = {}, K = {}; real R0 = {}, W0 = {}", n.r0_delay, n.w0, n.gain_k, r.r0_delay, r.w0),
    )
}

fn transform() -> Outcome {
    let (op, _) = nominal();
    let t = Triplet::paper_optimal();
    let g = triplet_to_gains(&t, &op).unwrap();
    let back = gains_to_triplet(&g, &op);
    // Published gains 3.845e-3, 1.488e-3, 2.091e-3 at three figures.
    let ok = sig3(g.kp, 3.85e-3)
        && sig3(g.ki, 1.49e-3)
        && sig3(g.kd, 2.09e-3)
        && sig3(back.r0, 1.22)
        && sig3(back.r1, 3.15)
        && sig3(back.r2, 2.25);
    outcome(ok, format!("Kp = {:.4e}, Ki = {:.4e}, Kd = {:.4e}", g.kp, g.ki, g.kd))
}

fn crb_consistency() -> Outcome {
    let (_, plant) = nominal();
    let w = Window::default();
    let mut worst = 0.0f64;
    let mut lines = 0;
    for r1 in [-2.0, 0.0, 3.15, 8.0] {
        for line in crb_lines(r1, &plant, DEFAULT_OMEGA_MAX) {
            lines += 1;
            for k in 0..10 {
                let r2 = w.r2_min + (w.r2_max - w.r2_min) * k as f64 / 9.0;
                worst = worst.max(boundary_residual(&plant, r1, &line, r2));
            }
        }
    }
    outcome(lines > 0 && worst < 1e-8, format!("{lines} lines, worst scaled |G(jw)| = {worst:.3e}"))
}

fn region_reproduction(region: &StabilityRegion, elapsed: Duration) -> Outcome {
    let (_, plant) = nominal();
    let t = Triplet::paper_optimal();
    let Some(slice) = region.slices.iter().find(|s| s.r1 == t.r1) else {
        return outcome(false, "no slice at r1 = 3.15".into());
    };
    let inside = slice.stable_cell_containing(t.r2, t.r0, aqmtune_core::paramspace::CONTAINS_TOL).is_some();
    let boundary = crb_edge_midpoint(slice, t.r2, t.r0);
    let fails = boundary.is_some_and(|b| !verdict_at(&plant, &b).is_ok_and(|v| v.stable));
    let ok = inside && fails && elapsed <= Duration::from_secs(120);
    outcome(ok, format!("optimum strictly inside: {inside}; CRB point {boundary:?} unstable: {fails}"))
}

fn optimizer(region: &StabilityRegion, out: &Path) -> (Outcome, Duration) {
    let (op, _) = nominal();
    let start = Instant::now();
    let res = optimize_parallel(region, &op, &Weights::default(), FrequencyGrid::default(), DENSITY);
    let elapsed = start.elapsed();
    let (searches, best) = match res {
        Ok(r) => r,
        Err(e) => return (outcome(false, format!("optimize failed: {e}")), elapsed),
    };
    write_csv(out, "cost_surface.csv", |w| export::write_cost_surface(w, &searches)).unwrap();
    write_csv(out, "slice_minima.csv", |w| export::write_slice_minima(w, &searches)).unwrap();
    let t = best.triplet;
    let ok = (t.r1 - 3.15).abs() <= 0.1
        && (t.r2 - 2.2460).abs() <= 0.15
        && (t.r0 - 1.2189).abs() <= 0.15
        && elapsed <= Duration::from_secs(600);
    let at_published = aqmtune_core::mixed_sensitivity_cost(
        &region.plant,
        &triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap(),
        &Weights::default(),
        FrequencyGrid::default(),
    )
    .map(|c| c.psi)
    .unwrap_or(f64::NAN);
    let detail = format!(
        "found (r0, r1, r2) = ({}, {}, {}) with psi = {:.4}; psi at (1.2189, 3.15, 2.2460) = {:.4}",
        t.r0, t.r1, t.r2, best.psi, at_published
    );
    (outcome(ok, detail), elapsed)
}

fn stability_oracle(region: &StabilityRegion) -> Outcome {
    let mut analytic_mismatch = 0;
    let mut cases = 0;
    for a in [0.1, 0.5, 1.0, 1.5, 2.0, 3.0] {
        for tau in [0.1, 0.5, 1.0, 1.5, 2.0] {
            cases += 1;
            let q = QuasiPolynomial::new(vec![Term::new(vec![0.0, 1.0], tau), Term::new(vec![a], 0.0)]).unwrap();
            let stable = q.rhp_zero_count().is_ok_and(|v| v.stable);
            if stable != (a * tau < std::f64::consts::FRAC_PI_2) {
                analytic_mismatch += 1;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let w = Window::default();
    let (mut inside, mut outside, mut member_mismatch, mut draws) = (0, 0, 0, 0);
    while (inside < 50 || outside < 50) && draws < 100_000 {
        draws += 1;
        let slice = &region.slices[rng.random_range(0..region.slices.len())];
        let t = Triplet::new(rng.random_range(w.r0_min..w.r0_max), slice.r1, rng.random_range(w.r2_min..w.r2_max));
        let direct = verdict_at(&region.plant, &t).is_ok_and(|v| v.stable);
        if (direct && inside >= 50) || (!direct && outside >= 50) {
            continue;
        }
        if direct {
            inside += 1;
        } else {
            outside += 1;
        }
        if contains(region, &t) != direct {
            member_mismatch += 1;
        }
    }
    let ok = cases == 30 && analytic_mismatch == 0 && inside == 50 && outside == 50 && member_mismatch == 0;
    outcome(
        ok,
        format!(
            "{analytic_mismatch}/{cases} analytic mismatches; {member_mismatch}/{} membership mismatches ({inside} in, {outside} out)",
            inside + outside
        ),
    )
}

fn simulator_convergence() -> Outcome {
    let params = NetworkParams::nominal();
    let op = compute_operating_point(&params).unwrap();
    let s = Scenario::constant(&params, 100.0);
    let opts = SimOptions { initial: InitialState::Equilibrium, record_every: 1, ..SimOptions::default() };
    let tr = aqmtune_core::simulate(&s, ControllerState::constant(op.p0), &opts).unwrap();
    let drift = tr
        .w
        .iter()
        .zip(&tr.q)
        .map(|(w, q)| ((w - op.w0).abs() / op.w0).max((q - params.q_ref).abs() / params.q_ref))
        .fold(0.0, f64::max);
    let hold = drift <= 1e-6 && tr.time.last() == Some(&100.0);

    let mut worst = 0.0f64;
    let optimal = triplet_to_gains(&Triplet::paper_optimal(), &op).unwrap();
    let probes = [
        (Scenario::perf_nominal(), optimal),
        (Scenario::perf_nominal(), triplet_to_gains(&Triplet::new(0.8, 2.0, 1.5), &op).unwrap()),
        (Scenario::robust_sec4(ROBUST_SEED), optimal),
    ];
    for (scenario, gains) in probes {
        let view = compute_operating_point(&scenario.controller_view).unwrap();
        let final_q = |step: f64| {
            let o = SimOptions { step, record_every: 1000, ..SimOptions::default() };
            let tr = aqmtune_core::simulate(&scenario, ControllerState::pid(gains, &view), &o).unwrap();
            *tr.q.last().unwrap()
        };
        let (a, b) = (final_q(1e-3), final_q(5e-4));
        worst = worst.max((a - b).abs() / b.abs().max(1.0));
    }
    outcome(hold && worst < 5e-3, format!("equilibrium drift {drift:.2e}; worst step-halving change {:.3e} %", 100.0 * worst))
}

fn performance() -> Outcome {
    let s = Scenario::perf_nominal();
    let view = compute_operating_point(&s.controller_view).unwrap();
    let g = triplet_to_gains(&Triplet::paper_optimal(), &view).unwrap();
    let tr = aqmtune_core::simulate(&s, ControllerState::pid(g, &view), &SimOptions::default()).unwrap();
    let m = compute_metrics(&tr, s.q_ref, TRANSIENT_CUTOFF);
    let last = *tr.q.last().unwrap();
    let ok = !tr.divergent && m.overshoot <= 1.0 && m.settling_time.is_some() && (last - s.q_ref).abs() <= 0.05 * s.q_ref;
    outcome(
        ok,
        format!("overshoot {:.3} %, settling {:?} s, final q {:.4}", m.overshoot, m.settling_time, last),
    )
}

fn robustness(out: &Path) -> Outcome {
    let s = Scenario::robust_sec4(ROBUST_SEED);
    let factory = ControllerFactory::new(&s, CoefficientMode::PaperCompat, Window::default(), SliceOptions::default());
    let ctrls = match ["optimal", "boundary"].map(|n| factory.build(n)) {
        [Ok(a), Ok(b)] => vec![a, b],
        _ => return outcome(false, "could not build controllers".into()),
    };
    let traces = run_all(&s, &ctrls, &SimOptions::default()).unwrap();
    for (c, tr) in ctrls.iter().zip(&traces) {
        write_csv(out, &format!("trace_{}.csv", c.label), |w| export::write_trace(w, tr)).unwrap();
    }
    let opt = compute_metrics(&traces[0], s.q_ref, TRANSIENT_CUTOFF).deviation_range;
    let bnd = compute_metrics(&traces[1], s.q_ref, TRANSIENT_CUTOFF).deviation_range;
    let nested = bnd.0 < opt.0 && opt.1 < bnd.1;
    let width = opt.1 - opt.0;
    outcome(
        nested && width <= 120.0,
        format!(
            "seed {ROBUST_SEED}: optimal [{:.1}, {:.1}] (width {width:.1}), boundary [{:.1}, {:.1}]; nested: {nested}",
            opt.0, opt.1, bnd.0, bnd.1
        ),
    )
}

fn write_region(region: &StabilityRegion, out: &Path) {
    write_csv(out, "region.csv", |w| export::write_region(w, region)).unwrap();
    write_csv(out, "crb.csv", |w| export::write_crb(w, region)).unwrap();
}

fn determinism(first: &Path, second: &Path) -> Outcome {
    let (_, plant) = nominal();
    let region = sweep_parallel(R1_RANGE, R1_STEPS, Window::default(), &plant, &SliceOptions::default());
    write_region(&region, second);
    let _ = optimizer(&region, second);
    let _ = robustness(second);
    let files = ["region.csv", "crb.csv", "cost_surface.csv", "slice_minima.csv", "trace_optimal.csv", "trace_boundary.csv"];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| match (fs::read(first.join(f)), fs::read(second.join(f))) {
            (Ok(a), Ok(b)) => a != b || a.is_empty(),
            _ => true,
        })
        .collect();
    outcome(differing.is_empty(), format!("{} files compared, differing: {differing:?}", files.len()))
}

/// Run every criterion in order, writing artifacts under `scratch`.
pub fn run(scratch: &Path) -> Vec<Report> {
    let first: PathBuf = scratch.join("run1");
    let second: PathBuf = scratch.join("run2");
    fs::create_dir_all(&first).unwrap();
    fs::create_dir_all(&second).unwrap();

    let mut results = Vec::new();
    let mut timed = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        results.push(Report { id, name, outcome, elapsed: start.elapsed() });
    };

    timed(1, "operating point", &mut operating_point);
    timed(2, "parameter transform", &mut transform);
    timed(3, "CRB self-consistency", &mut crb_consistency);

    let (_, plant) = nominal();
    let start = Instant::now();
    let region = sweep_parallel(R1_RANGE, R1_STEPS, Window::default(), &plant, &SliceOptions::default());
    let sweep_time = start.elapsed();
    write_region(&region, &first);
    timed(4, "region reproduction", &mut || region_reproduction(&region, sweep_time));
    timed(5, "optimizer reproduction", &mut || optimizer(&region, &first).0);
    timed(6, "stability-checker oracle", &mut || stability_oracle(&region));
    timed(7, "simulator equilibrium and convergence", &mut simulator_convergence);
    timed(8, "performance scenario", &mut performance);
    timed(9, "robustness ordering", &mut || robustness(&first));
    timed(10, "determinism", &mut || determinism(&first, &second));
    results
}
