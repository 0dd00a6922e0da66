//! Argument parsing and the five subcommands.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aqmtune_core::ddesim::{compute_metrics, InitialState, Scenario, SimOptions, PRESET_NAMES};
use aqmtune_core::freqdesign::mixed_sensitivity_cost;
use aqmtune_core::netmodel::{triplet_to_gains, gains_to_triplet, PidGains, Triplet};
use aqmtune_core::paramspace::{contains, verdict_at, SliceRegion, Window};
use clap::{Args, Parser, Subcommand};

use crate::config::{ControllerSpec, Initial, Mode, RunConfig};
use crate::error::CliError;
use crate::export;
use crate::pipeline::{optimize_parallel, plant_for, run_all, sweep_parallel, ControllerFactory};
use crate::svg::{Plot, Series};

/// Scenario name for a constant network taken from the `[network]` section.
pub const CONSTANT_SCENARIO: &str = "constant";
const DEFAULT_DURATION: f64 = 100.0;

#[derive(Debug, Parser)]
#[command(name = "aqmtune", version, about = "Stabilizing PID design for AQM routers on a delayed TCP fluid model")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: config, then $AQMTUNE_OUT, then ./out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the equilibrium and the linearized plant.
    OperatingPoint,
    /// Sweep r1 and export the stabilizing set.
    Region(RegionArgs),
    /// Grid search for the cheapest stabilizing triplet.
    Optimize(OptimizeArgs),
    /// Frequency response and cost of one controller.
    Freq(FreqArgs),
    /// Simulate the nonlinear model with one or more controllers.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Number of TCP flows N.
    #[arg(long, global = true)]
    pub n_flows: Option<f64>,
    /// Link capacity C in packets per second.
    #[arg(long, global = true)]
    pub capacity: Option<f64>,
    /// Propagation delay Tp in seconds.
    #[arg(long, global = true)]
    pub prop_delay: Option<f64>,
    /// Target queue length in packets.
    #[arg(long, global = true)]
    pub q_ref: Option<f64>,
    /// Coefficient convention of the linearized plant.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// Lower end of the r1 sweep.
    #[arg(long, allow_negative_numbers = true)]
    pub r1_min: Option<f64>,
    /// Upper end of the r1 sweep.
    #[arg(long, allow_negative_numbers = true)]
    pub r1_max: Option<f64>,
    /// Number of r1 slices, endpoints included.
    #[arg(long)]
    pub r1_steps: Option<usize>,
    /// Lower r2 edge of the search window.
    #[arg(long, allow_negative_numbers = true)]
    pub r2_min: Option<f64>,
    /// Upper r2 edge of the search window.
    #[arg(long, allow_negative_numbers = true)]
    pub r2_max: Option<f64>,
    /// Lower r0 edge of the search window.
    #[arg(long, allow_negative_numbers = true)]
    pub r0_min: Option<f64>,
    /// Upper r0 edge of the search window.
    #[arg(long, allow_negative_numbers = true)]
    pub r0_max: Option<f64>,
    /// Upper end of the boundary-frequency scan.
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Samples of g(w) used to bracket its zeros.
    #[arg(long)]
    pub g_samples: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    /// Lowest grid frequency, rad/s.
    #[arg(long)]
    pub freq_min: Option<f64>,
    /// Highest grid frequency, rad/s.
    #[arg(long)]
    pub freq_max: Option<f64>,
    /// Log-spaced grid points.
    #[arg(long)]
    pub freq_points: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ControllerArgs {
    /// Triplet component r0 = K*ki.
    #[arg(long, allow_negative_numbers = true)]
    pub r0: Option<f64>,
    /// Triplet component r1 = K*kp.
    #[arg(long, allow_negative_numbers = true)]
    pub r1: Option<f64>,
    /// Triplet component r2 = K*kd + R0.
    #[arg(long, allow_negative_numbers = true)]
    pub r2: Option<f64>,
    /// Proportional gain; with --ki and --kd replaces the triplet.
    #[arg(long, allow_negative_numbers = true)]
    pub kp: Option<f64>,
    /// Integral gain.
    #[arg(long, allow_negative_numbers = true)]
    pub ki: Option<f64>,
    /// Derivative gain.
    #[arg(long, allow_negative_numbers = true)]
    pub kd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Skip the per-slice SVG files.
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Probes per axis in each stable cell's bounding box.
    #[arg(long)]
    pub density: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub controller: ControllerArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `perf-nominal`, `robust-sec4` or `constant`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Disturbance seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Integration step in seconds.
    #[arg(long)]
    pub step: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Comma separated: optimal, boundary, open-loop, custom.
    #[arg(long, value_delimiter = ',')]
    pub controllers: Option<Vec<String>>,
    /// Start from an empty queue or from equilibrium.
    #[arg(long, value_enum)]
    pub initial: Option<Initial>,
    /// Seconds ignored before the deviation range is taken.
    #[arg(long)]
    pub transient_cutoff: Option<f64>,
    /// Keep every n-th integration step in the trace.
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Triplet behind `optimal`, as `r0,r1,r2`.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub design: Option<[f64; 3]>,
    #[command(flatten)]
    pub controller: ControllerArgs,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma separated numbers r0,r1,r2".to_string())
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn set_opt<T>(target: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *target = value;
    }
}

impl NetworkArgs {
    fn apply(&self, c: &mut RunConfig) {
        let n = &mut c.network;
        set(&mut n.n_flows, self.n_flows);
        set(&mut n.capacity, self.capacity);
        set(&mut n.prop_delay, self.prop_delay);
        set(&mut n.q_ref, self.q_ref);
        set(&mut n.mode, self.mode);
    }
}

impl SweepArgs {
    fn apply(&self, c: &mut RunConfig) {
        let r = &mut c.region;
        set(&mut r.r1_min, self.r1_min);
        set(&mut r.r1_max, self.r1_max);
        set(&mut r.r1_steps, self.r1_steps);
        set(&mut r.r2_min, self.r2_min);
        set(&mut r.r2_max, self.r2_max);
        set(&mut r.r0_min, self.r0_min);
        set(&mut r.r0_max, self.r0_max);
        set(&mut r.omega_max, self.omega_max);
        set(&mut r.g_samples, self.g_samples);
    }
}

impl GridArgs {
    fn apply(&self, c: &mut RunConfig) {
        let o = &mut c.optimize;
        set(&mut o.omega_min, self.freq_min);
        set(&mut o.omega_max, self.freq_max);
        set(&mut o.points, self.freq_points);
    }
}

impl ControllerArgs {
    fn apply(&self, c: &mut RunConfig) {
        let triplet_flags = self.r0.is_some() || self.r1.is_some() || self.r2.is_some();
        let gain_flags = self.kp.is_some() || self.ki.is_some() || self.kd.is_some();
        let k = &mut c.controller;
        // A flag family replaces the whole section rather than mixing with it.
        if triplet_flags {
            *k = Default::default();
            k.r0 = self.r0;
            k.r1 = self.r1;
            k.r2 = self.r2;
        }
        if gain_flags {
            if !triplet_flags {
                *k = Default::default();
            }
            k.kp = self.kp;
            k.ki = self.ki;
            k.kd = self.kd;
        }
    }
}

/// Config file plus flag overrides, validated.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.network.apply(&mut c);
    match &cli.command {
        Command::OperatingPoint => {}
        Command::Region(a) => a.sweep.apply(&mut c),
        Command::Optimize(a) => {
            a.sweep.apply(&mut c);
            a.grid.apply(&mut c);
            set(&mut c.optimize.density, a.density);
        }
        Command::Freq(a) => {
            a.grid.apply(&mut c);
            a.controller.apply(&mut c);
        }
        Command::Simulate(a) => {
            let s = &mut c.simulate;
            set(&mut s.scenario, a.scenario.clone());
            set(&mut s.seed, a.seed);
            set(&mut s.step, a.step);
            set_opt(&mut s.duration, a.duration);
            set(&mut s.controllers, a.controllers.clone());
            set(&mut s.initial, a.initial);
            set(&mut s.transient_cutoff, a.transient_cutoff);
            set(&mut s.record_every, a.record_every);
            set_opt(&mut s.design, a.design);
            a.controller.apply(&mut c);
        }
    }
    c.validate()?;
    Ok(c)
}

/// Parse, run, and print; returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match run(&cli) {
        Ok(report) => {
            let _ = out.write_all(report.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Execute a parsed command and return its text report.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve(cli)?;
    let out_dir = cfg.output_dir(cli.out.as_deref());
    match &cli.command {
        Command::OperatingPoint => cmd_operating_point(&cfg),
        Command::Region(a) => cmd_region(&cfg, &out_dir, !a.no_svg),
        Command::Optimize(_) => cmd_optimize(&cfg, &out_dir),
        Command::Freq(_) => cmd_freq(&cfg, &out_dir),
        Command::Simulate(_) => cmd_simulate(&cfg, &out_dir),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Write a CSV through `f` into `dir/name`.
pub fn write_csv<F>(dir: &Path, name: &str, f: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> export::CsvResult,
{
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.into() })?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn cmd_operating_point(cfg: &RunConfig) -> Result<String, CliError> {
    let params = cfg.network_params();
    let (op, plant) = plant_for(&params, cfg.mode())?;
    let mut s = String::new();
    let _ = writeln!(s, "N = {}, C = {} packets/s, Tp = {} s, q0 = {} packets", params.n_flows, params.capacity, params.prop_delay, params.q_ref);
    let _ = writeln!(s, "R0 = {:.4} s", op.r0_delay);
    let _ = writeln!(s, "W0 = {:.4} packets", op.w0);
    let _ = writeln!(s, "p0 = {:.6}", op.p0);
    let _ = writeln!(s, "K  = {:.4}", op.gain_k);
    let [d0, d1, d2] = plant.den_poly;
    let _ = writeln!(
        s,
        "plant ({:?}): K e^(-{} s) / ({d2:.4} s^2 + {d1:.4} s + {d0} + {:.4} s e^(-{} s))",
        plant.mode, plant.delay, plant.den_delay_coeff, plant.delay
    );
    Ok(s)
}

fn slice_svg(slice: &SliceRegion, window: Window, design: Option<&Triplet>) -> String {
    let mut p = Plot::new(&format!("stabilizing set, r1 = {}", slice.r1), "r2", "r0");
    p.x_range = Some((window.r2_min, window.r2_max));
    p.y_range = Some((window.r0_min.max(0.0), window.r0_max));
    p.polygons = slice
        .stable_cells()
        .map(|c| c.polygon.vertices.iter().map(|v| (v.x, v.y)).collect())
        .collect();
    for (i, l) in slice.crb_lines.iter().enumerate() {
        p.series.push(Series {
            label: format!("CRB {} (w = {:.3})", i, l.omega),
            points: vec![(window.r2_min, l.r0_at(window.r2_min)), (window.r2_max, l.r0_at(window.r2_max))],
        });
    }
    if let Some(t) = design {
        p.markers.push((t.r2, t.r0, "design".into()));
    }
    p.render()
}

pub fn cmd_region(cfg: &RunConfig, out_dir: &Path, svg: bool) -> Result<String, CliError> {
    let (_, plant) = plant_for(&cfg.network_params(), cfg.mode())?;
    let r = &cfg.region;
    let window = cfg.window();
    let region = sweep_parallel((r.r1_min, r.r1_max), r.r1_steps, window, &plant, &cfg.slice_options());
    if region.is_empty() {
        return Err(CliError::Empty("no stable cell in any slice".into()));
    }
    ensure_dir(out_dir)?;
    write_csv(out_dir, "region.csv", |w| export::write_region(w, &region))?;
    write_csv(out_dir, "crb.csv", |w| export::write_crb(w, &region))?;
    let design = Triplet::paper_optimal();
    if svg {
        let dir = out_dir.join("slices");
        ensure_dir(&dir)?;
        let near = region.nearest_slice(design.r1).map(|s| s.r1);
        for (i, slice) in region.slices.iter().enumerate() {
            let mark = (Some(slice.r1) == near).then_some(&design);
            write_text(&dir, &format!("slice_{i:04}.svg"), &slice_svg(slice, window, mark))?;
        }
    }
    let stable_slices: Vec<f64> = region.slices.iter().filter(|s| !s.is_empty()).map(|s| s.r1).collect();
    let cells: usize = region.slices.iter().map(|s| s.stable_cells().count()).sum();
    let dropped: usize = region.slices.iter().map(|s| s.dropped_cells).sum();
    let mut s = String::new();
    let _ = writeln!(s, "slices: {} ({} with a stable cell)", region.slices.len(), stable_slices.len());
    let _ = writeln!(
        s,
        "stable r1 range on the grid: [{}, {}]",
        stable_slices.first().copied().unwrap_or(f64::NAN),
        stable_slices.last().copied().unwrap_or(f64::NAN)
    );
    let _ = writeln!(s, "stable cells: {cells}, unclassified cells: {dropped}");
    let _ = writeln!(
        s,
        "({}, {}, {}) stabilizing: {}",
        design.r0,
        design.r1,
        design.r2,
        contains(&region, &design)
    );
    let _ = writeln!(s, "wrote {}", out_dir.display());
    Ok(s)
}

pub fn cmd_optimize(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    let (op, plant) = plant_for(&cfg.network_params(), cfg.mode())?;
    let r = &cfg.region;
    let region = sweep_parallel((r.r1_min, r.r1_max), r.r1_steps, cfg.window(), &plant, &cfg.slice_options());
    let (searches, best) =
        optimize_parallel(&region, &op, &cfg.weights(), cfg.frequency_grid(), cfg.optimize.density)?;
    ensure_dir(out_dir)?;
    write_csv(out_dir, "cost_surface.csv", |w| export::write_cost_surface(w, &searches))?;
    write_csv(out_dir, "slice_minima.csv", |w| export::write_slice_minima(w, &searches))?;
    let mut p = Plot::new("slice minimum of the mixed-sensitivity cost", "r1", "min psi");
    p.series.push(Series { label: "min psi".into(), points: best.slice_costs.clone() });
    p.markers.push((best.triplet.r1, best.psi, "optimum".into()));
    write_text(out_dir, "slice_minima.svg", &p.render())?;

    let t = best.triplet;
    let g = best.gains;
    let mut s = String::new();
    let _ = writeln!(s, "optimal triplet: r0 = {}, r1 = {}, r2 = {}", t.r0, t.r1, t.r2);
    let _ = writeln!(s, "gains: Kp = {:.6e}, Ki = {:.6e}, Kd = {:.6e}", g.kp, g.ki, g.kd);
    let _ = writeln!(s, "psi = {}, sqrt(psi) = {}", best.psi, best.psi.sqrt());
    let probes: usize = searches.iter().map(|s| s.probes.len()).sum();
    let _ = writeln!(s, "probes: {probes} over {} slices", searches.len());
    let _ = writeln!(s, "wrote {}", out_dir.display());
    Ok(s)
}

fn controller_gains(cfg: &RunConfig, op: &aqmtune_core::netmodel::OperatingPoint) -> Result<(Triplet, PidGains), CliError> {
    Ok(match cfg.controller.spec()? {
        None => {
            let t = Triplet::paper_optimal();
            (t, triplet_to_gains(&t, op)?)
        }
        Some(ControllerSpec::Triplet(t)) => (t, triplet_to_gains(&t, op)?),
        Some(ControllerSpec::Gains(g)) => (gains_to_triplet(&g, op), g),
    })
}

pub fn cmd_freq(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    let (op, plant) = plant_for(&cfg.network_params(), cfg.mode())?;
    let (t, g) = controller_gains(cfg, &op)?;
    let weights = cfg.weights();
    let grid = cfg.frequency_grid();
    let cost = mixed_sensitivity_cost(&plant, &g, &weights, grid)?;
    let rows = export::frequency_rows(&plant, &g, &weights, &grid.omegas());
    let verdict = verdict_at(&plant, &t);
    ensure_dir(out_dir)?;
    write_csv(out_dir, "freq.csv", |w| export::write_frequency(w, &rows))?;
    let mut p = Plot::new("sensitivity magnitudes", "omega (rad/s)", "magnitude");
    p.log_x = true;
    p.series.push(Series { label: "|S|".into(), points: rows.iter().map(|r| (r.omega, r.s_mag)).collect() });
    p.series.push(Series { label: "|T|".into(), points: rows.iter().map(|r| (r.omega, r.t_mag)).collect() });
    p.series.push(Series { label: "sqrt cost".into(), points: rows.iter().map(|r| (r.omega, r.cost().sqrt())).collect() });
    write_text(out_dir, "freq.svg", &p.render())?;

    let mut s = String::new();
    let _ = writeln!(s, "triplet: r0 = {}, r1 = {}, r2 = {}", t.r0, t.r1, t.r2);
    let _ = writeln!(s, "gains: Kp = {:.6e}, Ki = {:.6e}, Kd = {:.6e}", g.kp, g.ki, g.kd);
    match verdict {
        Ok(v) => {
            let _ = writeln!(s, "closed loop stable: {} ({} zeros in the right half plane)", v.stable, v.rhp_zero_count);
        }
        Err(e) => {
            let _ = writeln!(s, "closed loop stability undetermined: {e}");
        }
    }
    let _ = writeln!(s, "psi = {}, sqrt(psi) = {}, at omega = {}", cost.psi, cost.psi_sqrt(), cost.argmax_omega);
    let peak_s = rows.iter().map(|r| r.s_mag).fold(0.0, f64::max);
    let peak_t = rows.iter().map(|r| r.t_mag).fold(0.0, f64::max);
    let _ = writeln!(s, "max |S| = {peak_s}, max |T| = {peak_t}");
    let _ = writeln!(s, "wrote {}", out_dir.display());
    Ok(s)
}

/// Scenario from a preset name or the constant network in `cfg`.
pub fn scenario_for(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let sim = &cfg.simulate;
    let mut s = if sim.scenario == CONSTANT_SCENARIO {
        Scenario::constant(&cfg.network_params(), DEFAULT_DURATION)
    } else {
        Scenario::by_name(&sim.scenario, sim.seed).ok_or_else(|| {
            CliError::Config(format!(
                "unknown scenario `{}`; expected {}, {} or {CONSTANT_SCENARIO}",
                sim.scenario, PRESET_NAMES[0], PRESET_NAMES[1]
            ))
        })?
    };
    set(&mut s.duration, sim.duration);
    Ok(s)
}

pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<String, CliError> {
    let sim = &cfg.simulate;
    let scenario = scenario_for(cfg)?;
    let mut factory = ControllerFactory::new(&scenario, cfg.mode(), cfg.window(), cfg.slice_options());
    if let Some([r0, r1, r2]) = sim.design {
        factory.design = Triplet::new(r0, r1, r2);
    }
    factory.custom = cfg.controller.spec()?;
    if sim.controllers.is_empty() {
        return Err(CliError::Config("simulate: at least one controller is required".into()));
    }
    let controllers = sim.controllers.iter().map(|n| factory.build(n)).collect::<Result<Vec<_>, _>>()?;
    let opts = SimOptions {
        step: sim.step,
        initial: match sim.initial {
            Initial::Cold => InitialState::Cold,
            Initial::Equilibrium => InitialState::Equilibrium,
        },
        record_every: sim.record_every,
    };
    let traces = run_all(&scenario, &controllers, &opts)?;

    ensure_dir(out_dir)?;
    let mut plot = Plot::new(&format!("queue length, {}", sim.scenario), "t (s)", "q (packets)");
    let mut rows = Vec::new();
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (seed {}), {} s, q_ref = {}", sim.scenario, sim.seed, scenario.duration, scenario.q_ref);
    for (c, tr) in controllers.iter().zip(&traces) {
        write_csv(out_dir, &format!("trace_{}.csv", c.label), |w| export::write_trace(w, tr))?;
        plot.series.push(Series { label: c.label.clone(), points: tr.time.iter().copied().zip(tr.q.iter().copied()).collect() });
        let m = compute_metrics(tr, scenario.q_ref, sim.transient_cutoff);
        let _ = write!(s, "{}:", c.label);
        if let Some(t) = c.triplet {
            let _ = write!(s, " triplet ({}, {}, {})", t.r0, t.r1, t.r2);
        }
        if let Some(g) = c.gains {
            let _ = write!(s, " gains ({:.4e}, {:.4e}, {:.4e})", g.kp, g.ki, g.kd);
        }
        let _ = writeln!(s);
        let fmt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| format!("{v:.3} s"));
        let _ = writeln!(
            s,
            "  rise {}, settling {}, overshoot {:.3} %, q after {} s in [{:.2}, {:.2}]{}",
            fmt(m.rise_time),
            fmt(m.settling_time),
            m.overshoot,
            sim.transient_cutoff,
            m.deviation_range.0,
            m.deviation_range.1,
            if tr.divergent { ", DIVERGENT" } else { "" }
        );
        rows.push((c.label.clone(), m, tr.divergent));
    }
    write_csv(out_dir, "metrics.csv", |w| export::write_metrics(w, &rows))?;
    write_text(out_dir, "queue.svg", &plot.render())?;
    let _ = writeln!(s, "wrote {}", out_dir.display());
    Ok(s)
}
