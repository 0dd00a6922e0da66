//! Run configuration: a sectioned TOML file whose every key can be overridden by a flag.

use std::path::{Path, PathBuf};

use aqmtune_core::freqdesign::{FrequencyGrid, Rational, Weights};
use aqmtune_core::netmodel::{CoefficientMode, NetworkParams, PidGains, Triplet};
use aqmtune_core::paramspace::{SliceOptions, Window};
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "AQMTUNE_OUT";

/// Smallest accepted values for the grid densities.
pub const MIN_R1_STEPS: usize = 2;
pub const MIN_G_SAMPLES: usize = 100;
pub const MIN_FREQ_POINTS: usize = 10;
pub const MIN_DENSITY: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    PaperCompat,
    Derived,
}

impl From<Mode> for CoefficientMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::PaperCompat => CoefficientMode::PaperCompat,
            Mode::Derived => CoefficientMode::Derived,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub n_flows: f64,
    pub capacity: f64,
    pub prop_delay: f64,
    pub q_ref: f64,
    pub mode: Mode,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let p = NetworkParams::nominal();
        Self { n_flows: p.n_flows, capacity: p.capacity, prop_delay: p.prop_delay, q_ref: p.q_ref, mode: Mode::PaperCompat }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionSection {
    pub r1_min: f64,
    pub r1_max: f64,
    pub r1_steps: usize,
    pub r2_min: f64,
    pub r2_max: f64,
    pub r0_min: f64,
    pub r0_max: f64,
    pub omega_max: f64,
    pub g_samples: usize,
}

impl Default for RegionSection {
    fn default() -> Self {
        let w = Window::default();
        let o = SliceOptions::default();
        Self {
            r1_min: -2.0,
            r1_max: 8.0,
            r1_steps: 201,
            r2_min: w.r2_min,
            r2_max: w.r2_max,
            r0_min: w.r0_min,
            r0_max: w.r0_max,
            omega_max: o.omega_max,
            g_samples: o.g_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    pub density: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Weight coefficients, constant term first.
    pub w1_num: Vec<f64>,
    pub w1_den: Vec<f64>,
    pub w2_num: Vec<f64>,
    pub w2_den: Vec<f64>,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        let g = FrequencyGrid::default();
        let w = Weights::default();
        Self {
            density: 40,
            omega_min: g.omega_min,
            omega_max: g.omega_max,
            points: g.points,
            w1_num: w.w1.num,
            w1_den: w.w1.den,
            w2_num: w.w2.num,
            w2_den: w.w2.den,
        }
    }
}

/// A custom controller, either as a normalized triplet or as raw gains.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    /// Missing `kd` with `kp`/`ki` given means a PI controller.
    pub kd: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    Triplet(Triplet),
    Gains(PidGains),
}

impl ControllerSection {
    pub fn spec(&self) -> Result<Option<ControllerSpec>, CliError> {
        let triplet = [self.r0, self.r1, self.r2];
        let gains = [self.kp, self.ki];
        let any_triplet = triplet.iter().any(Option::is_some);
        let any_gains = gains.iter().any(Option::is_some) || self.kd.is_some();
        match (any_triplet, any_gains) {
            (false, false) => Ok(None),
            (true, true) => Err(CliError::Config("controller: give either r0/r1/r2 or kp/ki/kd, not both".into())),
            (true, false) => match triplet {
                [Some(r0), Some(r1), Some(r2)] => Ok(Some(ControllerSpec::Triplet(Triplet::new(r0, r1, r2)))),
                _ => Err(CliError::Config("controller: r0, r1 and r2 must all be given".into())),
            },
            (false, true) => match gains {
                [Some(kp), Some(ki)] => {
                    Ok(Some(ControllerSpec::Gains(PidGains::new(kp, ki, self.kd.unwrap_or(0.0)))))
                }
                _ => Err(CliError::Config("controller: kp and ki must both be given".into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub scenario: String,
    pub seed: u64,
    pub step: f64,
    pub duration: Option<f64>,
    /// Any of `optimal`, `boundary`, `open-loop`, `custom`.
    pub controllers: Vec<String>,
    pub initial: Initial,
    pub transient_cutoff: f64,
    pub record_every: usize,
    /// `[r0, r1, r2]` behind the `optimal` controller; the published optimum when absent.
    pub design: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    Cold,
    Equilibrium,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            scenario: "perf-nominal".into(),
            seed: 1,
            step: 1e-3,
            duration: None,
            controllers: vec!["optimal".into()],
            initial: Initial::Cold,
            transient_cutoff: 20.0,
            record_every: 10,
            design: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSection,
    pub region: RegionSection,
    pub optimize: OptimizeSection,
    pub controller: ControllerSection,
    pub simulate: SimulateSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn network_params(&self) -> NetworkParams {
        let n = &self.network;
        NetworkParams::new(n.n_flows, n.capacity, n.prop_delay, n.q_ref)
    }

    pub fn mode(&self) -> CoefficientMode {
        self.network.mode.into()
    }

    pub fn window(&self) -> Window {
        let r = &self.region;
        Window::new(r.r2_min, r.r2_max, r.r0_min, r.r0_max)
    }

    pub fn slice_options(&self) -> SliceOptions {
        SliceOptions { omega_max: self.region.omega_max, g_samples: self.region.g_samples }
    }

    pub fn frequency_grid(&self) -> FrequencyGrid {
        let o = &self.optimize;
        FrequencyGrid { omega_min: o.omega_min, omega_max: o.omega_max, points: o.points }
    }

    pub fn weights(&self) -> Weights {
        let o = &self.optimize;
        Weights {
            w1: Rational::new(o.w1_num.clone(), o.w1_den.clone()),
            w2: Rational::new(o.w2_num.clone(), o.w2_den.clone()),
        }
    }

    /// Flag, then config file, then `AQMTUNE_OUT`, then `./out`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let r = &self.region;
        if !(r.r1_min.is_finite() && r.r1_max.is_finite() && r.r1_min <= r.r1_max) {
            return bad("region: need finite r1_min <= r1_max");
        }
        if r.r1_steps < MIN_R1_STEPS {
            return bad("region: r1_steps must be at least 2");
        }
        if !self.window().is_valid() {
            return bad("region: window needs r2_min < r2_max and r0_min < r0_max");
        }
        if !(r.omega_max > 0.0 && r.omega_max.is_finite()) {
            return bad("region: omega_max must be positive");
        }
        if r.g_samples < MIN_G_SAMPLES {
            return bad("region: g_samples must be at least 100");
        }
        let o = &self.optimize;
        if o.density < MIN_DENSITY {
            return bad("optimize: density must be at least 1");
        }
        if o.points < MIN_FREQ_POINTS || !self.frequency_grid().is_valid() {
            return bad("optimize: need 0 < omega_min < omega_max and at least 10 points");
        }
        for c in [&o.w1_num, &o.w1_den, &o.w2_num, &o.w2_den] {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return bad("optimize: weight coefficients must be finite and nonempty");
            }
        }
        let s = &self.simulate;
        if !(s.step > 0.0 && s.step.is_finite()) {
            return bad("simulate: step must be positive");
        }
        if s.duration.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
            return bad("simulate: duration must be positive");
        }
        if s.record_every == 0 {
            return bad("simulate: record_every must be at least 1");
        }
        self.controller.spec()?;
        Ok(())
    }
}
