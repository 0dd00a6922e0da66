//! Parallel drivers around the core algorithms. Work is split per `r1` slice
//! or per controller and reassembled in input order, so results do not depend
//! on scheduling.

use aqmtune_core::ddesim::{simulate, ControllerState, Scenario, SimOptions, SimTrace};
use aqmtune_core::freqdesign::{assemble, search_slice, CostEvaluator, FrequencyGrid, OptimalPoint, SliceSearch, Weights};
use aqmtune_core::netmodel::{
    compute_operating_point, linearize, triplet_to_gains, CoefficientMode, NetworkParams, OperatingPoint, PidGains,
    PlantCoefficients, Triplet,
};
use aqmtune_core::paramspace::{crb_edge_midpoint, r1_grid, slice_region_with, SliceOptions, StabilityRegion, Window};
use rayon::prelude::*;

use crate::config::ControllerSpec;
use crate::error::CliError;

pub fn plant_for(params: &NetworkParams, mode: CoefficientMode) -> Result<(OperatingPoint, PlantCoefficients), CliError> {
    let op = compute_operating_point(params)?;
    Ok((op, linearize(&op, mode)))
}

pub fn sweep_parallel(
    r1_range: (f64, f64),
    r1_steps: usize,
    window: Window,
    plant: &PlantCoefficients,
    opts: &SliceOptions,
) -> StabilityRegion {
    let slices = r1_grid(r1_range, r1_steps)
        .into_par_iter()
        .map(|r1| slice_region_with(r1, window, plant, opts))
        .collect();
    StabilityRegion::from_slices(slices, r1_range, *plant)
}

pub fn optimize_parallel(
    region: &StabilityRegion,
    op: &OperatingPoint,
    weights: &Weights,
    grid: FrequencyGrid,
    density: usize,
) -> Result<(Vec<SliceSearch>, OptimalPoint), CliError> {
    if region.is_empty() {
        return Err(CliError::Empty("stability region is empty".into()));
    }
    let eval = CostEvaluator::new(&region.plant, weights, grid)?;
    let searches = region
        .slices
        .par_iter()
        .map(|s| search_slice(s, &eval, op, density))
        .collect::<Result<Vec<_>, _>>()?;
    let best = assemble(&searches, op)?;
    Ok((searches, best))
}

/// Interior design and the marginal design on the complex root boundary next to it.
///
/// Both are located in the stability region of the plant the controller believes in.
pub fn boundary_triplet(
    view: &NetworkParams,
    mode: CoefficientMode,
    window: Window,
    opts: &SliceOptions,
    interior: &Triplet,
) -> Result<Triplet, CliError> {
    let (_, plant) = plant_for(view, mode)?;
    let slice = slice_region_with(interior.r1, window, &plant, opts);
    crb_edge_midpoint(&slice, interior.r2, interior.r0).ok_or_else(|| {
        CliError::Empty(format!(
            "({}, {}, {}) is not inside a stable cell bounded by a complex root boundary",
            interior.r0, interior.r1, interior.r2
        ))
    })
}

/// Everything needed to build the named controllers of one comparison.
#[derive(Debug, Clone)]
pub struct ControllerFactory {
    pub view: NetworkParams,
    pub mode: CoefficientMode,
    pub window: Window,
    pub slice_opts: SliceOptions,
    /// Triplet behind `optimal` and the anchor of `boundary`.
    pub design: Triplet,
    pub custom: Option<ControllerSpec>,
}

/// A controller ready to run, with the triplet it came from when it has one.
#[derive(Debug, Clone)]
pub struct NamedController {
    pub label: String,
    pub triplet: Option<Triplet>,
    pub gains: Option<PidGains>,
    pub state: ControllerState,
}

pub const CONTROLLER_NAMES: [&str; 4] = ["optimal", "boundary", "open-loop", "custom"];

impl ControllerFactory {
    pub fn new(scenario: &Scenario, mode: CoefficientMode, window: Window, slice_opts: SliceOptions) -> Self {
        Self { view: scenario.controller_view, mode, window, slice_opts, design: Triplet::paper_optimal(), custom: None }
    }

    /// Triplets are mapped to gains with the operating point the controller believes in.
    pub fn build(&self, name: &str) -> Result<NamedController, CliError> {
        let op = compute_operating_point(&self.view)?;
        let from_triplet = |t: Triplet| -> Result<NamedController, CliError> {
            let g = triplet_to_gains(&t, &op)?;
            Ok(NamedController { label: name.into(), triplet: Some(t), gains: Some(g), state: ControllerState::pid(g, &op) })
        };
        match name {
            "optimal" => from_triplet(self.design),
            "boundary" => from_triplet(boundary_triplet(&self.view, self.mode, self.window, &self.slice_opts, &self.design)?),
            "open-loop" => Ok(NamedController {
                label: name.into(),
                triplet: None,
                gains: None,
                state: ControllerState::constant(op.p0),
            }),
            "custom" => match self.custom {
                Some(ControllerSpec::Triplet(t)) => from_triplet(t),
                Some(ControllerSpec::Gains(g)) => Ok(NamedController {
                    label: name.into(),
                    triplet: None,
                    gains: Some(g),
                    state: ControllerState::pid(g, &op),
                }),
                None => Err(CliError::Config("controller `custom` needs a [controller] section or gain flags".into())),
            },
            other => Err(CliError::Config(format!(
                "unknown controller `{other}`; expected one of {}",
                CONTROLLER_NAMES.join(", ")
            ))),
        }
    }
}

/// Run every controller on the same scenario.
pub fn run_all(
    scenario: &Scenario,
    controllers: &[NamedController],
    opts: &SimOptions,
) -> Result<Vec<SimTrace>, CliError> {
    controllers
        .par_iter()
        .map(|c| simulate(scenario, c.state.clone(), opts).map_err(CliError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use aqmtune_core::paramspace::sweep;

    #[test]
    fn parallel_sweep_matches_sequential() {
        let (_, plant) = plant_for(&NetworkParams::nominal(), CoefficientMode::PaperCompat).unwrap();
        let a = sweep((2.0, 4.0), 9, Window::default(), &plant);
        let b = sweep_parallel((2.0, 4.0), 9, Window::default(), &plant, &SliceOptions::default());
        assert_eq!(a, b);
    }

    #[test]
    fn factory_names() {
        let s = Scenario::perf_nominal();
        let f = ControllerFactory::new(&s, CoefficientMode::PaperCompat, Window::default(), SliceOptions::default());
        for name in ["optimal", "boundary", "open-loop"] {
            assert_eq!(f.build(name).unwrap().label, name);
        }
        assert!(matches!(f.build("custom"), Err(CliError::Config(_))));
        assert!(matches!(f.build("bogus"), Err(CliError::Config(_))));
        let b = f.build("boundary").unwrap().triplet.unwrap();
        assert_eq!(b.r1, 3.15);
    }
}
