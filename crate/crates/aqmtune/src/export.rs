//! CSV writers. Floats use the shortest representation that round-trips, so
//! files are exact and byte-stable across runs.

use std::io::Write;

use aqmtune_core::ddesim::{Metrics, SimTrace};
use aqmtune_core::freqdesign::{SliceSearch, Weights};
use aqmtune_core::netmodel::{PidGains, PlantCoefficients};
use aqmtune_core::paramspace::StabilityRegion;
use aqmtune_core::{controller_response, plant_response, Complex64};

pub type CsvResult = Result<(), csv::Error>;

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `r1, polygon_id, vertex_index, r2, r0` for every stable cell; ids restart per slice.
pub fn write_region<W: Write>(out: W, region: &StabilityRegion) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r1", "polygon_id", "vertex_index", "r2", "r0"])?;
    for slice in &region.slices {
        for (id, cell) in slice.stable_cells().enumerate() {
            for (k, v) in cell.polygon.vertices.iter().enumerate() {
                w.write_record([num(slice.r1), id.to_string(), k.to_string(), num(v.x), num(v.y)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `r1, omega, slope, intercept` of every complex root boundary `r0 = slope r2 + intercept`.
pub fn write_crb<W: Write>(out: W, region: &StabilityRegion) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r1", "omega", "slope", "intercept"])?;
    for slice in &region.slices {
        for l in &slice.crb_lines {
            w.write_record([num(slice.r1), num(l.omega), num(l.slope), num(l.intercept)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Every probed candidate: `r1, r2, r0, psi, psi_sqrt`.
pub fn write_cost_surface<W: Write>(out: W, searches: &[SliceSearch]) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r1", "r2", "r0", "psi", "psi_sqrt"])?;
    for s in searches {
        for p in &s.probes {
            let t = p.triplet;
            w.write_record([num(t.r1), num(t.r2), num(t.r0), num(p.psi), num(p.psi.sqrt())])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cheapest cost on each non-empty slice: `r1, min_psi, min_psi_sqrt`.
pub fn write_slice_minima<W: Write>(out: W, searches: &[SliceSearch]) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r1", "min_psi", "min_psi_sqrt"])?;
    for s in searches {
        if let Some(b) = s.best {
            w.write_record([num(s.r1), num(b.psi), num(b.psi.sqrt())])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t, W, q, p, N, C, Tp`.
pub fn write_trace<W: Write>(out: W, tr: &SimTrace) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "W", "q", "p", "N", "C", "Tp"])?;
    for i in 0..tr.len() {
        w.write_record([
            num(tr.time[i]),
            num(tr.w[i]),
            num(tr.q[i]),
            num(tr.p[i]),
            num(tr.n_flows[i]),
            num(tr.capacity[i]),
            num(tr.prop_delay[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of step-response figures per controller.
pub fn write_metrics<W: Write>(out: W, rows: &[(String, Metrics, bool)]) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "controller",
        "rise_time",
        "settling_time",
        "overshoot_percent",
        "deviation_min",
        "deviation_max",
        "never_settles",
        "divergent",
    ])?;
    for (label, m, divergent) in rows {
        w.write_record([
            label.clone(),
            opt(m.rise_time),
            opt(m.settling_time),
            num(m.overshoot),
            num(m.deviation_range.0),
            num(m.deviation_range.1),
            m.never_settles.to_string(),
            divergent.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the loop's frequency response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqRow {
    pub omega: f64,
    pub s_mag: f64,
    pub t_mag: f64,
    pub w1s_sq: f64,
    pub w2t_sq: f64,
}

impl FreqRow {
    pub fn cost(&self) -> f64 {
        self.w1s_sq + self.w2t_sq
    }
}

/// Sensitivity magnitudes on `omegas`; frequencies where the loop or a weight is singular are skipped.
pub fn frequency_rows(plant: &PlantCoefficients, g: &PidGains, w: &Weights, omegas: &[f64]) -> Vec<FreqRow> {
    omegas
        .iter()
        .filter_map(|&omega| {
            let p = plant_response(plant, omega).ok()?;
            let c = controller_response(g, omega).ok()?;
            let l = p * c;
            let s = (l + 1.0).inv();
            let t = l * s;
            let jw = Complex64::new(0.0, omega);
            let w1 = w.w1.eval(jw)?;
            let w2 = w.w2.eval(jw)?;
            let row = FreqRow {
                omega,
                s_mag: s.norm(),
                t_mag: t.norm(),
                w1s_sq: (w1 * s).norm_sqr(),
                w2t_sq: (w2 * t).norm_sqr(),
            };
            row.cost().is_finite().then_some(row)
        })
        .collect()
}

/// `omega, s_mag, t_mag, w1s_sq, w2t_sq, cost`.
pub fn write_frequency<W: Write>(out: W, rows: &[FreqRow]) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "s_mag", "t_mag", "w1s_sq", "w2t_sq", "cost"])?;
    for r in rows {
        w.write_record([num(r.omega), num(r.s_mag), num(r.t_mag), num(r.w1s_sq), num(r.w2t_sq), num(r.cost())])?;
    }
    w.flush()?;
    Ok(())
}
