//! Runs a scenario and lays its artifacts out in a run directory.

use std::path::{Path, PathBuf};

use crate::dynamics::ControlBounds;
use crate::error::Result;
use crate::integrator::{simulate, Sample, TrajectoryRun};
use crate::io::{
    self, CONTROL_FILE, METRICS_FILE, PORTRAIT_CARTESIAN_FILE, PORTRAIT_POLAR_FILE, SCENARIO_FILE,
};
use crate::manifold::ManifoldParams;
use crate::metrics::{compute_metrics, Metrics};
use crate::plot::{render_control_profile, render_phase_portrait, View};
use crate::scenario::{Scenario, ScenarioConfig, Segment};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub runs: Vec<TrajectoryRun>,
    pub metrics: Metrics,
}

impl RunOutput {
    /// First failure of any trajectory, if one aborted.
    pub fn first_failure(&self) -> Option<&crate::Error> {
        self.runs.iter().find_map(|r| r.failure.as_ref())
    }
}

pub fn run_scenario(scenario: &Scenario) -> RunOutput {
    let runs = simulate(scenario);
    let metrics = compute_metrics(scenario, &runs);
    RunOutput { runs, metrics }
}

fn distinct_manifolds(segments: &[Segment]) -> Vec<ManifoldParams> {
    let mut out: Vec<ManifoldParams> = Vec::new();
    for s in segments {
        let b = s.manifold();
        if !out.contains(&b) {
            out.push(b);
        }
    }
    out
}

fn distinct_pairs(segments: &[Segment]) -> Vec<(ManifoldParams, f64)> {
    let mut out: Vec<(ManifoldParams, f64)> = Vec::new();
    for s in segments {
        let p = (s.manifold(), s.mu);
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// The three SVG documents of a run, as `(file name, contents)`.
pub fn render_figures<T: AsRef<[Sample]>>(
    trajectories: &[T],
    segments: &[Segment],
    bounds: &ControlBounds,
) -> Vec<(&'static str, String)> {
    let manifolds = distinct_manifolds(segments);
    vec![
        (
            PORTRAIT_POLAR_FILE,
            render_phase_portrait(trajectories, &manifolds, View::Polar),
        ),
        (
            PORTRAIT_CARTESIAN_FILE,
            render_phase_portrait(trajectories, &manifolds, View::Cartesian),
        ),
        (
            CONTROL_FILE,
            render_control_profile(trajectories, &distinct_pairs(segments), bounds),
        ),
    ]
}

/// Writes `scenario.json`, one CSV per trajectory, `metrics.json` and the figures.
pub fn write_run_dir(dir: &Path, scenario: &Scenario, out: &RunOutput) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    written.push(io::write_in(
        dir,
        SCENARIO_FILE,
        scenario.to_config().to_json().as_bytes(),
    )?);
    for run in &out.runs {
        let csv = io::trajectory_csv_string(&run.trajectory.samples);
        written.push(io::write_in(
            dir,
            &io::trajectory_file_name(run.index),
            csv.as_bytes(),
        )?);
    }
    written.push(io::write_in(
        dir,
        METRICS_FILE,
        io::metrics_json(&out.metrics).as_bytes(),
    )?);
    let samples: Vec<&[Sample]> = out
        .runs
        .iter()
        .map(|r| r.trajectory.samples.as_slice())
        .collect();
    for (name, svg) in render_figures(&samples, scenario.schedule.segments(), &scenario.bounds) {
        written.push(io::write_in(dir, name, svg.as_bytes())?);
    }
    Ok(written)
}

/// Regenerates the figures of an existing run directory from its CSV files.
pub fn render_run_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let contents = io::read_run_dir(dir)?;
    let cfg: &ScenarioConfig = &contents.config;
    let scenario = crate::scenario::validate_scenario(cfg)?;
    render_figures(
        &contents.trajectories,
        scenario.schedule.segments(),
        &scenario.bounds,
    )
    .into_iter()
    .map(|(name, svg)| io::write_in(dir, name, svg.as_bytes()))
    .collect()
}
