//! Per-trajectory statistics and scenario aggregates.

use serde::{Deserialize, Serialize};

use crate::adaptation::{EpochRecord, EpochStatus};
use crate::control::{ChiParams, GainBox, EPS_DEN};
use crate::dynamics::{Interval, PolarState};
use crate::integrator::{Sample, TrajectoryRun};
use crate::manifold::ManifoldBox;
use crate::scenario::{Scenario, EPS_CONV};

/// First sample time from which `|v| < eps` holds through the last sample.
pub fn convergence_time(samples: &[Sample], eps: f64) -> Option<f64> {
    let last_bad = samples.iter().rposition(|s| !(s.v.abs() < eps));
    match last_bad {
        None => samples.first().map(|s| s.t),
        Some(i) => samples.get(i + 1).map(|s| s.t),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSummary {
    pub epochs: usize,
    pub adjusted: usize,
    pub skipped: usize,
    pub infeasible: usize,
    pub final_a: ChiParams,
    pub log: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub index: usize,
    pub initial: PolarState,
    pub converged: bool,
    pub convergence_time: Option<f64>,
    /// `v` at the last recorded sample.
    pub final_offset: f64,
    pub final_time: f64,
    /// Largest `|u_applied|` over the recorded samples.
    pub max_abs_u: f64,
    pub clamp_count: usize,
    pub min_dtheta_dt: f64,
    pub winding_monotone: bool,
    pub samples: usize,
    pub failure: Option<String>,
    pub adaptation: Option<AdaptationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trajectories: usize,
    pub converged: usize,
    pub failed: usize,
    pub all_converged: bool,
    pub max_convergence_time: Option<f64>,
    pub max_abs_u: f64,
    pub clamp_count: usize,
    pub min_dtheta_dt: f64,
}

/// Values the run actually used for everything the model leaves open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedDefaults {
    pub a_set: GainBox,
    pub b_set: ManifoldBox,
    pub mu_set: Interval,
    pub eps_conv: f64,
    pub eps_den: f64,
    pub r_guard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub trajectories: Vec<TrajectoryMetrics>,
    pub aggregate: Aggregate,
    pub defaults: ResolvedDefaults,
}

pub fn trajectory_metrics(run: &TrajectoryRun, t_end: f64) -> TrajectoryMetrics {
    let samples = &run.trajectory.samples;
    let last = samples.last();
    let reached_end = run.failure.is_none() && last.is_some_and(|s| s.t == t_end);
    let conv = if reached_end {
        convergence_time(samples, EPS_CONV)
    } else {
        None
    };
    let max_abs_u = samples
        .iter()
        .map(|s| s.u_applied.abs())
        .fold(0.0, f64::max);
    let adaptation = run.adaptation.as_ref().map(|st| {
        let count =
            |f: fn(&EpochStatus) -> bool| st.epoch_log.iter().filter(|e| f(&e.status)).count();
        AdaptationSummary {
            epochs: st.epoch_log.len(),
            adjusted: count(|s| matches!(s, EpochStatus::Adjusted { .. })),
            skipped: count(|s| matches!(s, EpochStatus::Skipped { .. })),
            infeasible: count(|s| matches!(s, EpochStatus::Infeasible { .. })),
            final_a: st.a_current,
            log: st.epoch_log.clone(),
        }
    });
    TrajectoryMetrics {
        index: run.index,
        initial: run.initial,
        converged: conv.is_some(),
        convergence_time: conv,
        final_offset: last.map_or(f64::NAN, |s| s.v),
        final_time: last.map_or(0.0, |s| s.t),
        max_abs_u,
        clamp_count: run.trajectory.clamp_onsets(),
        min_dtheta_dt: run.trajectory.min_dtheta_dt,
        winding_monotone: run.trajectory.min_dtheta_dt > 0.0,
        samples: samples.len(),
        failure: run.failure.as_ref().map(|e| e.to_string()),
        adaptation,
    }
}

pub fn aggregate(per: &[TrajectoryMetrics]) -> Aggregate {
    let converged = per.iter().filter(|m| m.converged).count();
    Aggregate {
        trajectories: per.len(),
        converged,
        failed: per.iter().filter(|m| m.failure.is_some()).count(),
        all_converged: converged == per.len(),
        max_convergence_time: per
            .iter()
            .filter_map(|m| m.convergence_time)
            .fold(None, |acc: Option<f64>, t| {
                Some(acc.map_or(t, |a| a.max(t)))
            }),
        max_abs_u: per.iter().map(|m| m.max_abs_u).fold(0.0, f64::max),
        clamp_count: per.iter().map(|m| m.clamp_count).sum(),
        min_dtheta_dt: per
            .iter()
            .map(|m| m.min_dtheta_dt)
            .fold(f64::INFINITY, f64::min),
    }
}

pub fn compute_metrics(scenario: &Scenario, runs: &[TrajectoryRun]) -> Metrics {
    let per: Vec<_> = runs
        .iter()
        .map(|r| trajectory_metrics(r, scenario.integrator.t_end))
        .collect();
    Metrics {
        aggregate: aggregate(&per),
        trajectories: per,
        defaults: ResolvedDefaults {
            a_set: scenario.sets.a_set,
            b_set: scenario.sets.b_set,
            mu_set: scenario.sets.mu_set,
            eps_conv: EPS_CONV,
            eps_den: EPS_DEN,
            r_guard: scenario.integrator.r_guard,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, v: f64) -> Sample {
        Sample {
            t,
            r: 4.0 + v,
            theta: t,
            x: 0.0,
            y: 0.0,
            v,
            u_raw: -v,
            u_applied: -v,
            clamped: false,
            b0: 4.0,
            b1: 0.0,
            mu: 0.0,
            a1: 0.5,
            a2: 1.0,
        }
    }

    #[test]
    fn convergence_time_requires_staying_below() {
        let s: Vec<_> = [0.5, 0.001, 0.02, 0.005, 0.001]
            .iter()
            .enumerate()
            .map(|(i, &v)| sample(i as f64, v))
            .collect();
        assert_eq!(convergence_time(&s, 1e-2), Some(3.0));
        assert_eq!(convergence_time(&s[..3], 1e-2), None);
        assert_eq!(convergence_time(&s[3..], 1e-2), Some(3.0));
        assert_eq!(convergence_time(&[], 1e-2), None);
    }

    #[test]
    fn nan_offset_is_not_converged() {
        let s = vec![sample(0.0, 0.0), sample(1.0, f64::NAN)];
        assert_eq!(convergence_time(&s, 1e-2), None);
    }
}
