//! Fixed-step RK4 integration of the closed loop across schedule segments.
//!
//! Steps never straddle a schedule breakpoint or an adaptation epoch: each
//! interval between consecutive breakpoints is covered by a whole number of
//! equal steps no longer than `h`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::{miac_step, AdaptationState};
use crate::control::{closed_loop_field, ChiParams, ControlEvaluation};
use crate::dynamics::{polar_to_cartesian, ControlBounds, PolarState, DEFAULT_R_GUARD};
use crate::error::{Error, Result, Violation};
use crate::manifold::ManifoldParams;
use crate::scenario::{Scenario, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub h: f64,
    pub t_end: f64,
    /// Record one sample every this many steps (segment ends are always recorded).
    pub sample_every: usize,
    /// Compare each step against two half steps and log large discrepancies.
    pub error_monitor: bool,
    pub r_guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            h: 0.005,
            t_end: 100.0,
            sample_every: 10,
            error_monitor: false,
            r_guard: DEFAULT_R_GUARD,
        }
    }
}

impl IntegratorConfig {
    pub fn check(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.h > 0.0 && self.h.is_finite()) {
            v.push(Violation::new("integrator.h", "step must be positive"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            v.push(Violation::new(
                "integrator.t_end",
                "horizon must be positive",
            ));
        }
        if self.sample_every < 1 {
            v.push(Violation::new("integrator.sample_every", "must be >= 1"));
        }
        if !(self.r_guard > 0.0) {
            v.push(Violation::new("integrator.r_guard", "must be positive"));
        }
        v
    }
}

/// One recorded row; mirrors the trajectory CSV columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub u_raw: f64,
    pub u_applied: f64,
    pub clamped: bool,
    pub b0: f64,
    pub b1: f64,
    pub mu: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Sample {
    pub fn state(&self) -> PolarState {
        PolarState::new(self.r, self.theta)
    }

    pub fn manifold(&self) -> ManifoldParams {
        ManifoldParams::new(self.b0, self.b1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    ClampOnset,
    ScheduleSwitch { segment: usize },
    AdaptationEpoch { a1: f64, a2: f64 },
    StepError { estimate: f64, threshold: f64 },
    GuardHit { r: f64 },
    Failure { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// Smallest `dtheta/dt` seen at a sample.
    pub min_dtheta_dt: f64,
    /// Integration steps in which any RK stage hit the saturation.
    pub clamped_steps: usize,
}

impl Trajectory {
    pub fn clamp_onsets(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::ClampOnset)
            .count()
    }
}

/// Result of integrating one initial condition. A failed run keeps the samples
/// recorded before the failure.
#[derive(Debug, Clone)]
pub struct TrajectoryRun {
    pub index: usize,
    pub initial: PolarState,
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
    pub adaptation: Option<AdaptationState>,
}

/// One classical Runge-Kutta step of an autonomous field.
pub fn rk4_step<F>(mut field: F, state: PolarState, h: f64) -> Result<PolarState>
where
    F: FnMut(PolarState) -> Result<(f64, f64)>,
{
    let mut eval = |s: PolarState| -> Result<(f64, f64)> {
        let d = field(s)?;
        if d.0.is_finite() && d.1.is_finite() {
            Ok(d)
        } else {
            Err(Error::NonFiniteDerivative {
                r: s.r,
                theta: s.theta,
            })
        }
    };
    let at = |k: (f64, f64), scale: f64| {
        PolarState::new(state.r + scale * k.0, state.theta + scale * k.1)
    };
    let k1 = eval(state)?;
    let k2 = eval(at(k1, h / 2.0))?;
    let k3 = eval(at(k2, h / 2.0))?;
    let k4 = eval(at(k3, h))?;
    Ok(PolarState::new(
        state.r + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        state.theta + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// Integrate every initial condition of `scenario`. Failures abort only
/// their own trajectory.
pub fn simulate(scenario: &Scenario) -> Vec<TrajectoryRun> {
    let run = |(i, s): (usize, &PolarState)| simulate_one(scenario, i, *s);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scenario
            .initial_conditions
            .par_iter()
            .enumerate()
            .map(run)
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        scenario
            .initial_conditions
            .iter()
            .enumerate()
            .map(run)
            .collect()
    }
}

struct Recorder<'a> {
    traj: Trajectory,
    bounds: &'a ControlBounds,
    last_clamped: bool,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, state: PolarState, seg: &Segment, a: &ChiParams) -> Result<()> {
        let b = seg.manifold();
        let (_, dtheta, eval): (f64, f64, ControlEvaluation) =
            closed_loop_field(state, a, &b, seg.mu, self.bounds)?;
        let p = polar_to_cartesian(state);
        self.traj.samples.push(Sample {
            t,
            r: state.r,
            theta: state.theta,
            x: p.x,
            y: p.y,
            v: state.r - b.g(state.theta),
            u_raw: eval.u_raw,
            u_applied: eval.u_applied,
            clamped: eval.clamped,
            b0: seg.b0,
            b1: seg.b1,
            mu: seg.mu,
            a1: a.a1,
            a2: a.a2,
        });
        self.traj.min_dtheta_dt = self.traj.min_dtheta_dt.min(dtheta);
        if eval.clamped && !self.last_clamped {
            self.traj.events.push(Event {
                t,
                kind: EventKind::ClampOnset,
            });
        }
        self.last_clamped = eval.clamped;
        Ok(())
    }
}

/// Sorted interval end points: schedule switches, adaptation epochs and `t_end`.
fn interval_ends(scenario: &Scenario) -> Vec<f64> {
    let t_end = scenario.integrator.t_end;
    let mut ends: Vec<f64> = scenario
        .schedule
        .breakpoints()
        .filter(|&t| t < t_end)
        .collect();
    if let Some(ad) = &scenario.adaptation {
        let mut k = 1u64;
        loop {
            let t = k as f64 * ad.epoch_period;
            if t >= t_end {
                break;
            }
            ends.push(t);
            k += 1;
        }
    }
    ends.push(t_end);
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    ends
}

fn is_epoch(t: f64, period: f64) -> bool {
    let k = (t / period).round();
    k >= 1.0 && k * period == t
}

/// Integrate a single initial condition.
pub fn simulate_one(scenario: &Scenario, index: usize, initial: PolarState) -> TrajectoryRun {
    let cfg = &scenario.integrator;
    let mut rec = Recorder {
        traj: Trajectory {
            min_dtheta_dt: f64::INFINITY,
            ..Default::default()
        },
        bounds: &scenario.bounds,
        last_clamped: false,
    };
    let mut adaptation = scenario
        .adaptation
        .map(|_| AdaptationState::new(scenario.a_nominal));
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(index as u64));

    let outcome = (|| -> Result<()> {
        let mut state = initial;
        let mut a = scenario.a_nominal;
        rec.record(0.0, state, scenario.schedule.segment_at(0.0), &a)?;
        let mut t_a = 0.0;
        let mut steps = 0usize;
        for t_b in interval_ends(scenario) {
            let seg_idx = scenario
                .schedule
                .segments()
                .partition_point(|s| s.t_start <= t_a)
                - 1;
            let seg = scenario.schedule.segments()[seg_idx];
            if seg_idx > 0 && seg.t_start == t_a {
                rec.traj.events.push(Event {
                    t: t_a,
                    kind: EventKind::ScheduleSwitch { segment: seg_idx },
                });
            }
            if let (Some(ad_cfg), Some(ad_state)) = (&scenario.adaptation, adaptation.as_mut()) {
                if is_epoch(t_a, ad_cfg.epoch_period) {
                    *ad_state = miac_step(
                        t_a,
                        state,
                        &rec.traj.samples,
                        (seg.manifold(), seg.mu),
                        ad_state,
                        ad_cfg,
                        &scenario.bounds,
                        &scenario.sets.a_set,
                        &mut rng,
                    );
                    a = ad_state.a_current;
                    rec.traj.events.push(Event {
                        t: t_a,
                        kind: EventKind::AdaptationEpoch { a1: a.a1, a2: a.a2 },
                    });
                }
            }

            let span = t_b - t_a;
            let n = ((span / cfg.h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / n as f64;
            let b = seg.manifold();
            for k in 1..=n {
                let mut stage_clamped = false;
                let field = |s: PolarState| {
                    let (dr, dt, e) = closed_loop_field(s, &a, &b, seg.mu, &scenario.bounds)?;
                    stage_clamped |= e.clamped;
                    Ok((dr, dt))
                };
                let next = rk4_step(field, state, h)?;
                if stage_clamped {
                    rec.traj.clamped_steps += 1;
                }
                let t_next = if k == n { t_b } else { t_a + k as f64 * h };
                if cfg.error_monitor {
                    let field = |s| {
                        closed_loop_field(s, &a, &b, seg.mu, &scenario.bounds)
                            .map(|(dr, dt, _)| (dr, dt))
                    };
                    let half = rk4_step(field, state, h / 2.0)?;
                    let two_half = rk4_step(field, half, h / 2.0)?;
                    let estimate = (next.r - two_half.r)
                        .abs()
                        .max((next.theta - two_half.theta).abs());
                    let threshold = 10.0 * h.powi(5);
                    if estimate > threshold {
                        rec.traj.events.push(Event {
                            t: t_next,
                            kind: EventKind::StepError {
                                estimate,
                                threshold,
                            },
                        });
                    }
                }
                state = next;
                steps += 1;
                if !(state.r > cfg.r_guard) {
                    rec.traj.events.push(Event {
                        t: t_next,
                        kind: EventKind::GuardHit { r: state.r },
                    });
                    return Err(Error::GuardRadiusHit {
                        t: t_next,
                        r: state.r,
                    });
                }
                if steps.is_multiple_of(cfg.sample_every) || k == n {
                    rec.record(t_next, state, &seg, &a)?;
                }
            }
            t_a = t_b;
        }
        Ok(())
    })();

    let failure = outcome.err();
    if let Some(e) = &failure {
        let t = rec.traj.samples.last().map_or(0.0, |s| s.t);
        rec.traj.events.push(Event {
            t,
            kind: EventKind::Failure {
                message: e.to_string(),
            },
        });
    }
    TrajectoryRun {
        index,
        initial,
        trajectory: rec.traj,
        failure,
        adaptation,
    }
}
