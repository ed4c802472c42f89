//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every exported function returns a JSON string. The plain functions in
//! [`demo`] do the work and are what the native tests exercise.

// negated comparisons are deliberate: they reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

pub mod demo {
    use serde::Serialize;

    use vdp_terminal::adaptation::{adjust_gain, Region};
    use vdp_terminal::control::{ChiParams, GainBox};
    use vdp_terminal::dynamics::ControlBounds;
    use vdp_terminal::integrator::IntegratorConfig;
    use vdp_terminal::manifold::ManifoldParams;
    use vdp_terminal::plot::manifold_control_points;
    use vdp_terminal::runner::{render_figures, run_scenario};
    use vdp_terminal::scenario::{
        validate_scenario, AdmissibleSets, BoundsConfig, InitialCondition, ScenarioConfig, Segment,
    };

    /// Upper limit on the demo horizon, to keep the page responsive.
    pub const MAX_T_END: f64 = 400.0;

    #[derive(Debug, Clone, Copy)]
    pub struct Params {
        pub mu: f64,
        pub b0: f64,
        pub b1: f64,
        pub a1: f64,
        pub a2: f64,
        /// Symmetric control limit; zero or negative means unbounded.
        pub u_limit: f64,
    }

    impl Params {
        fn bounds(&self) -> Option<BoundsConfig> {
            (self.u_limit > 0.0).then_some(BoundsConfig {
                u_min: -self.u_limit,
                u_max: self.u_limit,
            })
        }
    }

    #[derive(Debug, Serialize)]
    pub struct TrajectorySummary {
        pub r0: f64,
        pub converged: bool,
        pub convergence_time: Option<f64>,
        pub final_offset: f64,
        pub max_abs_u: f64,
        pub clamp_count: usize,
        pub failure: Option<String>,
    }

    #[derive(Debug, Serialize)]
    pub struct SimulationView {
        pub portrait_cartesian: String,
        pub portrait_polar: String,
        pub control: String,
        pub trajectories: Vec<TrajectorySummary>,
    }

    /// Closed-loop runs from `(r0, 0)` for each radius; the three figures as SVG.
    pub fn simulate(p: Params, radii: &[f64], t_end: f64) -> Result<SimulationView, String> {
        if !(t_end > 0.0 && t_end <= MAX_T_END) {
            return Err(format!("horizon must be in (0, {MAX_T_END}]"));
        }
        let cfg = ScenarioConfig {
            initial_conditions: radii
                .iter()
                .map(|&r| InitialCondition::polar(r, 0.0))
                .collect(),
            a_nominal: ChiParams::new(p.a1, p.a2),
            schedule: vec![Segment {
                t_start: 0.0,
                b0: p.b0,
                b1: p.b1,
                mu: p.mu,
            }],
            bounds: p.bounds(),
            integrator: IntegratorConfig {
                t_end,
                ..IntegratorConfig::default()
            },
            adaptation: None,
            seed: 0,
            sets: AdmissibleSets::default(),
        };
        let scenario = validate_scenario(&cfg).map_err(|e| e.to_string())?;
        let out = run_scenario(&scenario);
        let samples: Vec<_> = out
            .runs
            .iter()
            .map(|r| r.trajectory.samples.as_slice())
            .collect();
        let mut figs = render_figures(&samples, scenario.schedule.segments(), &scenario.bounds)
            .into_iter()
            .map(|(_, svg)| svg);
        let (polar, cartesian, control) = (
            figs.next().unwrap_or_default(),
            figs.next().unwrap_or_default(),
            figs.next().unwrap_or_default(),
        );
        Ok(SimulationView {
            portrait_cartesian: cartesian,
            portrait_polar: polar,
            control,
            trajectories: out
                .metrics
                .trajectories
                .into_iter()
                .map(|m| TrajectorySummary {
                    r0: m.initial.r,
                    converged: m.converged,
                    convergence_time: m.convergence_time,
                    final_offset: m.final_offset,
                    max_abs_u: m.max_abs_u,
                    clamp_count: m.clamp_count,
                    failure: m.failure,
                })
                .collect(),
        })
    }

    #[derive(Debug, Serialize)]
    pub struct ManifoldControl {
        pub theta: Vec<f64>,
        /// `null` where the control law has a pole.
        pub u: Vec<Option<f64>>,
        pub u_min: Option<f64>,
        pub u_max: Option<f64>,
        /// The manifold meets the circle where the control is singular.
        pub crosses_pole: bool,
    }

    /// Control needed to stay on `r = b0 + b1 sin(theta)`.
    pub fn manifold_control(b0: f64, b1: f64, mu: f64) -> ManifoldControl {
        let b = ManifoldParams::new(b0, b1);
        let pts = manifold_control_points(&b, mu);
        let u: Vec<_> = pts.iter().map(|p| p.1.is_finite().then_some(p.1)).collect();
        let finite = u.iter().flatten().copied();
        ManifoldControl {
            theta: pts.iter().map(|p| p.0).collect(),
            u_min: finite.clone().reduce(f64::min),
            u_max: finite.reduce(f64::max),
            crosses_pole: b0 <= 2.0 * b1.abs(),
            u,
        }
    }

    #[derive(Debug, Serialize)]
    pub struct GainView {
        pub feasible: bool,
        pub scale: Option<f64>,
        pub a1: Option<f64>,
        pub u_lo: Option<f64>,
        pub u_hi: Option<f64>,
        pub message: Option<String>,
    }

    /// Largest gain scale whose worst-case control over `|v| <= v_max` fits the bounds.
    pub fn gain_adjustment(p: Params, v_max: f64) -> Result<GainView, String> {
        if !(p.u_limit > 0.0) {
            return Err("adjustment needs a positive control limit".into());
        }
        if !(v_max > 0.0) {
            return Err("v_max must be positive".into());
        }
        let bounds = ControlBounds::symmetric(p.u_limit).map_err(|e| e.to_string())?;
        let region = Region { grid_n: 128, v_max };
        let a = ChiParams::new(p.a1, p.a2);
        let b = ManifoldParams::new(p.b0, p.b1);
        Ok(
            match adjust_gain(&a, &b, p.mu, &bounds, &region, &GainBox::default()) {
                Ok(adj) => GainView {
                    feasible: true,
                    scale: Some(adj.scale),
                    a1: Some(adj.a.a1),
                    u_lo: Some(adj.u_lo),
                    u_hi: Some(adj.u_hi),
                    message: None,
                },
                Err(e) => GainView {
                    feasible: false,
                    scale: None,
                    a1: None,
                    u_lo: None,
                    u_hi: None,
                    message: Some(e.to_string()),
                },
            },
        )
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate(
    mu: f64,
    b0: f64,
    b1: f64,
    a1: f64,
    a2: f64,
    u_limit: f64,
    radii: &[f64],
    t_end: f64,
) -> Result<String, JsError> {
    let p = demo::Params {
        mu,
        b0,
        b1,
        a1,
        a2,
        u_limit,
    };
    to_json(&demo::simulate(p, radii, t_end).map_err(|e| JsError::new(&e))?)
}

#[wasm_bindgen]
pub fn manifold_control(b0: f64, b1: f64, mu: f64) -> Result<String, JsError> {
    to_json(&demo::manifold_control(b0, b1, mu))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn gain_adjustment(
    mu: f64,
    b0: f64,
    b1: f64,
    a1: f64,
    a2: f64,
    u_limit: f64,
    v_max: f64,
) -> Result<String, JsError> {
    let p = demo::Params {
        mu,
        b0,
        b1,
        a1,
        a2,
        u_limit,
    };
    to_json(&demo::gain_adjustment(p, v_max).map_err(|e| JsError::new(&e))?)
}
