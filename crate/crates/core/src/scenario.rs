//! Scenario configuration: parsing, defaults and validation.
//!
//! The on-disk form is [`ScenarioConfig`] (JSON, unknown keys rejected). It
//! is resolved into a [`Scenario`] by [`validate_scenario`], which reports
//! every violation at once.

use serde::{Deserialize, Serialize};

use crate::adaptation::AdaptationConfig;
use crate::control::{ChiParams, GainBox};
use crate::dynamics::{cartesian_to_polar, CartesianState, ControlBounds, Interval, PolarState};
use crate::error::{Error, Result, Violation};
use crate::integrator::IntegratorConfig;
use crate::manifold::{ManifoldBox, ManifoldParams};

/// Offset below which a trajectory counts as converged.
pub const EPS_CONV: f64 = 1e-2;

/// One piece of the piecewise-constant parameter schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_start: f64,
    pub b0: f64,
    pub b1: f64,
    pub mu: f64,
}

impl Segment {
    pub fn manifold(&self) -> ManifoldParams {
        ManifoldParams::new(self.b0, self.b1)
    }
}

/// Piecewise-constant time course of `(b, mu)`. Segments start at strictly
/// increasing times, the first at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn constant(b: ManifoldParams, mu: f64) -> Self {
        Self {
            segments: vec![Segment {
                t_start: 0.0,
                b0: b.b0,
                b1: b.b1,
                mu,
            }],
        }
    }

    /// Structural checks only; parameter ranges are checked by [`validate_scenario`].
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let v = check_segments_order(&segments);
        if v.is_empty() {
            Ok(Self { segments })
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment in force on `[t_start, next t_start)`.
    pub fn segment_at(&self, t: f64) -> &Segment {
        let idx = self.segments.partition_point(|s| s.t_start <= t);
        &self.segments[idx.saturating_sub(1)]
    }

    /// Switch times strictly after zero.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().skip(1).map(|s| s.t_start)
    }
}

fn check_segments_order(segments: &[Segment]) -> Vec<Violation> {
    let mut v = Vec::new();
    match segments.first() {
        None => v.push(Violation::new(
            "schedule",
            "at least one segment is required",
        )),
        Some(s) if s.t_start != 0.0 => v.push(Violation::new(
            "schedule[0].t_start",
            format!("first segment must start at 0, got {}", s.t_start),
        )),
        _ => {}
    }
    for (i, w) in segments.windows(2).enumerate() {
        if !(w[1].t_start > w[0].t_start) {
            v.push(Violation::new(
                format!("schedule[{}].t_start", i + 1),
                format!(
                    "segment starts must strictly increase ({} after {})",
                    w[1].t_start, w[0].t_start
                ),
            ));
        }
    }
    v
}

/// Admissible sets `A`, `B`, `M`; reported in every metrics file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmissibleSets {
    pub a_set: GainBox,
    pub b_set: ManifoldBox,
    pub mu_set: Interval,
}

impl Default for AdmissibleSets {
    fn default() -> Self {
        Self {
            a_set: GainBox::default(),
            b_set: ManifoldBox::default(),
            mu_set: Interval::new(0.0, 1.0),
        }
    }
}

/// Initial state, given either as `{"r", "theta"}` or `{"x", "y"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialCondition {
    Polar(PolarInitial),
    Cartesian(CartesianInitial),
}

impl InitialCondition {
    pub fn polar(r: f64, theta: f64) -> Self {
        Self::Polar(PolarInitial { r, theta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarInitial {
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartesianInitial {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub u_min: f64,
    pub u_max: f64,
}

/// JSON form of a scenario. Omitted `bounds` means unbounded control;
/// omitted `adaptation` disables the identification loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial_conditions: Vec<InitialCondition>,
    pub a_nominal: ChiParams,
    pub schedule: Vec<Segment>,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub adaptation: Option<AdaptationConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sets: AdmissibleSets,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config serializes")
    }

    /// Reference configuration: `mu = 0.1`, `b = (4, 1.5)`, `a = (0.5, 1)`,
    /// bounds `[-2, 2]`, initial radii `{1, 2, 6, 8}` at `theta = 0`, `t_end = 100`.
    pub fn reference() -> Self {
        Self {
            initial_conditions: [1.0, 2.0, 6.0, 8.0]
                .into_iter()
                .map(|r| InitialCondition::polar(r, 0.0))
                .collect(),
            a_nominal: ChiParams::new(0.5, 1.0),
            schedule: vec![Segment {
                t_start: 0.0,
                b0: 4.0,
                b1: 1.5,
                mu: 0.1,
            }],
            bounds: Some(BoundsConfig {
                u_min: -2.0,
                u_max: 2.0,
            }),
            integrator: IntegratorConfig::default(),
            adaptation: None,
            seed: 0,
            sets: AdmissibleSets::default(),
        }
    }

    /// Reference configuration with the saturation removed.
    pub fn reference_unbounded() -> Self {
        Self {
            bounds: None,
            ..Self::reference()
        }
    }
}

/// Fully-resolved, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub initial_conditions: Vec<PolarState>,
    pub a_nominal: ChiParams,
    pub schedule: Schedule,
    pub bounds: ControlBounds,
    pub integrator: IntegratorConfig,
    pub adaptation: Option<AdaptationConfig>,
    pub seed: u64,
    pub sets: AdmissibleSets,
}

impl Scenario {
    pub fn to_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            initial_conditions: self
                .initial_conditions
                .iter()
                .map(|s| InitialCondition::polar(s.r, s.theta))
                .collect(),
            a_nominal: self.a_nominal,
            schedule: self.schedule.segments().to_vec(),
            bounds: (!self.bounds.is_unbounded()).then_some(BoundsConfig {
                u_min: self.bounds.u_min,
                u_max: self.bounds.u_max,
            }),
            integrator: self.integrator,
            adaptation: self.adaptation,
            seed: self.seed,
            sets: self.sets,
        }
    }
}

fn check_interval(iv: &Interval, path: &str, out: &mut Vec<Violation>) {
    if !iv.is_valid() {
        out.push(Violation::new(
            path,
            format!("invalid interval [{}, {}]", iv.lo, iv.hi),
        ));
    }
}

/// Resolve defaults and check every invariant, collecting all violations.
pub fn validate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    let mut v = Vec::new();
    let sets = cfg.sets;
    check_interval(&sets.a_set.a1, "sets.a_set.a1", &mut v);
    check_interval(&sets.a_set.a2, "sets.a_set.a2", &mut v);
    check_interval(&sets.b_set.b0, "sets.b_set.b0", &mut v);
    check_interval(&sets.b_set.b1, "sets.b_set.b1", &mut v);
    check_interval(&sets.mu_set, "sets.mu_set", &mut v);

    v.extend(cfg.integrator.check());
    let r_guard = cfg.integrator.r_guard;

    let mut initial = Vec::new();
    if cfg.initial_conditions.is_empty() {
        v.push(Violation::new(
            "initial_conditions",
            "at least one initial condition is required",
        ));
    }
    for (i, ic) in cfg.initial_conditions.iter().enumerate() {
        let path = format!("initial_conditions[{i}]");
        let state = match *ic {
            InitialCondition::Polar(p) => Ok(PolarState::new(p.r, p.theta)),
            InitialCondition::Cartesian(c) => cartesian_to_polar(CartesianState::new(c.x, c.y)),
        };
        match state {
            Ok(s) if s.r.is_finite() && s.theta.is_finite() && s.r > r_guard => initial.push(s),
            Ok(s) => v.push(Violation::new(
                path,
                format!(
                    "initial state (r = {}, theta = {}) must be finite with r > r_guard",
                    s.r, s.theta
                ),
            )),
            Err(e) => v.push(Violation::new(path, e.to_string())),
        }
    }

    v.extend(sets.a_set.check(&cfg.a_nominal, "a_nominal"));

    v.extend(check_segments_order(&cfg.schedule));
    for (i, seg) in cfg.schedule.iter().enumerate() {
        let path = format!("schedule[{i}]");
        v.extend(sets.b_set.check(&seg.manifold(), r_guard, &path));
        if !sets.mu_set.contains(seg.mu) {
            v.push(Violation::new(
                format!("{path}.mu"),
                format!(
                    "mu = {} outside [{}, {}]",
                    seg.mu, sets.mu_set.lo, sets.mu_set.hi
                ),
            ));
        }
    }

    let bounds = match cfg.bounds {
        None => ControlBounds::unbounded(),
        Some(b) => {
            let cb = ControlBounds {
                u_min: b.u_min,
                u_max: b.u_max,
            };
            if let Err(Error::Config(bv)) = cb.validate() {
                v.extend(bv);
            }
            cb
        }
    };

    if let Some(ad) = &cfg.adaptation {
        v.extend(ad.check());
    }

    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    Ok(Scenario {
        initial_conditions: initial,
        a_nominal: cfg.a_nominal,
        schedule: Schedule {
            segments: cfg.schedule.clone(),
        },
        bounds,
        integrator: cfg.integrator,
        adaptation: cfg.adaptation,
        seed: cfg.seed,
        sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn violations(cfg: &ScenarioConfig) -> Vec<Violation> {
        match validate_scenario(cfg) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn reference_is_valid() {
        let s = validate_scenario(&ScenarioConfig::reference()).unwrap();
        assert_eq!(s.initial_conditions.len(), 4);
        assert_eq!(s.bounds, ControlBounds::new(-2.0, 2.0).unwrap());
        let s = validate_scenario(&ScenarioConfig::reference_unbounded()).unwrap();
        assert!(s.bounds.is_unbounded());
    }

    #[test]
    fn origin_crossing_manifold_rejected() {
        let mut cfg = ScenarioConfig::reference();
        cfg.schedule[0].b0 = 1.0;
        let v = violations(&cfg);
        assert!(v
            .iter()
            .any(|x| x.message.contains("manifold crosses origin")));
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut cfg = ScenarioConfig::reference();
        cfg.bounds = Some(BoundsConfig {
            u_min: 3.0,
            u_max: -3.0,
        });
        let v = violations(&cfg);
        assert!(v.iter().any(|x| x.path == "bounds"));
    }

    #[test]
    fn all_violations_reported() {
        let mut cfg = ScenarioConfig::reference();
        cfg.schedule[0].b0 = 1.0;
        cfg.schedule[0].mu = 5.0;
        cfg.a_nominal.a2 = -1.0;
        cfg.integrator.h = 0.0;
        cfg.initial_conditions.clear();
        cfg.schedule.push(Segment {
            t_start: 0.0,
            b0: 4.0,
            b1: 1.0,
            mu: 0.1,
        });
        let paths: Vec<_> = violations(&cfg).into_iter().map(|x| x.path).collect();
        for p in [
            "schedule[0]",
            "schedule[0].mu",
            "a_nominal.a2",
            "integrator.h",
            "initial_conditions",
            "schedule[1].t_start",
        ] {
            assert!(paths.iter().any(|x| x == p), "missing {p} in {paths:?}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut json: serde_json::Value =
            serde_json::from_str(&ScenarioConfig::reference().to_json()).unwrap();
        json["integrator"]["hh"] = serde_json::json!(0.01);
        assert!(ScenarioConfig::from_json(&json.to_string()).is_err());
        let mut json: serde_json::Value =
            serde_json::from_str(&ScenarioConfig::reference().to_json()).unwrap();
        json["sede"] = serde_json::json!(3);
        assert!(ScenarioConfig::from_json(&json.to_string()).is_err());
        let mut json: serde_json::Value =
            serde_json::from_str(&ScenarioConfig::reference().to_json()).unwrap();
        json["initial_conditions"][0]["z"] = serde_json::json!(3);
        assert!(ScenarioConfig::from_json(&json.to_string()).is_err());
    }

    #[test]
    fn config_json_round_trip_and_defaults() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let minimal = r#"{
            "initial_conditions": [{"r": 1.0, "theta": 0.0}, {"x": 0.0, "y": -2.0}],
            "a_nominal": {"a1": 0.5, "a2": 1.0},
            "schedule": [{"t_start": 0.0, "b0": 4.0, "b1": 1.5, "mu": 0.1}]
        }"#;
        let s = validate_scenario(&ScenarioConfig::from_json(minimal).unwrap()).unwrap();
        assert!(s.bounds.is_unbounded());
        assert_eq!(s.integrator, IntegratorConfig::default());
        let ic = s.initial_conditions[1];
        assert!((ic.r - 2.0).abs() < 1e-15);
        assert!((ic.theta - 1.5 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn schedule_lookup() {
        let s = Schedule::new(vec![
            Segment {
                t_start: 0.0,
                b0: 4.0,
                b1: 1.5,
                mu: 0.1,
            },
            Segment {
                t_start: 50.0,
                b0: 4.0,
                b1: 3.0,
                mu: 0.1,
            },
        ])
        .unwrap();
        assert_eq!(s.segment_at(0.0).b1, 1.5);
        assert_eq!(s.segment_at(49.999).b1, 1.5);
        assert_eq!(s.segment_at(50.0).b1, 3.0);
        assert_eq!(s.segment_at(1e9).b1, 3.0);
        assert_eq!(s.breakpoints().collect::<Vec<_>>(), vec![50.0]);
        assert!(Schedule::new(vec![]).is_err());
    }
}
