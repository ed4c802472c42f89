//! Model-identification adaptive control.
//!
//! At each epoch the loop senses the state, identifies `mu` from recent
//! history, takes the commanded manifold parameters as the identified `b`,
//! and rescales the gain `a1` so the unsaturated control law stays within
//! `[u_min, u_max]` over a band of offsets around the manifold.
//!
//! The control is affine in `a1` at every point, so the feasible gain scales
//! form an interval containing zero whenever zero is feasible; the largest one
//! is found by bisection.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::control::{control_sinusoidal_cancelled, ChiParams, GainBox};
use crate::dynamics::{ControlBounds, PolarState};
use crate::error::{Error, Result, Violation};
use crate::integrator::Sample;
use crate::manifold::ManifoldParams;

/// Minimum number of usable regression samples for `mu` identification.
pub const MIN_ID_SAMPLES: usize = 10;
/// Bisection tolerance on the gain scale.
pub const SCALE_TOL: f64 = 1e-3;
const FALLBACK_SCAN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptationConfig {
    /// Time between adaptation invocations.
    pub epoch_period: f64,
    /// Number of most recent samples used for identification.
    pub id_window: usize,
    /// Half-width of the offset band searched for worst-case control.
    pub v_max: f64,
    /// Grid resolution per axis of the theta x v search.
    pub grid_n: usize,
    /// Standard deviation of the additive sensor noise.
    pub sigma: f64,
    /// Regressor values smaller than this are dropped from identification.
    pub phi_min: f64,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        Self {
            epoch_period: 5.0,
            id_window: 200,
            v_max: 0.5,
            grid_n: 128,
            sigma: 0.0,
            phi_min: 0.1,
        }
    }
}

impl AdaptationConfig {
    pub fn check(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut positive = |name: &str, ok: bool| {
            if !ok {
                v.push(Violation::new(
                    format!("adaptation.{name}"),
                    "must be positive",
                ));
            }
        };
        positive(
            "epoch_period",
            self.epoch_period > 0.0 && self.epoch_period.is_finite(),
        );
        positive("id_window", self.id_window > 0);
        positive("v_max", self.v_max > 0.0 && self.v_max.is_finite());
        positive("phi_min", self.phi_min > 0.0);
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            v.push(Violation::new("adaptation.sigma", "must be >= 0"));
        }
        if self.grid_n < 64 {
            v.push(Violation::new("adaptation.grid_n", "must be >= 64"));
        }
        v
    }

    pub fn region(&self) -> Region {
        Region {
            grid_n: self.grid_n,
            v_max: self.v_max,
        }
    }
}

/// The theta x v grid over which the control's extremes are searched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub grid_n: usize,
    pub v_max: f64,
}

/// One sensed row used for identification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub u: f64,
}

impl From<&Sample> for Measurement {
    fn from(s: &Sample) -> Self {
        Self {
            t: s.t,
            r: s.r,
            theta: s.theta,
            u: s.u_applied,
        }
    }
}

/// Sensed state and identified parameters for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateBundle {
    pub r_hat: f64,
    pub theta_hat: f64,
    pub b_tilde: ManifoldParams,
    pub mu_tilde: Option<f64>,
}

/// `r cos^2(theta) (1 - r^2 sin^2(theta))`, the coefficient of `mu` in `dr/dt`.
pub fn mu_regressor(r: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    r * c * c * (1.0 - r * r * s * s)
}

/// Least-squares `mu` from `dr/dt - u cos(theta) = mu * phi`, with `dr/dt`
/// taken by central differences and samples with `|phi| < phi_min` dropped.
pub fn identify_mu(window: &[Measurement], phi_min: f64) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut usable = 0;
    for w in window.windows(3) {
        let (prev, cur, next) = (&w[0], &w[1], &w[2]);
        let dt = next.t - prev.t;
        if !(dt > 0.0) {
            continue;
        }
        let phi = mu_regressor(cur.r, cur.theta);
        if !(phi.abs() >= phi_min) {
            continue;
        }
        let dr = (next.r - prev.r) / dt;
        let y = dr - cur.u * cur.theta.cos();
        num += phi * y;
        den += phi * phi;
        usable += 1;
    }
    if usable < MIN_ID_SAMPLES {
        return Err(Error::InsufficientExcitation {
            usable,
            required: MIN_ID_SAMPLES,
        });
    }
    Ok(num / den)
}

/// Minimum and maximum of the unsaturated control over
/// `theta in [0, 2pi) x v in [-v_max, v_max]`, evaluated at `r = v + g(theta)`.
pub fn worst_case_control(
    a: &ChiParams,
    b: &ManifoldParams,
    mu: f64,
    region: &Region,
) -> Result<(f64, f64)> {
    let n = region.grid_n.max(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let theta = TAU * i as f64 / n as f64;
        let g = b.g(theta);
        for j in 0..n {
            let v = -region.v_max + 2.0 * region.v_max * j as f64 / (n - 1) as f64;
            let r = v + g;
            if !(r > 0.0) {
                return Err(Error::DegenerateManifold { value: r });
            }
            let u = control_sinusoidal_cancelled(PolarState::new(r, theta), a, b, mu)?.u_raw;
            lo = lo.min(u);
            hi = hi.max(u);
        }
    }
    Ok((lo, hi))
}

/// Outcome of a successful gain adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainAdjustment {
    /// Largest feasible scale of the nominal `a1`.
    pub scale: f64,
    pub a: ChiParams,
    /// Certified control range of the adjusted law.
    pub u_lo: f64,
    pub u_hi: f64,
    /// The monotonicity spot-check failed and an exhaustive scan was used.
    pub used_scan: bool,
}

/// Largest `s in [0, 1]` (within [`SCALE_TOL`]) such that `a1 = s * a1_nominal`
/// keeps the worst-case control inside `bounds`; `a2` is left unchanged.
pub fn adjust_gain(
    a_nominal: &ChiParams,
    b_tilde: &ManifoldParams,
    mu_tilde: f64,
    bounds: &ControlBounds,
    region: &Region,
    a_set: &GainBox,
) -> Result<GainAdjustment> {
    let scaled = |s: f64| ChiParams::new(s * a_nominal.a1, a_nominal.a2);
    let range = |s: f64| worst_case_control(&scaled(s), b_tilde, mu_tilde, region);
    let feasible = |s: f64| -> Result<bool> {
        let (lo, hi) = range(s)?;
        Ok(bounds.contains(lo) && bounds.contains(hi))
    };

    let mut used_scan = false;
    let scale = if feasible(1.0)? {
        1.0
    } else {
        let (lo0, hi0) = range(0.0)?;
        if !(bounds.contains(lo0) && bounds.contains(hi0)) {
            return Err(Error::Infeasible {
                u_lo: lo0,
                u_hi: hi0,
            });
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > SCALE_TOL / 2.0 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // convexity of the feasible set guarantees this; check anyway
        let mut monotone = true;
        for k in 0..16 {
            if !feasible(lo * k as f64 / 16.0)? {
                monotone = false;
                break;
            }
        }
        if monotone {
            lo
        } else {
            used_scan = true;
            let mut best = 0.0;
            for k in (0..FALLBACK_SCAN).rev() {
                let s = k as f64 / (FALLBACK_SCAN - 1) as f64;
                if feasible(s)? {
                    best = s;
                    break;
                }
            }
            best
        }
    };

    let a = scaled(scale);
    if !a_set.contains(&a) {
        return Err(Error::AdmissibleSetViolation { a1: a.a1, a2: a.a2 });
    }
    let (u_lo, u_hi) = range(scale)?;
    Ok(GainAdjustment {
        scale,
        a,
        u_lo,
        u_hi,
        used_scan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EpochStatus {
    Adjusted {
        scale: f64,
        u_lo: f64,
        u_hi: f64,
        used_scan: bool,
    },
    Skipped {
        reason: String,
    },
    Infeasible {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub t: f64,
    pub estimates: EstimateBundle,
    /// Actual `mu` in force, for judging identification error.
    pub mu_true: f64,
    pub a_current: ChiParams,
    #[serde(flatten)]
    pub status: EpochStatus,
}

/// Gain state carried across epochs. `a_current = a_nominal + delta_a` and
/// stays inside the admissible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationState {
    pub a_nominal: ChiParams,
    pub delta_a: ChiParams,
    pub a_current: ChiParams,
    pub epoch_log: Vec<EpochRecord>,
}

impl AdaptationState {
    pub fn new(a_nominal: ChiParams) -> Self {
        Self {
            a_nominal,
            delta_a: ChiParams::new(0.0, 0.0),
            a_current: a_nominal,
            epoch_log: Vec::new(),
        }
    }
}

fn noisy<R: Rng + ?Sized>(x: f64, noise: Option<&Normal<f64>>, rng: &mut R) -> f64 {
    match noise {
        Some(n) => x + n.sample(rng),
        None => x,
    }
}

/// One adaptation epoch. Failures (no excitation, infeasible bounds) are
/// logged and leave the gains unchanged.
#[allow(clippy::too_many_arguments)]
pub fn miac_step<R: Rng + ?Sized>(
    t: f64,
    truth: PolarState,
    history: &[Sample],
    schedule_truth: (ManifoldParams, f64),
    state: &AdaptationState,
    cfg: &AdaptationConfig,
    bounds: &ControlBounds,
    a_set: &GainBox,
    rng: &mut R,
) -> AdaptationState {
    let noise = (cfg.sigma > 0.0).then(|| Normal::new(0.0, cfg.sigma).expect("sigma is finite"));
    let noise = noise.as_ref();
    let (b_cmd, mu_true) = schedule_truth;

    let r_hat = noisy(truth.r, noise, rng);
    let theta_hat = noisy(truth.theta, noise, rng);
    let b_tilde = ManifoldParams::new(noisy(b_cmd.b0, noise, rng), noisy(b_cmd.b1, noise, rng));

    let start = history.len().saturating_sub(cfg.id_window);
    let window: Vec<Measurement> = history[start..]
        .iter()
        .map(|s| Measurement {
            r: noisy(s.r, noise, rng),
            theta: noisy(s.theta, noise, rng),
            ..Measurement::from(s)
        })
        .collect();

    let mut next = state.clone();
    let mu_id = identify_mu(&window, cfg.phi_min);
    let estimates = EstimateBundle {
        r_hat,
        theta_hat,
        b_tilde,
        mu_tilde: mu_id.as_ref().ok().copied(),
    };
    let status = match mu_id {
        Err(e) => EpochStatus::Skipped {
            reason: e.to_string(),
        },
        Ok(mu_tilde) => match adjust_gain(
            &state.a_nominal,
            &b_tilde,
            mu_tilde,
            bounds,
            &cfg.region(),
            a_set,
        ) {
            Ok(adj) => {
                next.a_current = adj.a;
                next.delta_a =
                    ChiParams::new(adj.a.a1 - state.a_nominal.a1, adj.a.a2 - state.a_nominal.a2);
                EpochStatus::Adjusted {
                    scale: adj.scale,
                    u_lo: adj.u_lo,
                    u_hi: adj.u_hi,
                    used_scan: adj.used_scan,
                }
            }
            Err(e) => EpochStatus::Infeasible {
                reason: e.to_string(),
            },
        },
    };
    next.epoch_log.push(EpochRecord {
        t,
        estimates,
        mu_true,
        a_current: next.a_current,
        status,
    });
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const REF_B: ManifoldParams = ManifoldParams::new(4.0, 1.5);
    const REF_A: ChiParams = ChiParams::new(0.5, 1.0);

    fn region() -> Region {
        AdaptationConfig::default().region()
    }

    /// Exhaustive grid oracle written out independently of the cancelled form.
    fn brute_extremes(
        a: &ChiParams,
        b: &ManifoldParams,
        mu: f64,
        n: usize,
        v_max: f64,
    ) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let th = 2.0 * PI * i as f64 / n as f64;
            for j in 0..n {
                let v = -v_max + 2.0 * v_max * j as f64 / (n - 1) as f64;
                let r = v + b.b0 + b.b1 * th.sin();
                let (s, c) = th.sin_cos();
                let gp = b.b1 * c;
                let num = -a.a1 * c * c * (a.a2 * v).atan()
                    - mu * c * (1.0 - r * r * s * s) * (r * c + s * gp)
                    + gp;
                let den = c + gp * s / r;
                let u = if den.abs() > 1e-9 {
                    num / den
                } else {
                    r * b.b1 / (r + b.b1 * s)
                };
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        (lo, hi)
    }

    #[test]
    fn worst_case_matches_brute_force() {
        let a0 = ChiParams::new(0.0, 1.0);
        let (lo, hi) = worst_case_control(&a0, &REF_B, 0.0, &region()).unwrap();
        let (blo, bhi) = brute_extremes(&a0, &REF_B, 0.0, 128, 0.5);
        assert!(
            (lo - blo).abs() < 1e-9 && (hi - bhi).abs() < 1e-9,
            "{lo} {hi} vs {blo} {bhi}"
        );
        let (lo, hi) = worst_case_control(&REF_A, &REF_B, 0.1, &region()).unwrap();
        let (blo, bhi) = brute_extremes(&REF_A, &REF_B, 0.1, 128, 0.5);
        assert!((lo - blo).abs() < 1e-9 && (hi - bhi).abs() < 1e-9);
    }

    #[test]
    fn worst_case_widens_with_band() {
        let mut prev = worst_case_control(
            &REF_A,
            &REF_B,
            0.1,
            &Region {
                grid_n: 129,
                v_max: 0.1,
            },
        )
        .unwrap();
        for v_max in [0.2, 0.4, 0.8] {
            // extremes sit on the band edges, so a wider band extends the range
            let cur =
                worst_case_control(&REF_A, &REF_B, 0.1, &Region { grid_n: 129, v_max }).unwrap();
            assert!(cur.0 <= prev.0 + 1e-12 && cur.1 >= prev.1 - 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn worst_case_grid_refinement_is_stable() {
        let r128 = worst_case_control(
            &REF_A,
            &REF_B,
            0.1,
            &Region {
                grid_n: 128,
                v_max: 0.5,
            },
        )
        .unwrap();
        let r256 = worst_case_control(
            &REF_A,
            &REF_B,
            0.1,
            &Region {
                grid_n: 256,
                v_max: 0.5,
            },
        )
        .unwrap();
        assert!((r128.0 - r256.0).abs() < 1e-3, "{r128:?} {r256:?}");
        assert!((r128.1 - r256.1).abs() < 1e-3, "{r128:?} {r256:?}");
    }

    #[test]
    fn band_reaching_the_pole_circle_is_degenerate() {
        // at theta = 3pi/2 the band reaches r = 1.5 = -b1 sin(theta) once v_max >= 1
        let e = worst_case_control(
            &REF_A,
            &REF_B,
            0.1,
            &Region {
                grid_n: 128,
                v_max: 2.0,
            },
        );
        assert!(matches!(e, Err(Error::DegenerateManifold { .. })));
    }

    #[test]
    fn unbounded_needs_no_adjustment() {
        let adj = adjust_gain(
            &REF_A,
            &REF_B,
            0.1,
            &ControlBounds::unbounded(),
            &region(),
            &GainBox::default(),
        )
        .unwrap();
        assert_eq!(adj.scale, 1.0);
        assert_eq!(adj.a, REF_A);
    }

    #[test]
    fn reference_manifold_is_infeasible_for_unit_two_bounds() {
        // on the manifold at theta = 3pi/2 the gain term vanishes and u = 2.5 * 1.5 / 1 = 3.75
        let e = adjust_gain(
            &REF_A,
            &REF_B,
            0.1,
            &ControlBounds::symmetric(2.0).unwrap(),
            &region(),
            &GainBox::default(),
        );
        match e {
            Err(Error::Infeasible { u_hi, .. }) => assert!(u_hi >= 3.75),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bisection_postcondition() {
        let b = ManifoldParams::new(4.0, 1.0);
        let a_nom = ChiParams::new(2.0, 1.0);
        let s0 = worst_case_control(&ChiParams::new(0.0, 1.0), &b, 0.0, &region()).unwrap();
        let s1 = worst_case_control(&a_nom, &b, 0.0, &region()).unwrap();
        // with mu = 0 the gain only widens the range; bounds strictly between the gain-free and full-gain ranges
        let bounds = ControlBounds::new(
            0.5 * (s0.0 + s1.0).min(s0.0 - 1e-3),
            0.5 * (s0.1 + s1.1).max(s0.1 + 1e-3),
        )
        .unwrap();
        let adj = adjust_gain(&a_nom, &b, 0.0, &bounds, &region(), &GainBox::default()).unwrap();
        assert!(adj.scale > 0.0 && adj.scale < 1.0, "{adj:?}");
        assert!(!adj.used_scan);
        let feasible = |s: f64| {
            let (lo, hi) = brute_extremes(&ChiParams::new(s * 2.0, 1.0), &b, 0.0, 128, 0.5);
            bounds.contains(lo) && bounds.contains(hi)
        };
        assert!(feasible(adj.scale));
        assert!(!feasible((adj.scale + SCALE_TOL).min(1.0)));
        assert!(bounds.contains(adj.u_lo) && bounds.contains(adj.u_hi));
        assert!((adj.a.a1 - adj.scale * 2.0).abs() < 1e-15);
        assert_eq!(adj.a.a2, 1.0);
    }

    #[test]
    fn admissible_set_enforced() {
        let b = ManifoldParams::new(4.0, 1.0);
        let a_nom = ChiParams::new(2.0, 1.0);
        let s0 = worst_case_control(&ChiParams::new(0.0, 1.0), &b, 0.0, &region()).unwrap();
        let bounds = ControlBounds::new(s0.0 - 1e-3, s0.1 + 1e-3).unwrap();
        let mut set = GainBox::default();
        set.a1.lo = 1.0;
        assert!(matches!(
            adjust_gain(&a_nom, &b, 0.0, &bounds, &region(), &set),
            Err(Error::AdmissibleSetViolation { .. })
        ));
    }

    /// Exact pure rotation, the trajectory for `mu = 0` and `u = 0`.
    fn rotation_window(n: usize, dt: f64, r: f64) -> Vec<Measurement> {
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                Measurement {
                    t,
                    r,
                    theta: t,
                    u: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn identify_zero_signal() {
        let mu = identify_mu(&rotation_window(200, 0.05, 4.0), 0.1).unwrap();
        assert!(mu.abs() < 1e-9);
    }

    #[test]
    fn identify_rejects_unexcited_window() {
        let w: Vec<_> = (0..200)
            .map(|i| Measurement {
                t: i as f64 * 0.001,
                r: 4.0,
                theta: PI / 2.0 + i as f64 * 1e-6,
                u: 0.0,
            })
            .collect();
        assert!(matches!(
            identify_mu(&w, 0.1),
            Err(Error::InsufficientExcitation { .. })
        ));
        assert!(matches!(
            identify_mu(&w[..5], 0.1),
            Err(Error::InsufficientExcitation { .. })
        ));
    }

    #[test]
    fn identify_open_loop_van_der_pol() {
        use crate::dynamics::vector_field_polar;
        use crate::integrator::rk4_step;
        let mu = 0.1;
        let mut s = PolarState::new(2.0, 0.0);
        let mut w = vec![];
        let h = 0.005;
        for i in 0..2000 {
            if i % 10 == 0 {
                w.push(Measurement {
                    t: i as f64 * h,
                    r: s.r,
                    theta: s.theta,
                    u: 0.0,
                });
            }
            s = rk4_step(|x| vector_field_polar(x, 0.0, mu), s, h).unwrap();
        }
        let est = identify_mu(&w, 0.1).unwrap();
        assert!((est - mu).abs() < 1e-3, "{est}");
    }

    fn sample_history(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.05;
                Sample {
                    t,
                    r: 4.0,
                    theta: t,
                    x: 0.0,
                    y: 0.0,
                    v: 0.0,
                    u_raw: 0.0,
                    u_applied: 0.0,
                    clamped: false,
                    b0: 4.0,
                    b1: 0.0,
                    mu: 0.0,
                    a1: 0.5,
                    a2: 1.0,
                }
            })
            .collect()
    }

    #[test]
    fn miac_fixed_point_without_change() {
        let cfg = AdaptationConfig::default();
        let state = AdaptationState::new(REF_A);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = ManifoldParams::new(4.0, 0.0);
        let bounds = ControlBounds::symmetric(10.0).unwrap();
        let hist = sample_history(300);
        let s1 = miac_step(
            5.0,
            PolarState::new(4.0, 1.0),
            &hist,
            (b, 0.0),
            &state,
            &cfg,
            &bounds,
            &GainBox::default(),
            &mut rng,
        );
        let s2 = miac_step(
            10.0,
            PolarState::new(4.0, 1.0),
            &hist,
            (b, 0.0),
            &s1,
            &cfg,
            &bounds,
            &GainBox::default(),
            &mut rng,
        );
        assert_eq!(s1.a_current, REF_A);
        assert_eq!(s2.a_current, s1.a_current);
        assert_eq!(s2.delta_a, s1.delta_a);
        assert_eq!(s2.epoch_log.len(), 2);
        assert!(
            matches!(s2.epoch_log[1].status, EpochStatus::Adjusted { scale, .. } if scale == 1.0)
        );
    }

    #[test]
    fn miac_skips_without_excitation() {
        let cfg = AdaptationConfig::default();
        let mut state = AdaptationState::new(REF_A);
        state.a_current = ChiParams::new(0.3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = miac_step(
            5.0,
            PolarState::new(4.0, 1.0),
            &sample_history(4),
            (REF_B, 0.1),
            &state,
            &cfg,
            &ControlBounds::unbounded(),
            &GainBox::default(),
            &mut rng,
        );
        assert_eq!(next.a_current, state.a_current);
        assert!(matches!(
            next.epoch_log[0].status,
            EpochStatus::Skipped { .. }
        ));
        assert_eq!(next.epoch_log[0].estimates.mu_tilde, None);
    }

    #[test]
    fn noiseless_sensing_is_exact() {
        let cfg = AdaptationConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = PolarState::new(4.2, 0.7);
        let next = miac_step(
            5.0,
            truth,
            &sample_history(300),
            (REF_B, 0.1),
            &AdaptationState::new(REF_A),
            &cfg,
            &ControlBounds::unbounded(),
            &GainBox::default(),
            &mut rng,
        );
        let est = next.epoch_log[0].estimates;
        assert_eq!((est.r_hat, est.theta_hat), (truth.r, truth.theta));
        assert_eq!(est.b_tilde, REF_B);
    }

    #[test]
    fn config_checks() {
        assert!(AdaptationConfig::default().check().is_empty());
        let bad = AdaptationConfig {
            grid_n: 32,
            sigma: -1.0,
            ..Default::default()
        };
        assert_eq!(bad.check().len(), 2);
    }
}
