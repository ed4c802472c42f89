//! Randomized self-checks of the control law and its building blocks.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{
    backstepping_residual, check_chi_contract, control_denominator, control_generic,
    control_sinusoidal_cancelled, transformed_field, ArctanChi, ChiParams, GainBox,
};
use crate::dynamics::{
    cartesian_to_polar, polar_to_cartesian, vector_field_polar, Interval, PolarState,
    DEFAULT_R_GUARD,
};
use crate::manifold::{
    check_manifold_contract, implicit_cartesian_residual, ManifoldBox, ManifoldParams, Sinusoidal,
};

/// Denominator magnitude below which a state counts as near-singular here.
pub const DEN_MARGIN: f64 = 0.05;
pub const RESIDUAL_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<24} samples={:<6} max_error={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.max_error,
            self.tolerance
        )?;
        if self.failures > 0 {
            write!(f, " failures={}", self.failures)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Default)]
struct Acc {
    samples: usize,
    failures: usize,
    max_error: f64,
}

impl Acc {
    /// A NaN error counts as a failure.
    fn add(&mut self, err: f64, tol: f64) {
        self.samples += 1;
        if !(err <= tol) {
            self.failures += 1;
        }
        if err.is_nan() {
            self.max_error = f64::NAN;
        } else if !self.max_error.is_nan() {
            self.max_error = self.max_error.max(err);
        }
    }

    fn fail(&mut self) {
        self.samples += 1;
        self.failures += 1;
    }

    fn finish(self, name: &str, tolerance: f64) -> Check {
        Check {
            name: name.to_string(),
            samples: self.samples,
            failures: self.failures,
            max_error: self.max_error,
            tolerance,
            passed: self.failures == 0 && self.samples > 0,
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, i: Interval) -> f64 {
    if i.lo == i.hi {
        i.lo
    } else {
        rng.random_range(i.lo..i.hi)
    }
}

/// Random `(v, theta, a, b, mu)` with `a` in `A`, `b` in `B` and `mu` in `[0.01, 0.3]`.
pub struct Draw {
    pub v: f64,
    pub theta: f64,
    pub a: ChiParams,
    pub b: ManifoldParams,
    pub mu: f64,
}

pub fn draw<R: Rng>(rng: &mut R, a_set: &GainBox, b_set: &ManifoldBox) -> Draw {
    Draw {
        v: rng.random_range(-2.0..2.0),
        theta: rng.random_range(0.0..TAU),
        a: ChiParams::new(uniform(rng, a_set.a1), uniform(rng, a_set.a2)),
        b: ManifoldParams::new(uniform(rng, b_set.b0), uniform(rng, b_set.b1)),
        mu: rng.random_range(0.01..0.3),
    }
}

fn backstepping(rng: &mut ChaCha8Rng, n: usize) -> Check {
    let (a_set, b_set) = (GainBox::default(), ManifoldBox::default());
    let mut acc = Acc::default();
    while acc.samples < n {
        let d = draw(rng, &a_set, &b_set);
        let m = Sinusoidal { params: d.b };
        let r = d.v + d.b.g(d.theta);
        if r <= DEFAULT_R_GUARD
            || control_denominator(PolarState::new(r, d.theta), &m).abs() < DEN_MARGIN
        {
            continue;
        }
        match backstepping_residual(d.v, d.theta, &d.a, d.mu, &m) {
            Ok(res) => acc.add(res.abs(), RESIDUAL_TOL),
            Err(_) => acc.fail(),
        }
    }
    acc.finish("backstepping_residual", RESIDUAL_TOL)
}

fn chain_rule(rng: &mut ChaCha8Rng, n: usize) -> Check {
    const TOL: f64 = 1e-12;
    let (a_set, b_set) = (GainBox::default(), ManifoldBox::default());
    let mut acc = Acc::default();
    while acc.samples < n {
        let d = draw(rng, &a_set, &b_set);
        let m = Sinusoidal { params: d.b };
        let r = d.v + d.b.g(d.theta);
        if r <= DEFAULT_R_GUARD {
            continue;
        }
        let u = rng.random_range(-10.0..10.0);
        let direct = transformed_field(d.v, d.theta, u, d.mu, &m);
        let via = vector_field_polar(PolarState::new(r, d.theta), u, d.mu)
            .map(|(dr, dt)| dr - d.b.dg_dtheta(d.theta) * dt);
        match (direct, via) {
            (Ok(x), Ok(y)) => acc.add((x - y).abs() / (1.0 + y.abs()), TOL),
            _ => acc.fail(),
        }
    }
    acc.finish("chain_rule", TOL)
}

fn cancelled_form(rng: &mut ChaCha8Rng, n: usize) -> Check {
    let (a_set, b_set) = (GainBox::default(), ManifoldBox::default());
    let mut acc = Acc::default();
    while acc.samples < n {
        let d = draw(rng, &a_set, &b_set);
        let m = Sinusoidal { params: d.b };
        let r = d.v + d.b.g(d.theta);
        let state = PolarState::new(r, d.theta);
        if r <= DEFAULT_R_GUARD
            || r + d.b.b1 * d.theta.sin() <= 0.0
            || control_denominator(state, &m).abs() < DEN_MARGIN
        {
            continue;
        }
        let c = control_sinusoidal_cancelled(state, &d.a, &d.b, d.mu).map(|e| e.u_raw);
        let g = control_generic(state, &d.a, d.mu, &m).map(|e| e.u_raw);
        match (c, g) {
            (Ok(c), Ok(g)) => acc.add((c - g).abs() / (1.0 + g.abs()), RESIDUAL_TOL),
            _ => acc.fail(),
        }
    }
    // where the generic denominator vanishes
    for theta in [FRAC_PI_2, 3.0 * FRAC_PI_2] {
        let b = ManifoldParams::new(4.0, 1.5);
        let u = control_sinusoidal_cancelled(
            PolarState::new(b.g(theta) + 0.3, theta),
            &ChiParams::new(0.5, 1.0),
            &b,
            0.1,
        );
        match u.map(|e| e.u_raw) {
            Ok(u) if u.is_finite() => acc.add(0.0, RESIDUAL_TOL),
            _ => acc.fail(),
        }
    }
    acc.finish("cancelled_vs_generic", RESIDUAL_TOL)
}

fn chi_contract(rng: &mut ChaCha8Rng, n: usize) -> Check {
    let a_set = GainBox::default();
    let mut acc = Acc::default();
    for _ in 0..n {
        let a = ChiParams::new(uniform(rng, a_set.a1), uniform(rng, a_set.a2));
        match check_chi_contract(&ArctanChi, &a) {
            Ok(()) => acc.add(0.0, 0.0),
            Err(_) => acc.fail(),
        }
    }
    acc.finish("chi_contract", 0.0)
}

fn manifold_contract(rng: &mut ChaCha8Rng, n: usize) -> Check {
    let b_set = ManifoldBox::default();
    let mut acc = Acc::default();
    while acc.samples < n {
        let b = ManifoldParams::new(uniform(rng, b_set.b0), uniform(rng, b_set.b1));
        let Ok(m) = Sinusoidal::new(b) else { continue };
        match check_manifold_contract(&m, 256, DEFAULT_R_GUARD) {
            Ok(()) => acc.add(0.0, 0.0),
            Err(_) => acc.fail(),
        }
    }
    acc.finish("manifold_contract", 0.0)
}

fn implicit_identity(rng: &mut ChaCha8Rng, n: usize) -> Check {
    const TOL: f64 = 1e-10;
    let (a_set, b_set) = (GainBox::default(), ManifoldBox::default());
    let mut acc = Acc::default();
    while acc.samples < n {
        let d = draw(rng, &a_set, &b_set);
        let r = d.v + d.b.g(d.theta);
        if r <= DEFAULT_R_GUARD {
            continue;
        }
        let f = implicit_cartesian_residual(polar_to_cartesian(PolarState::new(r, d.theta)), &d.b);
        let factored = r * r * d.v * (d.v + 2.0 * d.b.b0);
        let scale = 1.0 + r.powi(4) + d.b.b0.powi(4);
        acc.add((f - factored).abs() / scale, TOL);
    }
    acc.finish("implicit_identity", TOL)
}

fn round_trip(rng: &mut ChaCha8Rng, n: usize) -> Check {
    const TOL: f64 = 1e-12;
    let mut acc = Acc::default();
    for _ in 0..n {
        let s = PolarState::new(
            rng.random_range(DEFAULT_R_GUARD..50.0),
            rng.random_range(0.0..TAU),
        );
        match cartesian_to_polar(polar_to_cartesian(s)) {
            Ok(p) => {
                let dt = (p.theta - s.theta).abs();
                acc.add(
                    ((p.r - s.r).abs() / s.r.max(1.0)).max(dt.min(TAU - dt)),
                    TOL,
                );
            }
            Err(_) => acc.fail(),
        }
    }
    acc.finish("coordinate_round_trip", TOL)
}

fn gain_affinity(rng: &mut ChaCha8Rng, n: usize) -> Check {
    const TOL: f64 = 1e-9;
    let (a_set, b_set) = (GainBox::default(), ManifoldBox::default());
    let mut acc = Acc::default();
    while acc.samples < n {
        let d = draw(rng, &a_set, &b_set);
        let r = d.v + d.b.g(d.theta);
        let s = PolarState::new(r, d.theta);
        if r <= DEFAULT_R_GUARD || r + d.b.b1 * d.theta.sin() < DEN_MARGIN {
            continue;
        }
        let u = |a1: f64| {
            control_sinusoidal_cancelled(s, &ChiParams::new(a1, d.a.a2), &d.b, d.mu)
                .map(|e| e.u_raw)
        };
        match (u(0.0), u(1.0), u(d.a.a1)) {
            (Ok(u0), Ok(u1), Ok(ua)) => {
                let lin = u0 + d.a.a1 * (u1 - u0);
                acc.add((ua - lin).abs() / (1.0 + ua.abs()), TOL);
            }
            _ => acc.fail(),
        }
    }
    acc.finish("gain_affinity", TOL)
}

/// Runs every suite with `n` random draws each.
pub fn run_verify(seed: u64, n: usize) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_small = (n / 100).max(10);
    VerifyReport {
        seed,
        checks: vec![
            backstepping(&mut rng, n),
            chain_rule(&mut rng, n),
            cancelled_form(&mut rng, n),
            chi_contract(&mut rng, n_small),
            manifold_contract(&mut rng, n_small),
            implicit_identity(&mut rng, n),
            round_trip(&mut rng, n),
            gain_affinity(&mut rng, n),
        ],
    }
}
