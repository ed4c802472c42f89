//! Backstepping synthesis of the terminal control law.
//!
//! With `v = r - g(theta)` the offset obeys `dv/dt = P(v, theta, u, mu)`, which is
//! affine in `u`. Setting `P = chi(v, theta, a)` and solving for `u` gives
//!
//! ```text
//!       chi - mu cos(theta) G1 G2 + g'
//! u = ---------------------------------,   G1 = 1 - r^2 sin^2(theta)
//!        cos(theta) + g' sin(theta) / r      G2 = r cos(theta) + g' sin(theta)
//! ```
//!
//! The damping term is the product `mu cos(theta) G1 G2`; a sum of those factors
//! does not cancel the drift and leaves an O(1) residual in `P - chi`.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::{vector_field_polar, ControlBounds, Interval, PolarState};
use crate::error::{Error, Result, Violation};
use crate::manifold::{Manifold, ManifoldParams};

/// Threshold on `|cos(theta) + g' sin(theta) / r|` below which the generic law is treated as singular.
pub const EPS_DEN: f64 = 1e-8;

/// Gains of the offset dynamics `chi = -a1 cos^2(theta) atan(a2 v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiParams {
    pub a1: f64,
    pub a2: f64,
}

impl ChiParams {
    pub const fn new(a1: f64, a2: f64) -> Self {
        Self { a1, a2 }
    }
}

/// Admissible box `A` for `(a1, a2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainBox {
    pub a1: Interval,
    pub a2: Interval,
}

impl Default for GainBox {
    fn default() -> Self {
        Self {
            a1: Interval::new(0.0, 2.0),
            a2: Interval::new(0.1, 5.0),
        }
    }
}

impl GainBox {
    pub fn contains(&self, a: &ChiParams) -> bool {
        self.a1.contains(a.a1) && self.a2.contains(a.a2)
    }

    pub fn check(&self, a: &ChiParams, path: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(a.a1 >= 0.0) {
            v.push(Violation::new(format!("{path}.a1"), "a1 must be >= 0"));
        }
        if !(a.a2 > 0.0) {
            v.push(Violation::new(format!("{path}.a2"), "a2 must be > 0"));
        }
        if !self.a1.contains(a.a1) {
            v.push(Violation::new(
                format!("{path}.a1"),
                format!("a1 = {} outside [{}, {}]", a.a1, self.a1.lo, self.a1.hi),
            ));
        }
        if !self.a2.contains(a.a2) {
            v.push(Violation::new(
                format!("{path}.a2"),
                format!("a2 = {} outside [{}, {}]", a.a2, self.a2.lo, self.a2.hi),
            ));
        }
        v
    }
}

/// Prescribed right-hand side of the offset dynamics.
///
/// Implementations must vanish on the manifold (`v = 0`) and oppose the
/// offset (`v * chi <= 0`); [`check_chi_contract`] tests both on a grid.
pub trait ChiFunction {
    fn evaluate(&self, v: f64, theta: f64, a: &ChiParams) -> f64;
}

/// `chi = -a1 cos^2(theta) atan(a2 v)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ArctanChi;

impl ChiFunction for ArctanChi {
    fn evaluate(&self, v: f64, theta: f64, a: &ChiParams) -> f64 {
        chi(v, theta, a)
    }
}

pub fn chi(v: f64, theta: f64, a: &ChiParams) -> f64 {
    let c = theta.cos();
    -a.a1 * c * c * (a.a2 * v).atan()
}

/// Registration-time check of a chi function against manifold invariance,
/// sign opposition and finiteness.
pub fn check_chi_contract<C: ChiFunction + ?Sized>(chi: &C, a: &ChiParams) -> Result<()> {
    const N: usize = 64;
    for i in 0..N {
        let theta = TAU * i as f64 / N as f64;
        let at_zero = chi.evaluate(0.0, theta, a);
        if at_zero != 0.0 {
            return Err(Error::ChiContract(format!(
                "chi(0, {theta}) = {at_zero}, manifold not invariant"
            )));
        }
        for j in 0..N {
            let v = -4.0 + 8.0 * j as f64 / (N - 1) as f64;
            let x = chi.evaluate(v, theta, a);
            if !x.is_finite() {
                return Err(Error::ChiContract(format!("chi({v}, {theta}) not finite")));
            }
            if v * x > 0.0 {
                return Err(Error::ChiContract(format!(
                    "chi({v}, {theta}) = {x} does not oppose the offset"
                )));
            }
        }
    }
    Ok(())
}

/// Control value before and after saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlEvaluation {
    pub u_raw: f64,
    pub u_applied: f64,
    pub clamped: bool,
    /// The generic denominator was below [`EPS_DEN`] at this state.
    pub near_singular: bool,
}

impl ControlEvaluation {
    fn unsaturated(u: f64, near_singular: bool) -> Self {
        Self {
            u_raw: u,
            u_applied: u,
            clamped: false,
            near_singular,
        }
    }

    pub fn saturate(self, bounds: &ControlBounds) -> Self {
        Self {
            near_singular: self.near_singular,
            ..saturate(self.u_raw, bounds)
        }
    }
}

pub fn saturate(u_raw: f64, bounds: &ControlBounds) -> ControlEvaluation {
    let u_applied = u_raw.clamp(bounds.u_min, bounds.u_max);
    ControlEvaluation {
        u_raw,
        u_applied,
        clamped: u_applied != u_raw,
        near_singular: false,
    }
}

/// `dv/dt` of the offset dynamics for control `u`.
pub fn transformed_field<M: Manifold + ?Sized>(
    v: f64,
    theta: f64,
    u: f64,
    mu: f64,
    m: &M,
) -> Result<f64> {
    let g = m.g(theta);
    let gp = m.dg_dtheta(theta);
    let r = v + g;
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius { r });
    }
    let (s, c) = theta.sin_cos();
    let damping = 1.0 - r * r * s * s;
    Ok(u * (c + gp * s / r) + mu * c * c * r * damping + mu * s * c * gp * damping - gp)
}

/// `cos(theta) + g'(theta) sin(theta) / r`, the coefficient of `u` in the offset dynamics.
pub fn control_denominator<M: Manifold + ?Sized>(state: PolarState, m: &M) -> f64 {
    let (s, c) = state.theta.sin_cos();
    c + m.dg_dtheta(state.theta) * s / state.r
}

fn generic_formula<M: Manifold + ?Sized, C: ChiFunction + ?Sized>(
    r: f64,
    theta: f64,
    a: &ChiParams,
    mu: f64,
    m: &M,
    chi: &C,
) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let gp = m.dg_dtheta(theta);
    let gamma1 = 1.0 - r * r * s * s;
    let gamma2 = r * c + s * gp;
    let num = chi.evaluate(r - m.g(theta), theta, a) - mu * c * gamma1 * gamma2 + gp;
    let den = c + gp * s / r;
    (num, den)
}

/// Unsaturated control from the generic law, using the manifold's cancelled
/// form (or a symmetric angle nudge) where the denominator vanishes.
pub fn control_generic<M: Manifold + ?Sized>(
    state: PolarState,
    a: &ChiParams,
    mu: f64,
    m: &M,
) -> Result<ControlEvaluation> {
    control_generic_impl(&ArctanChi, state, a, mu, m, true)
}

/// As [`control_generic`] with a caller-supplied chi. The manifold's cancelled
/// form assumes the arctan chi, so custom chi functions always take the nudge path.
pub fn control_generic_with<M: Manifold + ?Sized, C: ChiFunction + ?Sized>(
    chi: &C,
    state: PolarState,
    a: &ChiParams,
    mu: f64,
    m: &M,
) -> Result<ControlEvaluation> {
    control_generic_impl(chi, state, a, mu, m, false)
}

fn control_generic_impl<M: Manifold + ?Sized, C: ChiFunction + ?Sized>(
    chi: &C,
    state: PolarState,
    a: &ChiParams,
    mu: f64,
    m: &M,
    allow_cancelled: bool,
) -> Result<ControlEvaluation> {
    let r = state.r;
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius { r });
    }
    let (num, den) = generic_formula(r, state.theta, a, mu, m, chi);
    if den.abs() >= EPS_DEN {
        return Ok(ControlEvaluation::unsaturated(num / den, false));
    }
    if allow_cancelled {
        if let Some(u) = m.cancelled_control(state, a, mu) {
            return Ok(ControlEvaluation::unsaturated(u?, true));
        }
    }
    nudged(chi, state, a, mu, m, den).map(|u| ControlEvaluation::unsaturated(u, true))
}

// Average of the law evaluated at theta +/- delta, doubling delta until both
// sides clear EPS_DEN. A removable singularity gives nearly equal sides; a pole
// gives large values of opposite sign.
fn nudged<M: Manifold + ?Sized, C: ChiFunction + ?Sized>(
    chi: &C,
    state: PolarState,
    a: &ChiParams,
    mu: f64,
    m: &M,
    den0: f64,
) -> Result<f64> {
    let singular = || Error::SingularDenominator {
        theta: state.theta,
        denominator: den0,
    };
    let mut delta = EPS_DEN;
    for _ in 0..30 {
        let (np, dp) = generic_formula(state.r, state.theta + delta, a, mu, m, chi);
        let (nm, dm) = generic_formula(state.r, state.theta - delta, a, mu, m, chi);
        if dp.abs() >= EPS_DEN && dm.abs() >= EPS_DEN {
            let (up, um) = (np / dp, nm / dm);
            if (up - um).abs() <= 1e-6 * (1.0 + up.abs() + um.abs()) {
                return Ok(0.5 * (up + um));
            }
            return Err(singular());
        }
        delta *= 2.0;
    }
    Err(singular())
}

/// Control law for `g = b0 + b1 sin(theta)` with the common `cos(theta)` factor
/// divided out:
///
/// `u = r [b1 - a1 cos(theta) atan(a2 v) - mu cos(theta) G1 (r + b1 sin(theta))] / (r + b1 sin(theta))`.
///
/// Finite at `cos(theta) = 0`. The remaining denominator vanishes on the circle
/// `x^2 + (y + b1/2)^2 = (b1/2)^2`, where the level curves of `v` are tangent to
/// the control direction and the law has a genuine pole.
pub fn control_sinusoidal_cancelled(
    state: PolarState,
    a: &ChiParams,
    b: &ManifoldParams,
    mu: f64,
) -> Result<ControlEvaluation> {
    let r = state.r;
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius { r });
    }
    let (s, c) = state.theta.sin_cos();
    let d = r + b.b1 * s;
    if !(d > 0.0) {
        return Err(Error::DegenerateManifold { value: d });
    }
    let v = r - (b.b0 + b.b1 * s);
    let gamma1 = 1.0 - r * r * s * s;
    let u = r * (b.b1 - a.a1 * c * (a.a2 * v).atan() - mu * c * gamma1 * d) / d;
    let near_singular = (c * d / r).abs() < EPS_DEN;
    Ok(ControlEvaluation::unsaturated(u, near_singular))
}

/// Closed-loop field: cancelled control, saturation, then the open-loop plant.
pub fn closed_loop_field(
    state: PolarState,
    a: &ChiParams,
    b: &ManifoldParams,
    mu: f64,
    bounds: &ControlBounds,
) -> Result<(f64, f64, ControlEvaluation)> {
    let eval = control_sinusoidal_cancelled(state, a, b, mu)?.saturate(bounds);
    let (dr, dtheta) = vector_field_polar(state, eval.u_applied, mu)?;
    Ok((dr, dtheta, eval))
}

/// `P(v, theta, u(v, theta)) - chi(v, theta)` for the generic law; zero up to
/// rounding when the synthesis is consistent with the plant.
pub fn backstepping_residual<M: Manifold + ?Sized>(
    v: f64,
    theta: f64,
    a: &ChiParams,
    mu: f64,
    m: &M,
) -> Result<f64> {
    let r = v + m.g(theta);
    let u = control_generic(PolarState::new(r, theta), a, mu, m)?.u_raw;
    Ok(transformed_field(v, theta, u, mu, m)? - chi(v, theta, a))
}

/// Upper bound on `|chi|` for the given gains.
pub fn chi_bound(a: &ChiParams) -> f64 {
    a.a1 * FRAC_PI_2
}
