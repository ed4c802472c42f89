//! Terminal manifolds `{ r = g(theta) }`.

use serde::{Deserialize, Serialize};

use crate::control::ChiParams;
use crate::dynamics::{CartesianState, Interval, PolarState, DEFAULT_R_GUARD};
use crate::error::{Error, Result, Violation};

/// A closed star-shaped curve `r = g(theta)`, 2pi-periodic in `theta`.
pub trait Manifold {
    fn g(&self, theta: f64) -> f64;

    fn dg_dtheta(&self, theta: f64) -> f64;

    /// Unsaturated control with the common `cos(theta)` factor removed analytically,
    /// for manifolds whose generic control law has a removable singularity.
    /// `None` means the generic evaluator has to fall back to nudging.
    fn cancelled_control(
        &self,
        _state: PolarState,
        _a: &ChiParams,
        _mu: f64,
    ) -> Option<Result<f64>> {
        None
    }
}

/// Offset and amplitude of the sinusoidal family `g = b0 + b1 sin(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldParams {
    pub b0: f64,
    pub b1: f64,
}

impl ManifoldParams {
    pub const fn new(b0: f64, b1: f64) -> Self {
        Self { b0, b1 }
    }

    /// Smallest radius of the curve.
    pub fn min_radius(&self) -> f64 {
        self.b0 - self.b1.abs()
    }

    pub fn g(&self, theta: f64) -> f64 {
        g_sinusoidal(theta, self)
    }

    pub fn dg_dtheta(&self, theta: f64) -> f64 {
        dg_dtheta_sinusoidal(theta, self)
    }
}

/// Admissible box `B` for `(b0, b1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldBox {
    pub b0: Interval,
    pub b1: Interval,
}

impl Default for ManifoldBox {
    fn default() -> Self {
        Self {
            b0: Interval::new(2.0, 8.0),
            b1: Interval::new(-2.0, 2.0),
        }
    }
}

impl ManifoldBox {
    pub fn contains(&self, b: &ManifoldParams) -> bool {
        self.b0.contains(b.b0) && self.b1.contains(b.b1)
    }

    /// Every violated constraint on `b`, each tagged with `path`.
    pub fn check(&self, b: &ManifoldParams, r_guard: f64, path: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        if !b.b0.is_finite() || !b.b1.is_finite() {
            v.push(Violation::new(path, "non-finite manifold parameter"));
            return v;
        }
        if b.min_radius() <= r_guard {
            v.push(Violation::new(
                path,
                format!(
                    "manifold crosses origin: b0 - |b1| = {} <= r_guard = {r_guard}",
                    b.min_radius()
                ),
            ));
        }
        if !self.b0.contains(b.b0) {
            v.push(Violation::new(
                format!("{path}.b0"),
                format!("b0 = {} outside [{}, {}]", b.b0, self.b0.lo, self.b0.hi),
            ));
        }
        if !self.b1.contains(b.b1) {
            v.push(Violation::new(
                format!("{path}.b1"),
                format!("b1 = {} outside [{}, {}]", b.b1, self.b1.lo, self.b1.hi),
            ));
        }
        v
    }
}

/// The sinusoidal terminal manifold used by every shipped scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoidal {
    pub params: ManifoldParams,
}

impl Sinusoidal {
    /// Fails when the curve comes within `DEFAULT_R_GUARD` of the origin.
    pub fn new(params: ManifoldParams) -> Result<Self> {
        if !(params.min_radius() > DEFAULT_R_GUARD) {
            return Err(Error::config(
                "manifold",
                format!(
                    "manifold crosses origin: b0 - |b1| = {}",
                    params.min_radius()
                ),
            ));
        }
        Ok(Self { params })
    }
}

impl Manifold for Sinusoidal {
    fn g(&self, theta: f64) -> f64 {
        g_sinusoidal(theta, &self.params)
    }

    fn dg_dtheta(&self, theta: f64) -> f64 {
        dg_dtheta_sinusoidal(theta, &self.params)
    }

    fn cancelled_control(&self, state: PolarState, a: &ChiParams, mu: f64) -> Option<Result<f64>> {
        Some(
            crate::control::control_sinusoidal_cancelled(state, a, &self.params, mu)
                .map(|e| e.u_raw),
        )
    }
}

pub fn g_sinusoidal(theta: f64, b: &ManifoldParams) -> f64 {
    b.b0 + b.b1 * theta.sin()
}

pub fn dg_dtheta_sinusoidal(theta: f64, b: &ManifoldParams) -> f64 {
    b.b1 * theta.cos()
}

/// Radial offset from the manifold, `v = r - g(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetState {
    pub v: f64,
    pub theta: f64,
}

pub fn offset(state: PolarState, b: &ManifoldParams) -> OffsetState {
    OffsetState {
        v: state.r - g_sinusoidal(state.theta, b),
        theta: state.theta,
    }
}

pub fn offset_on<M: Manifold + ?Sized>(state: PolarState, m: &M) -> OffsetState {
    OffsetState {
        v: state.r - m.g(state.theta),
        theta: state.theta,
    }
}

/// Inverse of [`offset`].
pub fn add_back(o: OffsetState, b: &ManifoldParams) -> PolarState {
    PolarState {
        r: o.v + g_sinusoidal(o.theta, b),
        theta: o.theta,
    }
}

/// `(x^2 + y^2 - b1 y)^2 - b0^2 (x^2 + y^2)`, which vanishes on the sinusoidal
/// manifold. Factoring gives `r^2 v (v + 2 b0)`, so the residual grows linearly
/// with the offset near the curve.
pub fn implicit_cartesian_residual(p: CartesianState, b: &ManifoldParams) -> f64 {
    let rho2 = p.x * p.x + p.y * p.y;
    let q = rho2 - b.b1 * p.y;
    q * q - b.b0 * b.b0 * rho2
}

/// Sample `n` points of the closed curve over one revolution (first point repeated at the end).
pub fn sample_curve<M: Manifold + ?Sized>(m: &M, n: usize) -> Vec<PolarState> {
    (0..=n)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / n as f64;
            PolarState::new(m.g(theta), theta)
        })
        .collect()
}

/// Check the contract every registered manifold must satisfy on a grid of `n` angles:
/// periodicity, derivative consistency and clearance from the origin.
pub fn check_manifold_contract<M: Manifold + ?Sized>(m: &M, n: usize, r_guard: f64) -> Result<()> {
    use std::f64::consts::TAU;
    const FD_STEP: f64 = 1e-5;
    let mut v = Vec::new();
    for i in 0..n {
        let theta = TAU * i as f64 / n as f64;
        let g = m.g(theta);
        let gp = m.g(theta + TAU);
        if (g - gp).abs() > 1e-12 * g.abs().max(1.0) {
            v.push(Violation::new(
                "manifold.g",
                format!("not 2pi-periodic at theta = {theta}: {g} vs {gp}"),
            ));
        }
        let fd = (m.g(theta + FD_STEP) - m.g(theta - FD_STEP)) / (2.0 * FD_STEP);
        if (fd - m.dg_dtheta(theta)).abs() > 1e-6 {
            v.push(Violation::new(
                "manifold.dg_dtheta",
                format!("derivative mismatch at theta = {theta}"),
            ));
        }
        if !(g > r_guard) {
            v.push(Violation::new(
                "manifold.g",
                format!("g({theta}) = {g} not above guard radius"),
            ));
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::polar_to_cartesian;
    use std::f64::consts::{FRAC_PI_2, TAU};

    const REF: ManifoldParams = ManifoldParams::new(4.0, 1.5);

    #[test]
    fn g_examples() {
        assert_eq!(g_sinusoidal(0.0, &REF), 4.0);
        assert_eq!(g_sinusoidal(FRAC_PI_2, &REF), 5.5);
        assert!((g_sinusoidal(TAU + 0.3, &REF) - g_sinusoidal(0.3, &REF)).abs() < 1e-14);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(dg_dtheta_sinusoidal(0.0, &REF), 1.5);
        assert!(dg_dtheta_sinusoidal(FRAC_PI_2, &REF).abs() < 1e-15);
        let h = 1e-5;
        let fd = (g_sinusoidal(1.1 + h, &REF) - g_sinusoidal(1.1 - h, &REF)) / (2.0 * h);
        assert!((fd - dg_dtheta_sinusoidal(1.1, &REF)).abs() < 1e-6);
    }

    #[test]
    fn offset_examples() {
        assert_eq!(offset(PolarState::new(4.0, 0.0), &REF).v, 0.0);
        assert!((offset(PolarState::new(6.0, FRAC_PI_2), &REF).v - 0.5).abs() < 1e-15);
        assert!((offset(PolarState::new(1.0, 3.0 * FRAC_PI_2), &REF).v + 1.5).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        assert_eq!(
            implicit_cartesian_residual(CartesianState::new(4.0, 0.0), &REF),
            0.0
        );
        assert_eq!(
            implicit_cartesian_residual(CartesianState::new(0.0, 5.5), &REF),
            0.0
        );
        assert_eq!(
            implicit_cartesian_residual(CartesianState::new(1.0, 0.0), &REF),
            -15.0
        );
    }

    #[test]
    fn residual_vanishes_along_curve() {
        let m = Sinusoidal::new(REF).unwrap();
        let scale = REF.b0.powi(4);
        for p in sample_curve(&m, 720) {
            let res = implicit_cartesian_residual(polar_to_cartesian(p), &REF);
            assert!(res.abs() / scale < 1e-9, "{res}");
        }
    }

    #[test]
    fn contract_holds_for_sinusoidal() {
        for b in [
            REF,
            ManifoldParams::new(4.0, 1.0),
            ManifoldParams::new(2.0, -1.9),
        ] {
            check_manifold_contract(&Sinusoidal::new(b).unwrap(), 512, DEFAULT_R_GUARD).unwrap();
        }
    }

    #[test]
    fn rejects_origin_crossing() {
        assert!(Sinusoidal::new(ManifoldParams::new(1.0, 1.5)).is_err());
        assert!(Sinusoidal::new(ManifoldParams::new(1.5, 1.5)).is_err());
        let v = ManifoldBox::default().check(&ManifoldParams::new(1.0, 1.5), DEFAULT_R_GUARD, "b");
        assert!(v.iter().any(|x| x.message.contains("crosses origin")));
        assert!(v.iter().any(|x| x.path == "b.b0"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn offset_round_trip(r in 0.01f64..20.0, theta in -20.0f64..20.0,
                                 b0 in 2.0f64..8.0, b1 in -2.0f64..2.0) {
                let b = ManifoldParams::new(b0, b1);
                let s = PolarState::new(r, theta);
                let back = add_back(offset(s, &b), &b);
                prop_assert!((back.r - r).abs() <= 1e-15 * r.max(b0 + b1.abs()) * 4.0);
                prop_assert_eq!(back.theta, theta);
            }

            #[test]
            fn residual_factorisation(v in -2.0f64..2.0, theta in 0.0f64..TAU,
                                      b0 in 2.0f64..8.0, b1 in -2.0f64..2.0) {
                let b = ManifoldParams::new(b0, b1);
                let r = v + b.g(theta);
                prop_assume!(r > 0.1);
                let res = implicit_cartesian_residual(polar_to_cartesian(PolarState::new(r, theta)), &b);
                let factored = r * r * v * (v + 2.0 * b0);
                prop_assert!((res - factored).abs() <= 1e-9 * b0.powi(4));
            }
        }
    }
}
