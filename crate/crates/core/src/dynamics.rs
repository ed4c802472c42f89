//! Phase state and the open-loop forced Van der Pol field in polar coordinates.
//!
//! The plant is
//!
//! ```text
//! dr/dt     = mu r cos^2(theta) (1 - r^2 sin^2(theta)) + u cos(theta)
//! dtheta/dt = 1 - mu sin(theta) cos(theta) (1 - r^2 sin^2(theta)) - sin(theta) u / r
//! ```
//!
//! which is the polar form of `x' = -y + mu x (1 - y^2) + u`, `y' = x`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default abort radius; the angular equation has a `1/r` singularity at the origin.
pub const DEFAULT_R_GUARD: f64 = 1e-3;

/// Phase point. `theta` is kept unwrapped so winding is observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub theta: f64,
}

impl PolarState {
    pub const fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    /// Angle reduced to `[0, 2pi)`.
    pub fn theta_wrapped(&self) -> f64 {
        wrap_angle(self.theta)
    }

    pub fn to_cartesian(self) -> CartesianState {
        polar_to_cartesian(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub x: f64,
    pub y: f64,
}

impl CartesianState {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_valid(&self) -> bool {
        !self.lo.is_nan() && !self.hi.is_nan() && self.lo <= self.hi
    }
}

/// System parameter `mu` together with its admissible set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub mu: f64,
    pub mu_set: Interval,
}

impl SystemParams {
    pub fn new(mu: f64, mu_set: Interval) -> Result<Self> {
        if !mu_set.contains(mu) {
            return Err(Error::config(
                "mu",
                format!("mu = {mu} outside [{}, {}]", mu_set.lo, mu_set.hi),
            ));
        }
        Ok(Self { mu, mu_set })
    }
}

/// Saturation limits on the applied control. Either both finite or both infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlBounds {
    pub u_min: f64,
    pub u_max: f64,
}

impl ControlBounds {
    pub fn new(u_min: f64, u_max: f64) -> Result<Self> {
        let b = Self { u_min, u_max };
        b.validate()?;
        Ok(b)
    }

    pub const fn unbounded() -> Self {
        Self {
            u_min: f64::NEG_INFINITY,
            u_max: f64::INFINITY,
        }
    }

    pub fn symmetric(limit: f64) -> Result<Self> {
        Self::new(-limit, limit)
    }

    pub fn is_unbounded(&self) -> bool {
        self.u_min == f64::NEG_INFINITY && self.u_max == f64::INFINITY
    }

    pub fn contains(&self, u: f64) -> bool {
        self.u_min <= u && u <= self.u_max
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if self.u_min.is_nan() || self.u_max.is_nan() {
            v.push(crate::error::Violation::new("bounds", "NaN bound"));
        } else {
            if self.u_min > self.u_max {
                v.push(crate::error::Violation::new(
                    "bounds",
                    format!("u_min = {} exceeds u_max = {}", self.u_min, self.u_max),
                ));
            }
            if self.u_min.is_finite() != self.u_max.is_finite() {
                v.push(crate::error::Violation::new(
                    "bounds",
                    "u_min and u_max must be both finite or both infinite",
                ));
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Open-loop field `(dr/dt, dtheta/dt)` for a given control value.
pub fn vector_field_polar(state: PolarState, u: f64, mu: f64) -> Result<(f64, f64)> {
    let r = state.r;
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius { r });
    }
    let (s, c) = state.theta.sin_cos();
    let damping = 1.0 - r * r * s * s;
    let dr = mu * r * c * c * damping + u * c;
    let dtheta = 1.0 - mu * s * c * damping - s / r * u;
    Ok((dr, dtheta))
}

pub fn polar_to_cartesian(state: PolarState) -> CartesianState {
    let (s, c) = state.theta.sin_cos();
    CartesianState {
        x: state.r * c,
        y: state.r * s,
    }
}

/// Inverse of [`polar_to_cartesian`] with `theta` in `[0, 2pi)`.
pub fn cartesian_to_polar(p: CartesianState) -> Result<PolarState> {
    if p.x == 0.0 && p.y == 0.0 {
        return Err(Error::OriginUndefined);
    }
    Ok(PolarState {
        r: p.x.hypot(p.y),
        theta: wrap_angle(p.y.atan2(p.x)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn field_examples() {
        let (dr, dt) = vector_field_polar(PolarState::new(1.0, 0.0), 0.0, 0.1).unwrap();
        assert!(close(dr, 0.1, 1e-15) && dt == 1.0);

        let (dr, dt) = vector_field_polar(PolarState::new(1.0, FRAC_PI_2), 0.0, 0.1).unwrap();
        assert!(close(dr, 0.0, 1e-15) && close(dt, 1.0, 1e-15));

        // hand arithmetic: c = s = 1/sqrt2, c^2 = 1/2, damping = 1 - 4/2 = -1
        // dr = 0.1*2*0.5*(-1) + 1/sqrt2, dtheta = 1 + 0.1*0.5 - (1/sqrt2)/2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (dr, dt) = vector_field_polar(PolarState::new(2.0, FRAC_PI_4), 1.0, 0.1).unwrap();
        assert!(close(dr, -0.1 + h, 1e-14), "{dr}");
        assert!(close(dt, 1.05 - h / 2.0, 1e-14), "{dt}");
        assert!(close(dr, 0.60711, 1e-5) && close(dt, 0.69645, 1e-5));
    }

    #[test]
    fn field_rejects_non_positive_radius() {
        assert_eq!(
            vector_field_polar(PolarState::new(0.0, 0.3), 0.0, 0.1),
            Err(Error::NonPositiveRadius { r: 0.0 })
        );
        assert!(vector_field_polar(PolarState::new(-1.0, 0.3), 0.0, 0.1).is_err());
    }

    #[test]
    fn angular_rate_is_one_where_sine_vanishes() {
        for k in -3..=3 {
            let theta = k as f64 * PI;
            let s = PolarState::new(2.5, theta);
            // sin(k pi) is only ~1e-16 in floating point
            let (_, dt) = vector_field_polar(s, 7.0, 0.3).unwrap();
            assert!(close(dt, 1.0, 1e-13));
        }
        let (_, dt) = vector_field_polar(PolarState::new(2.5, 0.0), 7.0, 0.3).unwrap();
        assert_eq!(dt, 1.0);
    }

    #[test]
    fn conversions() {
        let p = polar_to_cartesian(PolarState::new(4.0, 0.0));
        assert_eq!((p.x, p.y), (4.0, 0.0));
        let p = polar_to_cartesian(PolarState::new(5.5, FRAC_PI_2));
        assert!(close(p.x, 0.0, 1e-15) && close(p.y, 5.5, 1e-15));
        let p = polar_to_cartesian(PolarState::new(1.0, PI));
        assert!(close(p.x, -1.0, 1e-15) && close(p.y, 0.0, 1e-15));

        let s = cartesian_to_polar(CartesianState::new(4.0, 0.0)).unwrap();
        assert_eq!((s.r, s.theta), (4.0, 0.0));
        let s = cartesian_to_polar(CartesianState::new(0.0, -2.0)).unwrap();
        assert!(close(s.r, 2.0, 1e-15) && close(s.theta, 3.0 * FRAC_PI_2, 1e-15));
        let s = cartesian_to_polar(CartesianState::new(1.0, 1.0)).unwrap();
        assert!(close(s.r, 2f64.sqrt(), 1e-15) && close(s.theta, FRAC_PI_4, 1e-15));

        assert_eq!(
            cartesian_to_polar(CartesianState::new(0.0, 0.0)),
            Err(Error::OriginUndefined)
        );
    }

    #[test]
    fn bounds_validation() {
        assert!(ControlBounds::new(-2.0, 2.0).is_ok());
        assert!(ControlBounds::new(2.0, -2.0).is_err());
        assert!(ControlBounds::new(-2.0, f64::INFINITY).is_err());
        assert!(ControlBounds::unbounded().validate().is_ok());
        assert!(SystemParams::new(0.1, Interval::new(0.0, 1.0)).is_ok());
        assert!(SystemParams::new(2.0, Interval::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        for x in [-1e-18, -TAU, 0.0, TAU, 7.0 * TAU + 0.5, -0.5] {
            let w = wrap_angle(x);
            assert!((0.0..TAU).contains(&w), "{x} -> {w}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn coordinate_round_trip(r in 1e-3f64..50.0, theta in -50.0f64..50.0) {
                let back = cartesian_to_polar(polar_to_cartesian(PolarState::new(r, theta))).unwrap();
                prop_assert!((back.r - r).abs() <= 1e-12 * r.max(1.0));
                let d = (back.theta - wrap_angle(theta)).abs();
                prop_assert!(d.min(TAU - d) <= 1e-12);
            }

            #[test]
            fn pure_rotation_without_forcing_or_damping(r in 1e-3f64..50.0, theta in -50.0f64..50.0) {
                let (dr, dt) = vector_field_polar(PolarState::new(r, theta), 0.0, 0.0).unwrap();
                prop_assert_eq!(dr, 0.0);
                prop_assert_eq!(dt, 1.0);
            }

            #[test]
            fn field_is_finite_above_guard(
                r in DEFAULT_R_GUARD..100.0, theta in -50.0f64..50.0,
                u in -1e3f64..1e3, mu in -5.0f64..5.0,
            ) {
                let (dr, dt) = vector_field_polar(PolarState::new(r, theta), u, mu).unwrap();
                prop_assert!(dr.is_finite() && dt.is_finite());
            }
        }
    }
}
