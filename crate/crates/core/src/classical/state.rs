//! Phase-space points and the three coordinate systems used for them.
//!
//! * `(q, p, phi, jz)`: the angle-action form of the classical Hamiltonian.
//!   Singular at both poles of the pseudospin sphere.
//! * `(q, p, Q1, P1)` with `Q1 = sqrt(2(j+jz)) sin(phi)`, `P1 = sqrt(2(j+jz)) cos(phi)`:
//!   canonical and smooth everywhere except the north pole.
//! * `(q, p, jx, jy, jz)`: Cartesian pseudospin with `|j| = j` as a Casimir.
//!   Smooth on the whole sphere; used for orbit integration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A point `(q, p, phi, jz)` of the classical phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: f64,
    pub p: f64,
    pub phi: f64,
    pub jz: f64,
}

/// The same point in the smooth canonical chart `(q, p, Q1, P1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPoint {
    pub q: f64,
    pub p: f64,
    pub q1: f64,
    pub p1: f64,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(phi: f64) -> f64 {
    let mut x = phi.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

impl ClassicalState {
    pub fn new(q: f64, p: f64, phi: f64, jz: f64) -> Self {
        Self { q, p, phi: wrap_angle(phi), jz }
    }

    pub fn to_canonical(&self, j: f64) -> CanonicalPoint {
        let rho = (2.0 * (j + self.jz)).max(0.0).sqrt();
        CanonicalPoint { q: self.q, p: self.p, q1: rho * self.phi.sin(), p1: rho * self.phi.cos() }
    }

    pub fn to_cartesian(&self, j: f64) -> [f64; 5] {
        let perp = (j * j - self.jz * self.jz).max(0.0).sqrt();
        [self.q, self.p, perp * self.phi.cos(), perp * self.phi.sin(), self.jz]
    }

    pub fn from_cartesian(y: &[f64; 5]) -> Self {
        Self::new(y[0], y[1], y[3].atan2(y[2]), y[4])
    }
}

impl CanonicalPoint {
    pub fn rho_sq(&self) -> f64 {
        self.q1 * self.q1 + self.p1 * self.p1
    }

    /// Back to `(q, p, phi, jz)`. At the south pole (`Q1 = P1 = 0`) the angle is
    /// undefined and reported as zero.
    pub fn to_state(&self, j: f64) -> ClassicalState {
        let jz = -j + 0.5 * self.rho_sq();
        ClassicalState::new(self.q, self.p, self.q1.atan2(self.p1), jz)
    }

    pub fn to_cartesian(&self, j: f64) -> [f64; 5] {
        let r2 = self.rho_sq();
        // |j_perp| = sqrt(j^2 - jz^2) = rho * sqrt(1 - rho^2/(4j)) * sqrt(j)
        let s = (1.0 - r2 / (4.0 * j)).max(0.0).sqrt() * j.sqrt();
        [self.q, self.p, s * self.p1, s * self.q1, -j + 0.5 * r2]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.q, self.p, self.q1, self.p1]
    }

    pub fn from_array(y: &[f64; 4]) -> Self {
        Self { q: y[0], p: y[1], q1: y[2], p1: y[3] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn chart_round_trip(q in -5.0..5.0f64, p in -5.0..5.0f64, phi in -3.1..3.1f64, x in -0.99..0.99f64) {
            let j = 40.0;
            let s = ClassicalState::new(q, p, phi, x * j);
            let back = s.to_canonical(j).to_state(j);
            prop_assert!((back.q - s.q).abs() < 1e-12);
            prop_assert!((back.jz - s.jz).abs() < 1e-12 * j);
            prop_assert!(wrap_angle(back.phi - s.phi).abs() < 1e-12);

            let c = s.to_canonical(j);
            prop_assert!((c.rho_sq() - 2.0 * (j + s.jz)).abs() < 1e-10);
            prop_assert!(c.rho_sq() <= 4.0 * j + 1e-12);

            let y = s.to_cartesian(j);
            let norm = (y[2] * y[2] + y[3] * y[3] + y[4] * y[4]).sqrt();
            prop_assert!((norm - j).abs() < 1e-12 * j);
            let yc = c.to_cartesian(j);
            for k in 0..5 {
                prop_assert!((y[k] - yc[k]).abs() < 1e-10);
            }
            let s2 = ClassicalState::from_cartesian(&y);
            prop_assert!(wrap_angle(s2.phi - s.phi).abs() < 1e-12);
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.5), 0.5);
    }
}
