//! Classical Hamiltonian and its flow in the three charts.

use crate::error::{ChaosError, Result};
use crate::model::ModelParams;

use super::state::{CanonicalPoint, ClassicalState};

/// Coupling prefactors of the Cartesian form
/// `H = w0 jz + (w/2)(q^2+p^2) + a q jx - b p jy` with
/// `a = (1+delta) gamma/sqrt(j)`, `b = (1-delta) gamma/sqrt(j)`.
fn cartesian_couplings(params: &ModelParams) -> (f64, f64) {
    let g = params.gamma / params.j().sqrt();
    let d = params.delta();
    ((1.0 + d) * g, (1.0 - d) * g)
}

/// Classical energy of `(q, p, phi, jz)`.
pub fn hamiltonian_value(state: &ClassicalState, params: &ModelParams) -> f64 {
    let j = params.j();
    let d = params.delta();
    let f = (1.0 - (state.jz / j).powi(2)).max(0.0).sqrt();
    let (s, c) = state.phi.sin_cos();
    params.omega0 * state.jz
        + 0.5 * params.omega * (state.q * state.q + state.p * state.p)
        + params.gamma * j.sqrt() * f * ((1.0 + d) * state.q * c - (1.0 - d) * state.p * s)
}

/// Classical energy in the canonical chart `(q, p, Q1, P1)`.
pub fn hamiltonian_canonical(point: &CanonicalPoint, params: &ModelParams) -> f64 {
    let j = params.j();
    let d = params.delta();
    let r2 = point.rho_sq();
    let s = (1.0 - r2 / (4.0 * j)).max(0.0).sqrt();
    -params.omega0 * j
        + 0.5 * params.omega0 * r2
        + 0.5 * params.omega * (point.q * point.q + point.p * point.p)
        + params.gamma * s * ((1.0 + d) * point.q * point.p1 - (1.0 - d) * point.p * point.q1)
}

/// Classical energy from Cartesian pseudospin components `(q, p, jx, jy, jz)`.
pub fn hamiltonian_cartesian(y: &[f64; 5], params: &ModelParams) -> f64 {
    let (a, b) = cartesian_couplings(params);
    params.omega0 * y[4] + 0.5 * params.omega * (y[0] * y[0] + y[1] * y[1]) + a * y[0] * y[2]
        - b * y[1] * y[3]
}

/// Time derivatives `(dq, dp, dphi, djz)` in the angle-action chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub dq: f64,
    pub dp: f64,
    pub dphi: f64,
    pub djz: f64,
}

/// Hamilton's equations in the `(phi, jz)` chart. Rejects the poles, where
/// `dphi/dt` is singular.
pub fn eom_rhs(state: &ClassicalState, params: &ModelParams) -> Result<StateDerivative> {
    let j = params.j();
    let x = state.jz / j;
    if !(x.abs() < 1.0) {
        return Err(ChaosError::ChartSingularity);
    }
    let d = params.delta();
    let f = (1.0 - x * x).sqrt();
    let (s, c) = state.phi.sin_cos();
    let g = params.gamma;
    let sj = j.sqrt();
    Ok(StateDerivative {
        dq: params.omega * state.p - (1.0 - d) * g * sj * f * s,
        dp: -params.omega * state.q - (1.0 + d) * g * sj * f * c,
        dphi: params.omega0
            - g * state.jz / (j * sj * f) * ((1.0 + d) * state.q * c - (1.0 - d) * state.p * s),
        djz: g * sj * f * ((1.0 + d) * state.q * s + (1.0 - d) * state.p * c),
    })
}

/// Canonical flow `(dq, dp, dQ1, dP1)` of the `(q, p, Q1, P1)` Hamiltonian.
pub fn canonical_rhs(y: &[f64; 4], params: &ModelParams) -> [f64; 4] {
    let [q, p, q1, p1] = *y;
    let j = params.j();
    let d = params.delta();
    let g = params.gamma;
    let s = (1.0 - (q1 * q1 + p1 * p1) / (4.0 * j)).max(f64::MIN_POSITIVE).sqrt();
    let u = (1.0 + d) * q * p1 - (1.0 - d) * p * q1;
    let dh_dq = params.omega * q + g * s * (1.0 + d) * p1;
    let dh_dp = params.omega * p - g * s * (1.0 - d) * q1;
    let dh_dq1 = params.omega0 * q1 + g * (-q1 / (4.0 * j * s) * u - s * (1.0 - d) * p);
    let dh_dp1 = params.omega0 * p1 + g * (-p1 / (4.0 * j * s) * u + s * (1.0 + d) * q);
    [dh_dp, -dh_dq, dh_dp1, -dh_dq1]
}

/// Flow in Cartesian pseudospin variables: `dq = dH/dp`, `dp = -dH/dq`,
/// `dj/dt = grad_j H x j`.
pub fn cartesian_rhs(y: &[f64; 5], params: &ModelParams) -> [f64; 5] {
    let (a, b) = cartesian_couplings(params);
    let (w, w0) = (params.omega, params.omega0);
    let [q, p, jx, jy, jz] = *y;
    [
        w * p - b * jy,
        -w * q - a * jx,
        -b * p * jz - w0 * jy,
        w0 * jx - a * q * jz,
        a * q * jy + b * p * jx,
    ]
}

/// Jacobian of [`cartesian_rhs`], row-major.
pub fn cartesian_jacobian(y: &[f64; 5], params: &ModelParams) -> [[f64; 5]; 5] {
    let (a, b) = cartesian_couplings(params);
    let (w, w0) = (params.omega, params.omega0);
    let [q, p, jx, jy, jz] = *y;
    [
        [0.0, w, 0.0, -b, 0.0],
        [-w, 0.0, -a, 0.0, 0.0],
        [0.0, -b * jz, 0.0, -w0, -b * p],
        [-a * jz, 0.0, w0, 0.0, -a * q],
        [a * jy, b * jx, b * p, a * q, 0.0],
    ]
}

/// Real roots `q` of `H(q, p=0, phi, jz) = E`, sorted descending.
pub fn solve_q_on_shell(params: &ModelParams, energy: f64, jz: f64, phi: f64) -> Result<Vec<f64>> {
    let j = params.j();
    if jz.abs() > j {
        return Err(crate::error::invalid("jz", format!("|jz| = {} exceeds j = {j}", jz.abs())));
    }
    let c = (1.0 + params.delta())
        * params.gamma
        * j.sqrt()
        * (1.0 - (jz / j).powi(2)).max(0.0).sqrt()
        * phi.cos();
    let a = 0.5 * params.omega;
    let k = params.omega0 * jz - energy;
    let disc = c * c - 4.0 * a * k;
    if disc < 0.0 {
        return Ok(Vec::new());
    }
    if disc == 0.0 {
        return Ok(vec![-c / (2.0 * a)]);
    }
    // Stable form: one root from the quadratic formula, the other from Vieta.
    let sq = disc.sqrt();
    let t = -0.5 * (c + c.signum() * sq);
    let (r1, r2) = if t == 0.0 {
        (sq / (2.0 * a), -sq / (2.0 * a))
    } else {
        (t / a, k / t)
    };
    Ok(if r1 >= r2 { vec![r1, r2] } else { vec![r2, r1] })
}
