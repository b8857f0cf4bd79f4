//! Adaptive Dormand-Prince 5(4) integration with continuous (dense) output,
//! and orbit integration of the classical flow.

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::model::ModelParams;

use super::flow::{cartesian_rhs, hamiltonian_cartesian};
use super::state::ClassicalState;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Error-control settings for [`Dopri5`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on attempted steps per call site.
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-13, max_steps: 50_000_000 }
    }
}

/// Stepper for autonomous systems `y' = f(y)` in `N` dimensions.
///
/// Each call to [`Dopri5::step`] performs one accepted step and keeps the
/// coefficients of the fourth-order continuous extension over it.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    t: f64,
    y: [f64; N],
    h: f64,
    k1: [f64; N],
    fac_old: f64,
    tol: Tolerances,
    t_old: f64,
    y_old: [f64; N],
    h_done: f64,
    dense: [[f64; N]; 4],
    pub accepted: usize,
    pub rejected: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] += h * s;
    }
    out
}

impl<const N: usize> Dopri5<N> {
    pub fn new<F: Fn(&[f64; N]) -> [f64; N]>(f: &F, t0: f64, y0: [f64; N], tol: Tolerances) -> Self {
        let k1 = f(&y0);
        // Initial step from the first-derivative scale (the controller adapts quickly).
        let sc = |i: usize| tol.atol + tol.rtol * y0[i].abs();
        let d0 = (y0.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
        let d1 = (k1.iter().enumerate().map(|(i, v)| (v / sc(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        Self {
            t: t0,
            y: y0,
            h: h.min(1.0),
            k1,
            fac_old: 1e-4,
            tol,
            t_old: t0,
            y_old: y0,
            h_done: 0.0,
            dense: [[0.0; N]; 4],
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    /// Start of the last accepted step.
    pub fn t_prev(&self) -> f64 {
        self.t_old
    }

    pub fn y_prev(&self) -> &[f64; N] {
        &self.y_old
    }

    /// Replaces the current state, e.g. after renormalizing a tangent vector.
    pub fn reset_state<F: Fn(&[f64; N]) -> [f64; N]>(&mut self, f: &F, y: [f64; N]) {
        self.y = y;
        self.k1 = f(&y);
    }

    /// Single explicit step of size `h` from `(t, y)` without error control.
    /// Used to re-evaluate a state at an event time with full step accuracy.
    pub fn single_step<F: Fn(&[f64; N]) -> [f64; N]>(f: &F, y: &[f64; N], h: f64) -> [f64; N] {
        let k1 = f(y);
        Self::stages(f, y, &k1, h).0
    }

    fn stages<F: Fn(&[f64; N]) -> [f64; N]>(f: &F, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [[f64; N]; 6]) {
        let k2 = f(&axpy(y, h, &[(A21, k1)]));
        let k3 = f(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        (y1, [k2, k3, k4, k5, k6, [0.0; N]])
    }

    /// Advances by one accepted step, never beyond `t_limit`.
    pub fn step<F: Fn(&[f64; N]) -> [f64; N]>(&mut self, f: &F, t_limit: f64) -> Result<()> {
        const SAFE: f64 = 0.9;
        const BETA: f64 = 0.04;
        const EXPO1: f64 = 0.2 - BETA * 0.75;
        let mut last_reject = false;
        loop {
            if self.accepted + self.rejected >= self.tol.max_steps {
                return Err(ChaosError::StepUnderflow { time: self.t });
            }
            let mut h = self.h;
            let remaining = t_limit - self.t;
            if h >= remaining {
                h = remaining;
            }
            if !(h > 1e-14 * self.t.abs().max(1.0)) {
                return Err(ChaosError::StepUnderflow { time: self.t });
            }
            let (y1, ks) = Self::stages(f, &self.y, &self.k1, h);
            let [_, k3, k4, k5, k6, _] = ks;
            let k7 = f(&y1);
            let mut err = 0.0;
            for i in 0..N {
                let e = h * (E1 * self.k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = self.tol.atol + self.tol.rtol * self.y[i].abs().max(y1[i].abs());
                err += (e / sk).powi(2);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                self.h = 0.1 * h;
                self.rejected += 1;
                last_reject = true;
                continue;
            }
            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                let mut fac = fac11 / self.fac_old.powf(BETA);
                fac = (fac / SAFE).clamp(0.2, 10.0);
                let mut h_new = h / fac;
                if last_reject {
                    h_new = h_new.min(h);
                }
                self.fac_old = err.max(1e-4);
                let mut dense = [[0.0; N]; 4];
                for i in 0..N {
                    let ydiff = y1[i] - self.y[i];
                    let bspl = h * self.k1[i] - ydiff;
                    dense[0][i] = ydiff;
                    dense[1][i] = bspl;
                    dense[2][i] = ydiff - h * k7[i] - bspl;
                    dense[3][i] = h
                        * (D1 * self.k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                self.dense = dense;
                self.t_old = self.t;
                self.y_old = self.y;
                self.h_done = h;
                self.t = if h == remaining { t_limit } else { self.t + h };
                self.y = y1;
                self.k1 = k7;
                // A step clipped by t_limit says nothing about the natural step size.
                if h != remaining {
                    self.h = h_new;
                }
                self.accepted += 1;
                return Ok(());
            }
            self.h = h / (fac11 / SAFE).min(5.0);
            self.rejected += 1;
            last_reject = true;
        }
    }

    /// Continuous extension over the last accepted step, `t` in `[t_prev, t]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let theta = if self.h_done > 0.0 { (t - self.t_old) / self.h_done } else { 0.0 };
        let theta1 = 1.0 - theta;
        let mut out = self.y_old;
        for i in 0..N {
            out[i] += theta
                * (self.dense[0][i]
                    + theta1 * (self.dense[1][i] + theta * (self.dense[2][i] + theta1 * self.dense[3][i])));
        }
        out
    }
}

/// Orbit-integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitControls {
    pub tol: Tolerances,
    /// Output sampling interval; `None` records every accepted step.
    pub sample_dt: Option<f64>,
    /// Allowed `|H(t) - H(0)| / (H(0) - E_gs)` before an orbit is flagged.
    pub drift_tol: f64,
}

impl Default for OrbitControls {
    fn default() -> Self {
        Self { tol: Tolerances::default(), sample_dt: None, drift_tol: 1e-8 }
    }
}

/// Sampled orbit in Cartesian variables `(q, p, jx, jy, jz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 5]>,
    pub energy: f64,
    /// Largest relative energy deviation seen at any accepted step.
    pub max_drift: f64,
    /// Largest `|jz| / j` along the orbit.
    pub max_abs_jz: f64,
    /// Largest relative deviation of `|j|` from `j`.
    pub casimir_drift: f64,
    pub flagged: bool,
    pub steps: usize,
}

impl Trajectory {
    pub fn state(&self, i: usize) -> ClassicalState {
        ClassicalState::from_cartesian(&self.states[i])
    }
}

/// Relative-drift denominator `H(0) - E_gs`, floored so that orbits started
/// at the minimum itself are measured against a tiny absolute scale.
pub(crate) fn drift_scale(params: &ModelParams, energy: f64) -> f64 {
    (energy - params.ground_energy()).max(1e-12 * params.energy_scale())
}

/// Integrates the classical flow for `t_end` time units from `state0`.
///
/// Integration runs in Cartesian pseudospin variables, which are smooth on the
/// whole sphere; `|j|` and `H` are monitored rather than enforced.
pub fn integrate_orbit(state0: &ClassicalState, params: &ModelParams, t_end: f64, controls: &OrbitControls) -> Result<Trajectory> {
    integrate_cartesian(state0.to_cartesian(params.j()), params, t_end, controls)
}

pub fn integrate_cartesian(y0: [f64; 5], params: &ModelParams, t_end: f64, controls: &OrbitControls) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(crate::error::invalid("t_end", "must be positive and finite"));
    }
    let j = params.j();
    let f = |y: &[f64; 5]| cartesian_rhs(y, params);
    let energy = hamiltonian_cartesian(&y0, params);
    if !energy.is_finite() {
        return Err(crate::error::invalid("state0", "energy is not finite"));
    }
    let scale = drift_scale(params, energy);
    let mut out = Trajectory {
        times: vec![0.0],
        states: vec![y0],
        energy,
        max_drift: 0.0,
        max_abs_jz: y0[4].abs() / j,
        casimir_drift: 0.0,
        flagged: false,
        steps: 0,
    };
    let mut stepper = Dopri5::new(&f, 0.0, y0, controls.tol);
    let mut next_sample = controls.sample_dt.unwrap_or(0.0);
    while stepper.t() < t_end {
        stepper.step(&f, t_end)?;
        let y = stepper.y();
        let drift = (hamiltonian_cartesian(y, params) - energy).abs() / scale;
        out.max_drift = out.max_drift.max(drift);
        out.max_abs_jz = out.max_abs_jz.max(y[4].abs() / j);
        let norm = (y[2] * y[2] + y[3] * y[3] + y[4] * y[4]).sqrt();
        out.casimir_drift = out.casimir_drift.max((norm - j).abs() / j);
        match controls.sample_dt {
            None => {
                out.times.push(stepper.t());
                out.states.push(*y);
            }
            Some(dt) => {
                while next_sample <= stepper.t() + 1e-12 * dt && next_sample <= t_end {
                    let ys = if (next_sample - stepper.t()).abs() <= 1e-12 * dt { *y } else { stepper.interpolate(next_sample) };
                    if next_sample > 0.0 {
                        out.times.push(next_sample);
                        out.states.push(ys);
                    }
                    next_sample += dt;
                }
            }
        }
    }
    out.steps = stepper.accepted;
    out.flagged = out.max_drift > controls.drift_tol;
    if out.flagged {
        log::warn!("orbit flagged: relative energy drift {:.3e}", out.max_drift);
    }
    Ok(out)
}
