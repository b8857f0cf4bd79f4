//! Finite-time maximal Lyapunov exponent from the tangent (variational) flow,
//! with periodic renormalization of the tangent vector.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::model::ModelParams;

use super::flow::{cartesian_jacobian, cartesian_rhs, hamiltonian_cartesian};
use super::integrator::{drift_scale, Dopri5, OrbitControls};
use super::state::ClassicalState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitClass {
    Regular,
    Chaotic,
    Undetermined,
}

impl OrbitClass {
    pub fn label(self) -> &'static str {
        match self {
            OrbitClass::Regular => "regular",
            OrbitClass::Chaotic => "chaotic",
            OrbitClass::Undetermined => "undetermined",
        }
    }
}

/// Horizon, renormalization and classification thresholds.
///
/// Classification uses the least-squares slope `s` of the accumulated
/// log-stretch over the second half of the horizon: chaotic if
/// `s > chaotic_threshold / T`, regular if `s < regular_threshold / T`.
/// For a regular orbit the tangent vector grows at most linearly, so the
/// slope decays like `1/T`, while a chaotic orbit keeps a constant slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovControls {
    pub t_end: f64,
    pub renorm_interval: f64,
    pub chaotic_threshold: f64,
    pub regular_threshold: f64,
    pub orbit: OrbitControls,
}

impl Default for LyapunovControls {
    fn default() -> Self {
        let mut orbit = OrbitControls::default();
        orbit.tol.rtol = 1e-12;
        orbit.tol.atol = 1e-12;
        Self { t_end: 1000.0, renorm_interval: 1.0, chaotic_threshold: 10.0, regular_threshold: 5.0, orbit }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// `ln(|v(T)| / |v(0)|) / T`
    pub lambda_max: f64,
    /// Late-time growth rate used for classification.
    pub late_slope: f64,
    pub horizon: f64,
    pub renormalizations: usize,
    pub max_drift: f64,
    pub classification: OrbitClass,
}

/// Tangent flow `v' = J(y) v` appended to the orbit.
fn extended_rhs(z: &[f64; 10], params: &ModelParams) -> [f64; 10] {
    let y = [z[0], z[1], z[2], z[3], z[4]];
    let f = cartesian_rhs(&y, params);
    let jac = cartesian_jacobian(&y, params);
    let mut out = [0.0; 10];
    out[..5].copy_from_slice(&f);
    for r in 0..5 {
        out[5 + r] = (0..5).map(|c| jac[r][c] * z[5 + c]).sum();
    }
    out
}

/// Initial tangent vector: a fixed direction projected onto the tangent plane
/// of the pseudospin sphere, so the conserved `j . v = 0` excludes the neutral
/// radial direction.
fn initial_tangent(y: &[f64; 5]) -> [f64; 5] {
    let mut v = [0.6, -0.3, 0.5, 0.4, -0.35];
    let n2 = y[2] * y[2] + y[3] * y[3] + y[4] * y[4];
    if n2 > 0.0 {
        let dot = (v[2] * y[2] + v[3] * y[3] + v[4] * y[4]) / n2;
        for k in 0..3 {
            v[2 + k] -= dot * y[2 + k];
        }
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

/// Benettin estimate of the maximal Lyapunov exponent of the orbit through `state0`.
pub fn lyapunov_max(state0: &ClassicalState, params: &ModelParams, controls: &LyapunovControls) -> Result<LyapunovEstimate> {
    let (t_end, dt) = (controls.t_end, controls.renorm_interval);
    if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
        return Err(invalid("renorm_interval", "need 0 < renorm_interval <= t_end"));
    }
    let y0 = state0.to_cartesian(params.j());
    let energy = hamiltonian_cartesian(&y0, params);
    let scale = drift_scale(params, energy);
    let v0 = initial_tangent(&y0);
    let mut z = [0.0; 10];
    z[..5].copy_from_slice(&y0);
    z[5..].copy_from_slice(&v0);
    let f = |z: &[f64; 10]| extended_rhs(z, params);
    let mut stepper = Dopri5::new(&f, 0.0, z, controls.orbit.tol);
    let mut log_stretch = 0.0;
    let mut history = Vec::with_capacity((t_end / dt) as usize + 1);
    let mut max_drift: f64 = 0.0;
    let mut k = 0usize;
    while stepper.t() < t_end {
        k += 1;
        let target = (k as f64 * dt).min(t_end);
        while stepper.t() < target {
            stepper.step(&f, target)?;
            let y = stepper.y();
            let h = hamiltonian_cartesian(&[y[0], y[1], y[2], y[3], y[4]], params);
            max_drift = max_drift.max((h - energy).abs() / scale);
        }
        let mut z = *stepper.y();
        let norm = z[5..].iter().map(|x| x * x).sum::<f64>().sqrt();
        log_stretch += norm.ln();
        for x in &mut z[5..] {
            *x /= norm;
        }
        stepper.reset_state(&f, z);
        history.push((stepper.t(), log_stretch));
    }
    let late: Vec<(f64, f64)> = history.iter().copied().filter(|(t, _)| *t >= 0.5 * t_end).collect();
    let late_slope = slope(&late);
    let flagged = max_drift > controls.orbit.drift_tol;
    let classification = if flagged || !late_slope.is_finite() {
        OrbitClass::Undetermined
    } else if late_slope > controls.chaotic_threshold / t_end {
        OrbitClass::Chaotic
    } else if late_slope < controls.regular_threshold / t_end {
        OrbitClass::Regular
    } else {
        OrbitClass::Undetermined
    };
    Ok(LyapunovEstimate {
        lambda_max: log_stretch / t_end,
        late_slope,
        horizon: t_end,
        renormalizations: history.len(),
        max_drift,
        classification,
    })
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

/// Lyapunov estimates for many initial conditions, in input order.
pub fn lyapunov_map(
    seeds: &[ClassicalState],
    params: &ModelParams,
    controls: &LyapunovControls,
    exec: Exec,
) -> Result<Vec<LyapunovEstimate>> {
    exec.map(seeds, |s| lyapunov_max(s, params, controls)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::flow::solve_q_on_shell;
    use crate::classical::section::{place_seeds, SeedPolicy};
    use crate::model::Model;

    fn dicke(ratio: f64) -> ModelParams {
        ModelParams::new(Model::Dicke, 1.0, 1.0, 0.0, 80, 0).unwrap().with_gamma_ratio(ratio)
    }

    #[test]
    fn tangent_jacobian_matches_finite_differences() {
        let p = dicke(1.7);
        let y = ClassicalState::new(1.2, -0.7, 0.4, 13.0).to_cartesian(40.0);
        let v = initial_tangent(&y);
        let mut z = [0.0; 10];
        z[..5].copy_from_slice(&y);
        z[5..].copy_from_slice(&v);
        let jv = &extended_rhs(&z, &p)[5..];
        let h = 1e-6;
        let shift = |s: f64| cartesian_rhs(&std::array::from_fn(|k| y[k] + s * v[k]), &p);
        let (a, b) = (shift(h), shift(-h));
        for k in 0..5 {
            assert!((jv[k] - (a[k] - b[k]) / (2.0 * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_coupling_is_regular() {
        let p = dicke(0.0);
        let est = lyapunov_max(&ClassicalState::new(2.0, 1.0, 0.3, -10.0), &p, &LyapunovControls::default()).unwrap();
        assert!(est.lambda_max.abs() < 0.02, "{est:?}");
        assert_eq!(est.classification, OrbitClass::Regular);
    }

    #[test]
    fn superradiant_generic_seed_is_chaotic() {
        let p = dicke(2.0);
        let e = -0.5 * 40.0;
        let q = solve_q_on_shell(&p, e, 0.0, 1.0).unwrap()[0];
        let est = lyapunov_max(&ClassicalState::new(q, 0.0, 1.0, 0.0), &p, &LyapunovControls::default()).unwrap();
        assert_eq!(est.classification, OrbitClass::Chaotic, "{est:?}");
        assert!(est.lambda_max > 0.02);
    }

    #[test]
    fn weak_coupling_seeds_are_regular() {
        let p = dicke(0.2);
        let seeds = place_seeds(&p, -0.5 * 40.0, &SeedPolicy::Grid { count: 4, grid: 40 }).unwrap();
        let est = lyapunov_map(&seeds, &p, &LyapunovControls::default(), Exec::Parallel).unwrap();
        for e in est {
            assert_eq!(e.classification, OrbitClass::Regular, "{e:?}");
        }
    }

    #[test]
    fn rejects_bad_interval() {
        let c = LyapunovControls { renorm_interval: 0.0, ..Default::default() };
        assert!(lyapunov_max(&ClassicalState::new(0.0, 0.0, 0.0, -1.0), &dicke(0.5), &c).is_err());
    }
}
