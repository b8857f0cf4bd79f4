//! Poincaré sections on the surface `p = 0`, keeping the crossings on the
//! larger-`q` branch and projecting them to the polar plane `(1 + jz/j, phi)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ChaosError, Result};
use crate::exec::Exec;
use crate::model::ModelParams;

use super::flow::{cartesian_rhs, hamiltonian_cartesian, solve_q_on_shell};
use super::integrator::{drift_scale, Dopri5, OrbitControls};
use super::state::{wrap_angle, ClassicalState};

/// How initial conditions are placed on an energy shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeedPolicy {
    /// `count` seeds picked evenly from the valid points of a `grid x grid`
    /// lattice in `(jz, phi)` at `p = 0`, with `q` the larger root.
    Grid { count: usize, grid: usize },
    /// Explicit initial conditions; each is used as given.
    Explicit(Vec<ClassicalState>),
}

impl Default for SeedPolicy {
    fn default() -> Self {
        SeedPolicy::Grid { count: 24, grid: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub seed: usize,
    pub t: f64,
    /// `1 + jz/j`
    pub r: f64,
    pub phi: f64,
    pub q: f64,
    pub jz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareSection {
    pub params: ModelParams,
    pub energy: f64,
    /// Sorted by seed index, then time.
    pub points: Vec<SectionPoint>,
    pub seeds: Vec<ClassicalState>,
    pub crossings_per_seed: Vec<usize>,
    /// Seeds whose orbit exceeded the energy-drift bound; their points are dropped.
    pub flagged_seeds: Vec<usize>,
}

/// Seeds on the shell `H = energy`, deterministic for a given policy.
pub fn place_seeds(params: &ModelParams, energy: f64, policy: &SeedPolicy) -> Result<Vec<ClassicalState>> {
    let (count, grid) = match policy {
        SeedPolicy::Explicit(s) if s.is_empty() => return Err(invalid("seeds", "explicit seed list is empty")),
        SeedPolicy::Explicit(s) => return Ok(s.clone()),
        SeedPolicy::Grid { count, grid } => (*count, *grid),
    };
    if count == 0 || grid == 0 {
        return Err(invalid("seeds", "seed count and grid size must be positive"));
    }
    let j = params.j();
    let Some((lo, hi)) = accessible_jz_band(params, energy) else {
        return Err(ChaosError::EmptyShell { epsilon: energy / params.energy_scale() });
    };
    let mut valid = Vec::new();
    for a in 0..grid {
        let jz = lo + (a as f64 + 0.5) * (hi - lo) / grid as f64;
        for b in 0..grid {
            let phi = -PI + (b as f64 + 0.5) * 2.0 * PI / grid as f64;
            if let Some(&q) = solve_q_on_shell(params, energy, jz.clamp(-j, j), phi)?.first() {
                valid.push(ClassicalState::new(q, 0.0, phi, jz));
            }
        }
    }
    if valid.len() < count {
        log::info!("only {} seed candidates on the shell, {count} requested", valid.len());
    }
    if valid.is_empty() {
        return Err(ChaosError::EmptyShell { epsilon: energy / params.energy_scale() });
    }
    if valid.len() <= count {
        return Ok(valid);
    }
    Ok((0..count).map(|i| valid[i * valid.len() / count]).collect())
}

/// Range of `jz` where the `p = 0` slice of the shell is non-empty, i.e. where
/// `min_{q, phi} H(q, 0, phi, jz) = w0 jz - c(jz)^2 / (2 w) <= E`.
/// Found on a fine scan and padded by one scan cell.
fn accessible_jz_band(params: &ModelParams, energy: f64) -> Option<(f64, f64)> {
    const SCAN: usize = 4000;
    let j = params.j();
    let k = (1.0 + params.delta()) * params.gamma;
    let reduced = |jz: f64| params.omega0 * jz - k * k * j * (1.0 - (jz / j).powi(2)) / (2.0 * params.omega);
    let cell = 2.0 * j / SCAN as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=SCAN {
        let jz = -j + i as f64 * cell;
        if reduced(jz) <= energy {
            lo = lo.min(jz);
            hi = hi.max(jz);
        }
    }
    (lo <= hi).then(|| ((lo - cell).max(-j), (hi + cell).min(j)))
}

/// Crossings of `p = 0` along one orbit.
struct OrbitSection {
    points: Vec<SectionPoint>,
    crossings: usize,
    flagged: bool,
}

fn section_of_orbit(
    params: &ModelParams,
    seed_index: usize,
    seed: &ClassicalState,
    t_end: f64,
    max_points: usize,
    controls: &OrbitControls,
) -> Result<OrbitSection> {
    let j = params.j();
    let f = |y: &[f64; 5]| cartesian_rhs(y, params);
    let y0 = seed.to_cartesian(j);
    let energy = hamiltonian_cartesian(&y0, params);
    let scale = drift_scale(params, energy);
    let mut stepper = Dopri5::new(&f, 0.0, y0, controls.tol);
    let mut out = OrbitSection { points: Vec::new(), crossings: 0, flagged: false };
    while stepper.t() < t_end && out.points.len() < max_points {
        stepper.step(&f, t_end)?;
        let y = *stepper.y();
        let drift = (hamiltonian_cartesian(&y, params) - energy).abs() / scale;
        if drift > controls.drift_tol {
            out.flagged = true;
            log::warn!("seed {seed_index}: energy drift {drift:.3e} at t = {}", stepper.t());
            break;
        }
        let p_old = stepper.y_prev()[1];
        let p_new = y[1];
        // A crossing at the very start of the step was reported by the previous step.
        if !(p_old != 0.0 && p_old.signum() != p_new.signum() || p_new == 0.0) {
            continue;
        }
        let (ta, tb) = (stepper.t_prev(), stepper.t());
        let tau = if p_new == 0.0 { tb - ta } else { illinois(|t| stepper.interpolate(t)[1], ta, tb, p_old, p_new) - ta };
        let yc = if tau == tb - ta { y } else { Dopri5::single_step(&f, stepper.y_prev(), tau) };
        out.crossings += 1;
        let phi = yc[3].atan2(yc[2]);
        let jz = yc[4];
        let roots = solve_q_on_shell(params, energy, jz.clamp(-j, j), phi)?;
        let Some(&q_plus) = roots.first() else { continue };
        if (yc[0] - q_plus).abs() <= 1e-6 * q_plus.abs().max(1.0) {
            out.points.push(SectionPoint { seed: seed_index, t: ta + tau, r: 1.0 + jz / j, phi: wrap_angle(phi), q: yc[0], jz });
        }
    }
    Ok(out)
}

/// Regula falsi with the Illinois modification on `g(t) = 0`, `g(a) g(b) < 0`.
fn illinois(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..100 {
        let c = (a * gb - b * ga) / (gb - ga);
        let gc = g(c);
        if gc == 0.0 || (b - a).abs() < 1e-15 * b.abs().max(1.0) {
            return c;
        }
        if gc.signum() == gb.signum() {
            b = c;
            gb = gc;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            ga = gc;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// Poincaré section of the shell `H = energy` from orbits of duration `t_end`.
///
/// At most `max_points` points are kept, split evenly across seeds. Orbits are
/// integrated independently; the result does not depend on `exec`.
pub fn poincare_section(
    params: &ModelParams,
    energy: f64,
    policy: &SeedPolicy,
    t_end: f64,
    max_points: usize,
    controls: &OrbitControls,
    exec: Exec,
) -> Result<PoincareSection> {
    let e_gs = params.ground_energy();
    if energy < e_gs {
        return Err(ChaosError::EnergyOutOfRange { energy, minimum: e_gs });
    }
    if !(t_end > 0.0) {
        return Err(invalid("t_end", "must be positive"));
    }
    let seeds = place_seeds(params, energy, policy)?;
    let per_seed = max_points.div_ceil(seeds.len()).max(1);
    let results = exec.map_range(seeds.len(), |i| section_of_orbit(params, i, &seeds[i], t_end, per_seed, controls));
    let mut section = PoincareSection {
        params: *params,
        energy,
        points: Vec::new(),
        seeds: seeds.clone(),
        crossings_per_seed: Vec::with_capacity(seeds.len()),
        flagged_seeds: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        let orbit = r?;
        section.crossings_per_seed.push(orbit.crossings);
        if orbit.flagged {
            section.flagged_seeds.push(i);
        } else {
            section.points.extend(orbit.points);
        }
    }
    Ok(section)
}
