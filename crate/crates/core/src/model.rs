//! Model parameters, phase classification, fixed points and the small-oscillation
//! (quadratic) description of the Dicke Hamiltonian around its global minimum.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical::flow::hamiltonian_canonical;
use crate::classical::state::{wrap_angle, CanonicalPoint};
use crate::error::{invalid, ChaosError, Result};
use crate::exec::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Rotating-wave approximation, `delta = 0`.
    #[serde(rename = "tc")]
    TavisCummings,
    /// Full counter-rotating coupling, `delta = 1`.
    Dicke,
}

impl Model {
    pub fn delta(self) -> f64 {
        match self {
            Model::TavisCummings => 0.0,
            Model::Dicke => 1.0,
        }
    }
}

/// Physical parameters plus the bosonic truncation.
///
/// The pseudospin length is stored as `two_j = 2j = N` so half-integer spins are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: Model,
    pub omega: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub two_j: u32,
    pub n_max: u32,
}

/// Eigenvalue of `exp(i pi (Jz + j)) exp(i pi a^dag a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn from_exponent(k: i64) -> Self {
        if k.rem_euclid(2) == 0 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::Plus => "plus",
            Parity::Minus => "minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Normal,
    Critical,
    Superradiant,
}

impl ModelParams {
    pub fn new(model: Model, omega: f64, omega0: f64, gamma: f64, two_j: u32, n_max: u32) -> Result<Self> {
        let p = Self { model, omega, omega0, gamma, two_j, n_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid("omega", "must be positive and finite"));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid("omega0", "must be positive and finite"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be non-negative and finite"));
        }
        if self.two_j == 0 {
            return Err(invalid("j", "must be a positive half-integer"));
        }
        Ok(())
    }

    /// Same model with `gamma = ratio * gamma_c`.
    pub fn with_gamma_ratio(mut self, ratio: f64) -> Self {
        self.gamma = ratio * self.critical_coupling();
        self
    }

    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn delta(&self) -> f64 {
        self.model.delta()
    }

    pub fn j(&self) -> f64 {
        0.5 * self.two_j as f64
    }

    /// Number of atoms, `N = 2j`.
    pub fn n_atoms(&self) -> f64 {
        self.two_j as f64
    }

    pub fn critical_coupling(&self) -> f64 {
        critical_coupling(self)
    }

    pub fn gamma_ratio(&self) -> f64 {
        self.gamma / self.critical_coupling()
    }

    pub fn phase(&self) -> Phase {
        let gc = self.critical_coupling();
        if self.gamma == gc {
            Phase::Critical
        } else if self.gamma < gc {
            Phase::Normal
        } else {
            Phase::Superradiant
        }
    }

    /// Energy unit for scaled energies: `E = omega0 j epsilon`.
    pub fn energy_scale(&self) -> f64 {
        self.omega0 * self.j()
    }

    pub fn ground_energy(&self) -> f64 {
        ground_state_energy(self) * self.energy_scale()
    }

    pub(crate) fn require_dicke(&self) -> Result<()> {
        match self.model {
            Model::Dicke => Ok(()),
            Model::TavisCummings => Err(ChaosError::WrongModel { required: "Dicke" }),
        }
    }
}

/// `gamma_c = sqrt(omega0 omega) / (1 + delta)`.
pub fn critical_coupling(params: &ModelParams) -> f64 {
    (params.omega0 * params.omega).sqrt() / (1.0 + params.delta())
}

/// Scaled classical ground-state energy `E_gs / (omega0 j)`.
pub fn ground_state_energy(params: &ModelParams) -> f64 {
    let gc = params.critical_coupling();
    if params.gamma <= gc {
        -1.0
    } else {
        epsilon_zero(params)
    }
}

/// `epsilon_0 = -(gc^2/g^2 + g^2/gc^2) / 2`, the bottom of the superradiant wells.
/// Diverges at zero coupling.
pub fn epsilon_zero(params: &ModelParams) -> f64 {
    let r2 = (params.gamma / params.critical_coupling()).powi(2);
    -0.5 * (1.0 / r2 + r2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub q_m: f64,
    pub p_m: f64,
    pub phi_m: f64,
    pub jz_m: f64,
    pub stability: Stability,
}

/// The south pole `q = p = 0, jz = -j`: the global minimum in the normal phase,
/// a saddle above `gamma_c`.
pub fn south_pole(params: &ModelParams) -> FixedPoint {
    let stability = match params.phase() {
        Phase::Superradiant => Stability::Unstable,
        _ => Stability::Stable,
    };
    FixedPoint { q_m: 0.0, p_m: 0.0, phi_m: 0.0, jz_m: -params.j(), stability }
}

/// The two symmetry-related minima of the superradiant phase, `phi_m = 0` first.
///
/// For the Dicke model they form the parity-broken doublet. For Tavis-Cummings
/// the minima form a continuous ring; the two `p = 0` representatives are returned.
pub fn superradiant_minima(params: &ModelParams) -> Result<[FixedPoint; 2]> {
    let gc = params.critical_coupling();
    if params.gamma <= gc {
        return Err(ChaosError::NotSuperradiant { gamma: params.gamma, gamma_c: gc });
    }
    let j = params.j();
    let ratio2 = (gc / params.gamma).powi(2);
    let jz_m = -j * ratio2;
    let q_abs = (1.0 + params.delta()) * params.gamma * j.sqrt() / params.omega
        * (1.0 - ratio2 * ratio2).sqrt();
    let at = |phi_m: f64, q_m: f64| FixedPoint { q_m, p_m: 0.0, phi_m, jz_m, stability: Stability::Stable };
    Ok([at(0.0, -q_abs), at(PI, q_abs)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModes {
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub phase: Phase,
}

/// Small-oscillation frequencies around the global minimum (Dicke only).
pub fn normal_modes(params: &ModelParams) -> Result<NormalModes> {
    params.require_dicke()?;
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let gc = params.critical_coupling();
    let phase = params.phase();
    let (plus2, minus2) = match phase {
        Phase::Normal | Phase::Critical => {
            let a = w * w + w0 * w0;
            let root = ((w * w - w0 * w0).powi(2) + 16.0 * w * w0 * g * g).sqrt();
            (0.5 * (a + root), 0.5 * (a - root))
        }
        Phase::Superradiant => {
            let g4 = g.powi(4);
            let gc4 = gc.powi(4);
            let a = w0 * w0 * g4 + w * w * gc4;
            let root = ((w0 * w0 * g4 - w * w * gc4).powi(2) + 4.0 * w * w * w0 * w0 * gc4 * gc4).sqrt();
            (0.5 * (a + root) / gc4, 0.5 * (a - root) / gc4)
        }
    };
    let omega_minus = if phase == Phase::Critical { 0.0 } else { minus2.max(0.0).sqrt() };
    Ok(NormalModes { omega_plus: plus2.sqrt(), omega_minus, phase })
}

/// Quadratic expansion of the classical Hamiltonian around its minimum,
/// evaluated at `point` (Dicke only, not at `gamma_c`).
///
/// Above `gamma_c` the expansion is taken around whichever of the two minima
/// gives the smaller quadratic energy, i.e. the well the quadratic model
/// places the point in.
pub fn quadratic_hamiltonian(params: &ModelParams, point: &CanonicalPoint) -> Result<f64> {
    params.require_dicke()?;
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let j = params.j();
    match params.phase() {
        Phase::Critical => Err(ChaosError::CriticalCoupling),
        Phase::Normal => Ok(-w0 * j
            + 0.5 * w0 * point.rho_sq()
            + 0.5 * w * (point.q * point.q + point.p * point.p)
            + 2.0 * g * point.q * point.p1),
        Phase::Superradiant => {
            let gc = params.critical_coupling();
            let e_gs = params.ground_energy();
            let r = (g / gc).powi(2);
            let stiff = r - 1.0 / r;
            let k_phi = j * w0 * stiff;
            let k_z = j * w0 * r * r / stiff;
            let k_cross = (w * w0 * j).sqrt() / stiff.sqrt();
            let state = point.to_state(j);
            let minima = superradiant_minima(params)?;
            let value = |m: &FixedPoint| {
                let dq = point.q - m.q_m;
                let dphi = wrap_angle(state.phi - m.phi_m);
                let dz = (state.jz - m.jz_m) / j;
                // The cross term changes sign with cos(phi_m).
                e_gs + 0.5 * w * (dq * dq + point.p * point.p)
                    + 0.5 * k_phi * dphi * dphi
                    + 0.5 * k_z * dz * dz
                    + m.phi_m.cos().signum() * k_cross * dq * dz
            };
            Ok(value(&minima[0]).min(value(&minima[1])))
        }
    }
}

/// Sampling policy for the energy shell `H = E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSampler {
    /// Number of accepted shell points.
    pub samples: usize,
    pub seed: u64,
    /// Give up after this many raw draws per accepted point on average.
    pub max_draws_per_sample: usize,
    pub exec: Exec,
}

impl Default for ShellSampler {
    fn default() -> Self {
        Self { samples: 10_000, seed: 0x5eed, max_draws_per_sample: 10_000, exec: Exec::Parallel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityEstimate {
    pub v_max: f64,
    pub accepted: usize,
    pub argmax: CanonicalPoint,
}

const SHELL_CHUNK: usize = 256;

/// Largest relative error `|H_cl - H_q| / (E - E_gs)` of the quadratic
/// approximation over sampled points of the shell `H_cl = E`. Comparing both
/// Hamiltonians at the same point keeps the shell-solve residual out of `v`.
///
/// Points are drawn uniformly in `(p, Q1, P1)` inside the energetically allowed
/// box; `q` is then solved exactly from the shell condition (the Hamiltonian is
/// quadratic in `q`), and both roots are kept.
pub fn quadratic_validity(params: &ModelParams, energy: f64, sampler: &ShellSampler) -> Result<ValidityEstimate> {
    params.require_dicke()?;
    if params.phase() == Phase::Critical {
        return Err(ChaosError::CriticalCoupling);
    }
    let e_gs = params.ground_energy();
    if !(energy > e_gs) {
        return Err(ChaosError::EnergyOutOfRange { energy, minimum: e_gs });
    }
    if sampler.samples == 0 {
        return Err(invalid("samples", "must be positive"));
    }
    let j = params.j();
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let p_max = (2.0 * (energy - e_gs) / w).sqrt();
    let (lo, hi) = spin_box(params, energy);

    let chunks = sampler.samples.div_ceil(SHELL_CHUNK);
    let per_chunk_draws = sampler.max_draws_per_sample.saturating_mul(SHELL_CHUNK);
    let results: Vec<Result<(f64, CanonicalPoint, usize)>> = sampler.exec.map_range(chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        rng.set_stream(chunk as u64);
        let want = SHELL_CHUNK.min(sampler.samples - chunk * SHELL_CHUNK);
        let mut best = (0.0f64, CanonicalPoint { q: 0.0, p: 0.0, q1: 0.0, p1: 0.0 });
        let mut got = 0usize;
        let mut draws = 0usize;
        while got < want {
            draws += 1;
            if draws > per_chunk_draws {
                return Err(ChaosError::EmptyShell { epsilon: energy / params.energy_scale() });
            }
            let p = rng.gen_range(-p_max..=p_max);
            let q1 = rng.gen_range(lo[0]..=hi[0]);
            let p1 = rng.gen_range(lo[1]..=hi[1]);
            let r2 = q1 * q1 + p1 * p1;
            if r2 > 4.0 * j {
                continue;
            }
            let c = 2.0 * g * p1 * (1.0 - r2 / (4.0 * j)).sqrt();
            let rest = -w0 * j + 0.5 * w0 * r2 + 0.5 * w * p * p - energy;
            let disc = c * c - 2.0 * w * rest;
            if disc < 0.0 {
                continue;
            }
            for sign in [1.0, -1.0] {
                if got == want {
                    break;
                }
                let point = CanonicalPoint { q: (-c + sign * disc.sqrt()) / w, p, q1, p1 };
                let h = hamiltonian_canonical(&point, params);
                if ((h - energy) / (energy - e_gs)).abs() >= 1e-6 {
                    continue;
                }
                got += 1;
                let v = ((h - quadratic_hamiltonian(params, &point)?) / (energy - e_gs)).abs();
                if v > best.0 {
                    best = (v, point);
                }
            }
        }
        Ok((best.0, best.1, got))
    });

    let mut out = ValidityEstimate { v_max: 0.0, accepted: 0, argmax: CanonicalPoint { q: 0.0, p: 0.0, q1: 0.0, p1: 0.0 } };
    for r in results {
        let (v, point, got) = r?;
        out.accepted += got;
        if v > out.v_max {
            out.v_max = v;
            out.argmax = point;
        }
    }
    Ok(out)
}

/// Bounding box in `(Q1, P1)` of the region where the shell is reachable, i.e.
/// where `min_{q,p} H <= E`. Found on a grid and padded by two cells.
fn spin_box(params: &ModelParams, energy: f64) -> ([f64; 2], [f64; 2]) {
    const CELLS: usize = 200;
    let j = params.j();
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let r = 2.0 * j.sqrt();
    let h = 2.0 * r / CELLS as f64;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for a in 0..=CELLS {
        for b in 0..=CELLS {
            let q1 = -r + a as f64 * h;
            let p1 = -r + b as f64 * h;
            let r2 = q1 * q1 + p1 * p1;
            if r2 > 4.0 * j * (1.0 + 1e-12) {
                continue;
            }
            let s2 = (1.0 - r2 / (4.0 * j)).max(0.0);
            let reduced = -w0 * j + 0.5 * w0 * r2 - 2.0 * g * g * p1 * p1 * s2 / w;
            if reduced <= energy {
                lo = [lo[0].min(q1), lo[1].min(p1)];
                hi = [hi[0].max(q1), hi[1].max(p1)];
            }
        }
    }
    if lo[0] > hi[0] {
        // Shell thinner than a grid cell: fall back to the full disc.
        return ([-r, -r], [r, r]);
    }
    let pad = 2.0 * h;
    (
        [(lo[0] - pad).max(-r), (lo[1] - pad).max(-r)],
        [(hi[0] + pad).min(r), (hi[1] + pad).min(r)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::flow::hamiltonian_value;
    use crate::classical::state::ClassicalState;

    fn dicke(j2: u32, ratio: f64) -> ModelParams {
        ModelParams::new(Model::Dicke, 1.0, 1.0, 0.0, j2, 0).unwrap().with_gamma_ratio(ratio)
    }

    #[test]
    fn critical_coupling_values() {
        let p = |w: f64, w0: f64, m| ModelParams::new(m, w, w0, 0.0, 1, 0).unwrap();
        assert_eq!(critical_coupling(&p(1.0, 1.0, Model::Dicke)), 0.5);
        assert_eq!(critical_coupling(&p(1.0, 1.0, Model::TavisCummings)), 1.0);
        assert_eq!(critical_coupling(&p(4.0, 1.0, Model::Dicke)), 1.0);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(Model::Dicke, 0.0, 1.0, 0.1, 2, 0).is_err());
        assert!(ModelParams::new(Model::Dicke, 1.0, -1.0, 0.1, 2, 0).is_err());
        assert!(ModelParams::new(Model::Dicke, 1.0, 1.0, -0.1, 2, 0).is_err());
        assert!(ModelParams::new(Model::Dicke, 1.0, 1.0, 0.1, 0, 0).is_err());
    }

    #[test]
    fn ground_energy_branches() {
        assert_eq!(ground_state_energy(&dicke(2, 0.2)), -1.0);
        assert!((ground_state_energy(&dicke(2, 2.0)) + 2.125).abs() < 1e-15);
        assert_eq!(ground_state_energy(&dicke(2, 1.0)), -1.0);
        assert!((epsilon_zero(&dicke(2, 1.0)) + 1.0).abs() < 1e-15);
        // continuity from above
        assert!((ground_state_energy(&dicke(2, 1.0 + 1e-7)) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn superradiant_minima_closed_form() {
        let p = dicke(80, 2.0);
        let m = superradiant_minima(&p).unwrap();
        for fp in &m {
            assert!((fp.jz_m / 40.0 + 0.25).abs() < 1e-15);
            assert_eq!(fp.p_m, 0.0);
            assert!((fp.q_m.abs() - 12.247448713915889).abs() < 1e-12);
            assert!(fp.q_m * fp.phi_m.cos() < 0.0);
            let e = hamiltonian_value(&ClassicalState::new(fp.q_m, fp.p_m, fp.phi_m, fp.jz_m), &p);
            assert!((e / 40.0 + 2.125).abs() < 1e-14);
        }
        assert!(matches!(superradiant_minima(&dicke(80, 1.0)), Err(ChaosError::NotSuperradiant { .. })));
        let near = superradiant_minima(&dicke(80, 1.0 + 1e-9)).unwrap();
        assert!(near[0].q_m.abs() < 1e-3 && (near[0].jz_m + 40.0).abs() < 1e-6);
    }

    /// Gradient of the canonical-chart Hamiltonian in `(q, p, Q1, P1)`, read off
    /// the canonical flow.
    fn canonical_gradient(x: &[f64; 4], p: &ModelParams) -> [f64; 4] {
        let f = crate::classical::flow::canonical_rhs(x, p);
        [-f[1], f[0], -f[3], f[2]]
    }

    /// Jacobian of `g` by central differences with Richardson extrapolation.
    fn fd_jacobian(g: impl Fn(&[f64; 4]) -> [f64; 4], x: &[f64; 4], h: f64) -> [[f64; 4]; 4] {
        let diff = |h: f64, c: usize| {
            let mut xp = *x;
            let mut xm = *x;
            xp[c] += h;
            xm[c] -= h;
            let (gp, gm) = (g(&xp), g(&xm));
            std::array::from_fn::<f64, 4, _>(|r| (gp[r] - gm[r]) / (2.0 * h))
        };
        let mut out = [[0.0; 4]; 4];
        for c in 0..4 {
            let (d1, d2) = (diff(h, c), diff(0.5 * h, c));
            for r in 0..4 {
                out[r][c] = (4.0 * d2[r] - d1[r]) / 3.0;
            }
        }
        // symmetrize
        for r in 0..4 {
            for c in 0..r {
                let m = 0.5 * (out[r][c] + out[c][r]);
                out[r][c] = m;
                out[c][r] = m;
            }
        }
        out
    }

    /// Grid search followed by Newton iteration on the gradient, all in the
    /// smooth canonical chart.
    fn numerical_minimum(p: &ModelParams) -> (f64, CanonicalPoint) {
        let j = p.j();
        let mut best = (f64::INFINITY, ClassicalState::new(0.0, 0.0, 0.0, -j));
        let qmax = 3.0 * p.gamma * j.sqrt() / p.omega + 1.0;
        for a in 0..=60 {
            for b in 0..=60 {
                for c in [0.0, PI] {
                    let s = ClassicalState::new(-qmax + 2.0 * qmax * a as f64 / 60.0, 0.0, c, j * (-1.0 + 2.0 * b as f64 / 60.0));
                    let e = hamiltonian_value(&s, p);
                    if e < best.0 {
                        best = (e, s);
                    }
                }
            }
        }
        let mut x = best.1.to_canonical(j).as_array();
        for _ in 0..200 {
            let g = canonical_gradient(&x, p);
            let hess = fd_jacobian(|y| canonical_gradient(y, p), &x, 1e-4);
            let step = solve4(hess, g);
            // damp steps that leave the disc
            let mut t = 1.0;
            while {
                let y: [f64; 4] = std::array::from_fn(|k| x[k] - t * step[k]);
                y[2] * y[2] + y[3] * y[3] > 4.0 * j
            } {
                t *= 0.5;
            }
            for k in 0..4 {
                x[k] -= t * step[k];
            }
            if step.iter().map(|s| s.abs()).sum::<f64>() < 1e-13 {
                break;
            }
        }
        let pt = CanonicalPoint::from_array(&x);
        let g = canonical_gradient(&x, p);
        assert!(g.iter().all(|v| v.abs() < 1e-9 * j), "not a fixed point: {g:?}");
        (hamiltonian_canonical(&pt, p), pt)
    }

    fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> [f64; 4] {
        for c in 0..4 {
            let piv = (c..4).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, piv);
            b.swap(c, piv);
            for r in c + 1..4 {
                let f = a[r][c] / a[c][c];
                for k in c..4 {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = [0.0; 4];
        for r in (0..4).rev() {
            let s: f64 = (r + 1..4).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn ground_energy_matches_numerical_minimization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = ModelParams::new(
                Model::Dicke,
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                0.0,
                rng.gen_range(2..100),
                0,
            )
            .unwrap()
            .with_gamma_ratio(rng.gen_range(0.1..3.0));
            let (e_num, pt) = numerical_minimum(&p);
            let e = p.ground_energy();
            assert!(((e_num - e) / e).abs() < 1e-8, "{e_num} vs {e} at {p:?}");
            if p.phase() == Phase::Superradiant {
                let m = superradiant_minima(&p).unwrap();
                let fp = if pt.q < 0.0 { m[0] } else { m[1] };
                let s = pt.to_state(p.j());
                assert!(((s.jz - fp.jz_m) / fp.jz_m).abs() < 1e-10);
                assert!(((pt.q - fp.q_m) / fp.q_m).abs() < 1e-10);
                assert!(pt.p.abs() < 1e-10);
                assert!(wrap_angle(s.phi - fp.phi_m).abs() < 1e-8);
            }
        }
    }

    /// Symplectic frequencies of `H = z^T K z / 2` for canonical pairs, via the
    /// characteristic polynomial of `(J K)^2` restricted to two degrees of freedom.
    fn symplectic_frequencies(k: [[f64; 4]; 4]) -> (f64, f64) {
        // z = (x1, p1, x2, p2), J = blockdiag([[0,1],[-1,0]] x2)
        let mut a = [[0.0; 4]; 4];
        for r in 0..4 {
            let (src, sign) = match r {
                0 => (1, 1.0),
                1 => (0, -1.0),
                2 => (3, 1.0),
                _ => (2, -1.0),
            };
            for c in 0..4 {
                a[r][c] = sign * k[src][c];
            }
        }
        // eigenvalues of A are +-i w; A^2 has -w^2 doubly. trace(A^2) = -2(w+^2 + w-^2),
        // det(A) = w+^2 w-^2.
        let mut a2 = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                a2[r][c] = (0..4).map(|m| a[r][m] * a[m][c]).sum();
            }
        }
        let tr = -(0..4).map(|i| a2[i][i]).sum::<f64>() / 2.0;
        let det = det4(a);
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (((tr + disc) / 2.0).sqrt(), ((tr - disc) / 2.0).max(0.0).sqrt())
    }

    fn det4(m: [[f64; 4]; 4]) -> f64 {
        let minor = |skip: usize| {
            let rows: Vec<[f64; 3]> = (1..4)
                .map(|r| {
                    let v: Vec<f64> = (0..4).filter(|&c| c != skip).map(|c| m[r][c]).collect();
                    [v[0], v[1], v[2]]
                })
                .collect();
            rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
                - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
                + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0])
        };
        (0..4).map(|c| if c % 2 == 0 { 1.0 } else { -1.0 } * m[0][c] * minor(c)).sum()
    }

    /// Normal-mode frequencies from the Hessian of the full Hamiltonian at its
    /// minimum, taken as the derivative of the analytic gradient in the
    /// canonical chart.
    fn hessian_frequencies(p: &ModelParams) -> (f64, f64) {
        let j = p.j();
        let x = match p.phase() {
            Phase::Superradiant => {
                let m = superradiant_minima(p).unwrap()[0];
                ClassicalState::new(m.q_m, 0.0, m.phi_m, m.jz_m).to_canonical(j).as_array()
            }
            _ => [0.0; 4],
        };
        symplectic_frequencies(fd_jacobian(|y| canonical_gradient(y, p), &x, 1e-3))
    }

    #[test]
    fn normal_modes_examples() {
        let m = normal_modes(&dicke(2, 0.0)).unwrap();
        assert!((m.omega_plus - 1.0).abs() < 1e-15 && (m.omega_minus - 1.0).abs() < 1e-15);
        let m = normal_modes(&dicke(2, 1.0)).unwrap();
        assert_eq!(m.omega_minus, 0.0);
        assert_eq!(m.phase, Phase::Critical);
        let m = normal_modes(&dicke(2, 2.0)).unwrap();
        let plus = ((17.0 + 229f64.sqrt()) / 2.0).sqrt();
        let minus = ((17.0 - 229f64.sqrt()) / 2.0).sqrt();
        assert!((m.omega_plus - plus).abs() < 1e-13 && (m.omega_plus - 4.00829).abs() < 1e-5);
        assert!((m.omega_minus - minus).abs() < 1e-13 && (m.omega_minus - 0.96624).abs() < 1e-5);
        for r in [0.99, 1.01] {
            assert!(normal_modes(&dicke(2, r)).unwrap().omega_minus < 0.2);
        }
        let tc = ModelParams::new(Model::TavisCummings, 1.0, 1.0, 0.3, 2, 0).unwrap();
        assert!(normal_modes(&tc).is_err());
    }

    #[test]
    fn normal_modes_match_hessian_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let ratio = if rng.gen_bool(0.5) { rng.gen_range(0.05..0.95) } else { rng.gen_range(1.05..3.0) };
            let p = ModelParams::new(Model::Dicke, rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), 0.0, 80, 0)
                .unwrap()
                .with_gamma_ratio(ratio);
            let m = normal_modes(&p).unwrap();
            let (hp, hm) = hessian_frequencies(&p);
            assert!((m.omega_plus - hp).abs() < 1e-8 * hp, "{m:?} vs {hp}");
            assert!((m.omega_minus - hm).abs() < 1e-8 * hm, "{m:?} vs {hm}");
        }
    }

    #[test]
    fn quadratic_hamiltonian_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p0 = dicke(80, 0.0);
        for _ in 0..100 {
            let pt = CanonicalPoint {
                q: rng.gen_range(-5.0..5.0),
                p: rng.gen_range(-5.0..5.0),
                q1: rng.gen_range(-4.0..4.0),
                p1: rng.gen_range(-4.0..4.0),
            };
            assert!((quadratic_hamiltonian(&p0, &pt).unwrap() - hamiltonian_canonical(&pt, &p0)).abs() < 1e-12);
        }
        let origin = CanonicalPoint { q: 0.0, p: 0.0, q1: 0.0, p1: 0.0 };
        let pn = dicke(80, 0.5);
        assert_eq!(quadratic_hamiltonian(&pn, &origin).unwrap(), pn.ground_energy());
        let ps = dicke(80, 2.0);
        for m in superradiant_minima(&ps).unwrap() {
            let c = ClassicalState::new(m.q_m, 0.0, m.phi_m, m.jz_m).to_canonical(40.0);
            assert!((quadratic_hamiltonian(&ps, &c).unwrap() - ps.ground_energy()).abs() < 1e-10);
        }
        assert_eq!(quadratic_hamiltonian(&dicke(80, 1.0), &origin), Err(ChaosError::CriticalCoupling));
    }

    #[test]
    fn quadratic_remainder_is_cubic() {
        // The Taylor remainder must shrink by ~8x when the displacement halves.
        for (ratio, center) in [(0.5, None), (2.0, Some(superradiant_minima(&dicke(80, 2.0)).unwrap()[1]))] {
            let p = dicke(80, ratio);
            let base = match center {
                Some(m) => ClassicalState::new(m.q_m, 0.0, m.phi_m, m.jz_m),
                None => ClassicalState::new(0.0, 0.0, 0.0, -40.0),
            }
            .to_canonical(40.0);
            let dir = [0.31, -0.2, 0.17, 0.23];
            let rem = |s: f64| {
                let pt = CanonicalPoint { q: base.q + s * dir[0], p: base.p + s * dir[1], q1: base.q1 + s * dir[2], p1: base.p1 + s * dir[3] };
                (hamiltonian_canonical(&pt, &p) - quadratic_hamiltonian(&p, &pt).unwrap()).abs()
            };
            let (r1, r2) = (rem(0.2), rem(0.1));
            let ratio = r1 / r2;
            assert!(ratio > 6.0 && ratio < 17.0, "remainder ratio {ratio}");
        }
    }

    #[test]
    fn validity_zero_coupling_and_errors() {
        let s = ShellSampler { samples: 2000, ..Default::default() };
        let p = dicke(80, 0.0);
        for eps in [-0.5, 0.3, 2.0] {
            let v = quadratic_validity(&p, eps * 40.0, &s).unwrap();
            assert!(v.v_max < 1e-12);
            assert_eq!(v.accepted, 2000);
        }
        let pn = dicke(80, 0.5);
        assert!(quadratic_validity(&pn, -40.0, &s).is_err());
        assert!(quadratic_validity(&pn, -41.0, &s).is_err());
        assert_eq!(quadratic_validity(&dicke(80, 1.0), 0.0, &s).unwrap_err(), ChaosError::CriticalCoupling);
    }

    #[test]
    fn validity_vanishes_near_minimum() {
        let s = ShellSampler { samples: 2000, ..Default::default() };
        for ratio in [0.5, 2.0] {
            let p = dicke(80, ratio);
            let e_gs = p.ground_energy();
            let far = quadratic_validity(&p, e_gs + 4.0, &s).unwrap().v_max;
            let near = quadratic_validity(&p, e_gs + 0.04, &s).unwrap().v_max;
            assert!(near < 0.2 * far, "ratio {ratio}: near {near}, far {far}");
            assert!(near < 0.05);
        }
    }

    #[test]
    fn validity_is_scale_consistent() {
        let s = ShellSampler { samples: 1000, ..Default::default() };
        let p = dicke(80, 0.6);
        let mut q = p;
        q.omega *= 3.0;
        q.omega0 *= 3.0;
        q.gamma *= 3.0;
        let a = quadratic_validity(&p, -10.0, &s).unwrap().v_max;
        let b = quadratic_validity(&q, -30.0, &s).unwrap().v_max;
        assert!((a - b).abs() < 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn validity_breakdown_energy_drops_toward_critical() {
        let s = ShellSampler { samples: 2000, ..Default::default() };
        let threshold = |ratio: f64| {
            let p = dicke(80, ratio);
            (1..=60)
                .map(|k| -1.0 + 0.05 * k as f64)
                .find(|&eps| quadratic_validity(&p, eps * 40.0, &s).unwrap().v_max > 0.1)
                .unwrap_or(f64::INFINITY)
        };
        let (a, b, c) = (threshold(0.3), threshold(0.6), threshold(0.9));
        assert!(a > b && b > c, "{a} {b} {c}");
    }
}
