//! Basis enumeration: the photon-number/Dicke-state product basis (optionally
//! restricted to one parity), the parity-adapted displaced-oscillator basis,
//! and the excitation-number blocks of the Tavis-Cummings model.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ChaosError, Result};
use crate::model::{Model, ModelParams, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisScheme {
    /// All `|n> |j, m>` with `n <= n_max`, both parities.
    Fock,
    /// `|n> |j, m>` with `(-1)^(n+m+j)` fixed.
    FockParity,
    /// Parity-adapted displaced states `|N; j, m'; p>` built on `J_x` eigenstates.
    CoherentParity,
    /// Fixed excitation number `lambda = n + m + j` (Tavis-Cummings only).
    TcLambdaBlock,
}

impl BasisScheme {
    pub fn label(self) -> &'static str {
        match self {
            BasisScheme::Fock => "fock",
            BasisScheme::FockParity => "fock_parity",
            BasisScheme::CoherentParity => "coherent_parity",
            BasisScheme::TcLambdaBlock => "tc_lambda_block",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    pub scheme: BasisScheme,
    /// Ignored by `Fock` and `TcLambdaBlock`.
    pub parity: Parity,
    /// Only meaningful for `TcLambdaBlock`.
    pub lambda: u32,
    pub n_max: u32,
}

/// One basis label. `two_m` is twice the `J_z` projection (Fock schemes) or
/// twice the non-negative representative `|m'|` of the `J_x` projection
/// (coherent scheme).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub n: u32,
    pub two_m: i32,
}

impl BasisState {
    pub fn m(&self) -> f64 {
        0.5 * self.two_m as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub spec: BasisSpec,
    pub two_j: u32,
    pub states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl Basis {
    fn new(spec: BasisSpec, two_j: u32, states: Vec<BasisState>) -> Self {
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self { spec, two_j, states, index }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn j(&self) -> f64 {
        0.5 * self.two_j as f64
    }

    pub fn index_of(&self, n: u32, two_m: i32) -> Option<usize> {
        self.index.get(&BasisState { n, two_m }).copied()
    }
}

/// Parity `(-1)^(n + m + j)` of the product state `|n> |j, m>`.
pub fn fock_state_parity(n: u32, m: f64, j: f64) -> Result<Parity> {
    let two_j = 2.0 * j;
    if !(j > 0.0 && two_j.fract() == 0.0) {
        return Err(invalid("j", format!("{j} is not a positive half-integer")));
    }
    let k = m + j;
    if !(k.fract() == 0.0 && k >= 0.0 && k <= two_j) {
        return Err(invalid("m", format!("{m} is not a projection of spin {j}")));
    }
    Ok(Parity::from_exponent(n as i64 + k as i64))
}

fn fock_states(params: &ModelParams, parity: Option<Parity>) -> Vec<BasisState> {
    let two_j = params.two_j as i32;
    let mut states = Vec::new();
    for n in 0..=params.n_max {
        for k in 0..=two_j {
            if parity.is_none_or(|p| Parity::from_exponent(n as i64 + k as i64) == p) {
                states.push(BasisState { n, two_m: 2 * k - two_j });
            }
        }
    }
    states
}

/// Full product basis, `n` major and `m` ascending.
pub fn build_fock_basis(params: &ModelParams) -> Basis {
    let spec = BasisSpec { scheme: BasisScheme::Fock, parity: Parity::Plus, lambda: 0, n_max: params.n_max };
    Basis::new(spec, params.two_j, fock_states(params, None))
}

/// Product states of one parity, `n` major and `m` ascending.
pub fn build_fock_parity_basis(params: &ModelParams, parity: Parity) -> Basis {
    let spec = BasisSpec { scheme: BasisScheme::FockParity, parity, lambda: 0, n_max: params.n_max };
    Basis::new(spec, params.two_j, fock_states(params, Some(parity)))
}

/// Displacement `alpha(m') = -2 gamma m' / (omega sqrt(N))` of the oscillator
/// attached to the `J_x` eigenvalue `m'`.
pub fn displacement(params: &ModelParams, m: f64) -> f64 {
    -2.0 * params.gamma * m / (params.omega * params.n_atoms().sqrt())
}

/// Parity-adapted displaced basis, `N` major and `|m'|` ascending. The
/// `m' = 0` state exists only when `(-1)^N` equals the requested parity.
pub fn build_coherent_parity_basis(params: &ModelParams, parity: Parity) -> Result<Basis> {
    params.require_dicke()?;
    let two_j = params.two_j as i32;
    let mut states = Vec::new();
    for n in 0..=params.n_max {
        let mut two_m = two_j % 2;
        while two_m <= two_j {
            if two_m != 0 || Parity::from_exponent(n as i64) == parity {
                states.push(BasisState { n, two_m });
            }
            two_m += 2;
        }
    }
    let spec = BasisSpec { scheme: BasisScheme::CoherentParity, parity, lambda: 0, n_max: params.n_max };
    Ok(Basis::new(spec, params.two_j, states))
}

/// States `|lambda - j - m> |j, m>` of one excitation-number block, `m` ascending.
/// Dimension `min(lambda, 2j) + 1`.
pub fn build_tc_block(params: &ModelParams, lambda: u32) -> Result<Basis> {
    if params.model != Model::TavisCummings {
        return Err(ChaosError::WrongModel { required: "Tavis-Cummings" });
    }
    let two_j = params.two_j as i32;
    let k_max = (lambda as i32).min(two_j);
    let states = (0..=k_max)
        .map(|k| BasisState { n: lambda - k as u32, two_m: 2 * k - two_j })
        .collect();
    let spec = BasisSpec { scheme: BasisScheme::TcLambdaBlock, parity: Parity::Plus, lambda, n_max: lambda };
    Ok(Basis::new(spec, params.two_j, states))
}

/// Builds the basis described by `scheme` at the cutoff in `params`.
pub fn build_basis(params: &ModelParams, scheme: BasisScheme, parity: Parity, lambda: u32) -> Result<Basis> {
    match scheme {
        BasisScheme::Fock => Ok(build_fock_basis(params)),
        BasisScheme::FockParity => Ok(build_fock_parity_basis(params, parity)),
        BasisScheme::CoherentParity => build_coherent_parity_basis(params, parity),
        BasisScheme::TcLambdaBlock => build_tc_block(params, lambda),
    }
}
