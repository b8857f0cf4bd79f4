//! Spectra of one symmetry block with Peres observables and a cutoff
//! convergence test.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::model::{ModelParams, Parity};

use super::basis::{build_basis, Basis, BasisScheme, BasisSpec};
use super::eigen::{diagonalize, Eigen};
use super::hamiltonian::{assemble_hamiltonian, coherent_diagonal, coherent_photon_number, product_observables, DEFAULT_MAX_DIM};

/// Per-state expectation values, each divided by `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeresObservables {
    pub jz: f64,
    pub jx2: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_max_low: u32,
    pub n_max_high: u32,
    pub tolerance: f64,
    /// `|E_i(low) - E_i(high)|` for every state of the smaller basis.
    pub delta: Vec<f64>,
    /// Length of the longest prefix with `delta < tolerance`.
    pub converged_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBlock {
    pub params: ModelParams,
    pub basis: BasisSpec,
    pub energies: Vec<f64>,
    pub scaled_energies: Vec<f64>,
    /// Empty unless observables were requested.
    pub observables: Vec<PeresObservables>,
    pub converged_count: usize,
    pub convergence: Option<ConvergenceReport>,
    /// Indices `i` with `E_{i+1} - E_i < 1e-12 omega0`: unexpected within one
    /// symmetry block, kept for review.
    pub near_degenerate: Vec<usize>,
}

impl SpectrumBlock {
    /// Energies of the converged prefix.
    pub fn converged_energies(&self) -> &[f64] {
        &self.energies[..self.converged_count]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub scheme: BasisScheme,
    pub parity: Parity,
    /// Excitation number for `TcLambdaBlock`.
    pub lambda: u32,
    pub observables: bool,
    /// Convergence tolerance in energy units; `None` means `1e-6 omega0`.
    pub tolerance: Option<f64>,
    /// Extra cutoff for the convergence check; `None` means `max(10, n_max/10)`;
    /// `Some(0)` skips the check and marks every state converged.
    pub cutoff_step: Option<u32>,
    pub max_dim: usize,
    pub exec: Exec,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            scheme: BasisScheme::CoherentParity,
            parity: Parity::Plus,
            lambda: 0,
            observables: false,
            tolerance: None,
            cutoff_step: None,
            max_dim: DEFAULT_MAX_DIM,
            exec: Exec::Parallel,
        }
    }
}

pub fn default_cutoff_step(n_max: u32) -> u32 {
    (n_max / 10).max(10)
}

pub fn default_tolerance(params: &ModelParams) -> f64 {
    1e-6 * params.omega0
}

fn solve(params: &ModelParams, opts: &SpectrumOptions, vectors: bool) -> Result<(Basis, Eigen)> {
    let basis = build_basis(params, opts.scheme, opts.parity, opts.lambda)?;
    let h = assemble_hamiltonian(&basis, params, opts.max_dim)?;
    let eig = diagonalize(&h, vectors, opts.exec)?;
    Ok((basis, eig))
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(params: &ModelParams, opts: &SpectrumOptions) -> Result<Vec<f64>> {
    Ok(solve(params, opts, false)?.1.values)
}

/// Compares eigenvalues index by index. Because the truncated bases are nested,
/// each eigenvalue can only move down as the cutoff grows.
pub fn convergence_report(low: &[f64], high: &[f64], n_max_low: u32, n_max_high: u32, tolerance: f64) -> ConvergenceReport {
    let delta: Vec<f64> = low.iter().zip(high).map(|(a, b)| (a - b).abs()).collect();
    let converged_count = delta.iter().take_while(|d| **d < tolerance).count();
    ConvergenceReport { n_max_low, n_max_high, tolerance, delta, converged_count }
}

/// Re-diagonalizes at `n_max` and `n_max + cutoff_step`.
pub fn check_convergence(params: &ModelParams, opts: &SpectrumOptions) -> Result<ConvergenceReport> {
    let tolerance = opts.tolerance.unwrap_or_else(|| default_tolerance(params));
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    let step = opts.cutoff_step.unwrap_or_else(|| default_cutoff_step(params.n_max)).max(1);
    let low = eigenvalues(params, opts)?;
    let high = eigenvalues(&params.with_n_max(params.n_max + step), opts)?;
    Ok(convergence_report(&low, &high, params.n_max, params.n_max + step, tolerance))
}

/// `<J_z>/j`, `<J_x^2>/j`, `<a^dag a>/j` for the first `count` eigenvectors.
pub fn peres_observables(basis: &Basis, params: &ModelParams, eig: &Eigen, count: usize) -> Result<Vec<PeresObservables>> {
    let u = eig.vectors.as_ref().ok_or_else(|| invalid("eigen", "eigenvectors were not computed"))?;
    let j = basis.j();
    let count = count.min(eig.values.len());
    let out = match basis.spec.scheme {
        super::basis::BasisScheme::CoherentParity => {
            // H = D + omega0 J_z with D diagonal, so <J_z> = (E - <D>) / omega0.
            let diag = coherent_diagonal(basis, params);
            let photons = coherent_photon_number(basis, params);
            (0..count)
                .map(|k| {
                    let v = u.col(k);
                    let d: f64 = diag.iter().enumerate().map(|(i, x)| x * v[i] * v[i]).sum();
                    let jx2: f64 = basis.states.iter().enumerate().map(|(i, s)| s.m() * s.m() * v[i] * v[i]).sum();
                    PeresObservables {
                        jz: (eig.values[k] - d) / params.omega0 / j,
                        jx2: jx2 / j,
                        n: photons.expectation(v) / j,
                    }
                })
                .collect()
        }
        _ => {
            let [jz, jx2, n] = product_observables(basis);
            (0..count)
                .map(|k| {
                    let v = u.col(k);
                    PeresObservables { jz: jz.expectation(v) / j, jx2: jx2.expectation(v) / j, n: n.expectation(v) / j }
                })
                .collect()
        }
    };
    Ok(out)
}

/// Diagonalizes one block, optionally with Peres observables, and runs the
/// cutoff convergence check.
pub fn compute_spectrum(params: &ModelParams, opts: &SpectrumOptions) -> Result<SpectrumBlock> {
    let (basis, eig) = solve(params, opts, opts.observables)?;
    let tolerance = opts.tolerance.unwrap_or_else(|| default_tolerance(params));
    let step = if opts.scheme == BasisScheme::TcLambdaBlock {
        // Excitation-number blocks are finite and exact.
        0
    } else {
        opts.cutoff_step.unwrap_or_else(|| default_cutoff_step(params.n_max))
    };
    let convergence = if step == 0 {
        None
    } else {
        let high = eigenvalues(&params.with_n_max(params.n_max + step), opts)?;
        Some(convergence_report(&eig.values, &high, params.n_max, params.n_max + step, tolerance))
    };
    let converged_count = convergence.as_ref().map_or(eig.values.len(), |c| c.converged_count);
    let observables = if opts.observables { peres_observables(&basis, params, &eig, eig.values.len())? } else { Vec::new() };
    let scale = params.energy_scale();
    let near_degenerate: Vec<usize> = eig
        .values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] < 1e-12 * params.omega0)
        .map(|(i, _)| i)
        .collect();
    if !near_degenerate.is_empty() {
        log::warn!("{} near-degenerate gaps inside one symmetry block", near_degenerate.len());
    }
    Ok(SpectrumBlock {
        params: *params,
        basis: basis.spec,
        scaled_energies: eig.values.iter().map(|e| e / scale).collect(),
        energies: eig.values,
        observables,
        converged_count,
        convergence,
        near_degenerate,
    })
}

/// Pairs `(i, k)` with `|E_plus[i] - E_minus[k]| < tol`, matched greedily in
/// order. Reported for inspection; the sectors are never merged.
pub fn parity_doublets(plus: &[f64], minus: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    for (i, &e) in plus.iter().enumerate() {
        while k < minus.len() && minus[k] < e - tol {
            k += 1;
        }
        if k < minus.len() && (minus[k] - e).abs() < tol {
            out.push((i, k));
            k += 1;
        }
    }
    out
}
