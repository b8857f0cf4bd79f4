//! Tavis-Cummings spectra block by block in the excitation number `lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{ChaosError, Result};
use crate::exec::Exec;
use crate::model::{Model, ModelParams};

use super::basis::BasisScheme;
use super::spectrum::{compute_spectrum, SpectrumBlock, SpectrumOptions};

/// Smallest spacing between consecutive levels of one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcGap {
    pub lambda: u32,
    pub gap: f64,
    /// Midpoint of the two levels, energy units.
    pub energy: f64,
    pub epsilon: f64,
}

fn require_tc(params: &ModelParams) -> Result<()> {
    match params.model {
        Model::TavisCummings => Ok(()),
        Model::Dicke => Err(ChaosError::WrongModel { required: "Tavis-Cummings" }),
    }
}

/// Spectrum and observables of the block with excitation number `lambda`.
pub fn tc_block_spectrum(params: &ModelParams, lambda: u32, exec: Exec) -> Result<SpectrumBlock> {
    require_tc(params)?;
    compute_spectrum(
        params,
        &SpectrumOptions { scheme: BasisScheme::TcLambdaBlock, lambda, observables: true, exec: Exec::Sequential, ..Default::default() }
            .with_exec(exec),
    )
}

impl SpectrumOptions {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// All blocks `0..=lambda_max`, computed independently.
pub fn tc_lattice(params: &ModelParams, lambda_max: u32, exec: Exec) -> Result<Vec<SpectrumBlock>> {
    require_tc(params)?;
    // Blocks are tiny; parallelize across blocks rather than inside each solve.
    exec.map_range(lambda_max as usize + 1, |l| tc_block_spectrum(params, l as u32, Exec::Sequential))
        .into_iter()
        .collect()
}

/// Per-block minimal nearest-level gap; blocks of dimension one are skipped.
pub fn tc_gap_minima(params: &ModelParams, lambda_max: u32, exec: Exec) -> Result<Vec<TcGap>> {
    let blocks = tc_lattice(params, lambda_max, exec)?;
    Ok(blocks.iter().filter_map(|b| block_gap(params, b)).collect())
}

fn block_gap(params: &ModelParams, block: &SpectrumBlock) -> Option<TcGap> {
    let (i, gap) = block
        .energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let energy = 0.5 * (block.energies[i] + block.energies[i + 1]);
    Some(TcGap { lambda: block.basis.lambda, gap, energy, epsilon: energy / params.energy_scale() })
}
