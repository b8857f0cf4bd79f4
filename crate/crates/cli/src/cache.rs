//! On-disk cache of solved spectra keyed by the model parameters, the
//! cutoff and the symmetry block. Writers replace entries by atomic rename, so
//! a reader never sees a partial file.

use std::path::PathBuf;

use serde::Serialize;

use chaoslab_core::quantum::{compute_spectrum, SpectrumBlock, SpectrumOptions};
use chaoslab_core::ModelParams;

use crate::output::{sha256_hex, write_atomic};

#[derive(Serialize)]
struct Key<'a> {
    model: &'a str,
    omega: f64,
    omega0: f64,
    gamma: f64,
    two_j: u32,
    n_max: u32,
    parity: &'a str,
    basis: &'a str,
    tolerance: Option<f64>,
    cutoff_step: Option<u32>,
}

pub struct SpectrumCache {
    dir: Option<PathBuf>,
}

impl SpectrumCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn path(&self, params: &ModelParams, opts: &SpectrumOptions) -> Option<PathBuf> {
        let key = Key {
            model: match params.model {
                chaoslab_core::Model::Dicke => "dicke",
                chaoslab_core::Model::TavisCummings => "tc",
            },
            omega: params.omega,
            omega0: params.omega0,
            gamma: params.gamma,
            two_j: params.two_j,
            n_max: params.n_max,
            parity: opts.parity.label(),
            basis: opts.scheme.label(),
            tolerance: opts.tolerance,
            cutoff_step: opts.cutoff_step,
        };
        let text = serde_json::to_string(&key).expect("key serializes");
        Some(self.dir.as_ref()?.join(format!("spectrum-{}.json", &sha256_hex(text.as_bytes())[..24])))
    }

    /// Cached spectrum if one with the requested observables exists,
    /// otherwise solves and stores it. Cache faults only cost a recomputation.
    pub fn spectrum(&self, params: &ModelParams, opts: &SpectrumOptions) -> chaoslab_core::Result<SpectrumBlock> {
        let path = self.path(params, opts);
        if let Some(path) = &path {
            if let Ok(text) = std::fs::read_to_string(path) {
                match serde_json::from_str::<SpectrumBlock>(&text) {
                    Ok(block) if block.params == *params && (!opts.observables || !block.observables.is_empty()) => {
                        log::info!("spectrum cache hit {}", path.display());
                        return Ok(block);
                    }
                    Ok(_) => {}
                    Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
                }
            }
        }
        let block = compute_spectrum(params, opts)?;
        if let Some(path) = &path {
            let stored = path.parent().map(std::fs::create_dir_all).transpose().and_then(|_| {
                write_atomic(path, serde_json::to_string(&block).expect("spectrum serializes").as_bytes())
            });
            if let Err(e) = stored {
                log::warn!("could not store {} in the cache: {e}", path.display());
            }
        }
        Ok(block)
    }
}
