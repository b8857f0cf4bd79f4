//! Flat key-value experiment configuration: a TOML file plus `--set k=v`
//! overrides, resolved into a fully explicit [`Resolved`] record.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::Value;

use chaoslab_core::quantum::BasisScheme;
use chaoslab_core::{Exec, Model, ModelParams, Parity};

use crate::error::CliError;

/// Experiment kinds that run a single pipeline.
pub const KINDS: [&str; 8] = ["spectrum", "peres", "tc-gaps", "poincare", "lyapunov-map", "dos", "adscan", "vmap"];

const KEYS: [&str; 34] = [
    "kind",
    "model",
    "omega",
    "omega0",
    "gamma",
    "gamma_over_gc",
    "j",
    "n_max",
    "parity",
    "basis",
    "tolerance",
    "cutoff_step",
    "max_dim",
    "lambda_max",
    "energies",
    "seeds",
    "seed_grid",
    "t_end",
    "max_points",
    "window",
    "step",
    "eps_min",
    "eps_max",
    "eps_step",
    "dos_resolution",
    "ratios",
    "samples",
    "seed",
    "exec",
    "gnuplot",
    "cache",
    "cache_dir",
    "observables",
    "label",
];

/// Raw key-value layer before validation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, Value>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config("config", e.message().to_string()))?;
        let mut raw = Self::default();
        for (k, v) in table {
            if matches!(v, Value::Table(_)) {
                return Err(CliError::config(&k, "nested tables are not supported; the configuration is flat"));
            }
            raw.insert(k, v)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, key: String, value: Value) -> Result<(), CliError> {
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(&key, format!("unknown key; known keys are {}", KEYS.join(", "))));
        }
        self.values.insert(key, value);
        Ok(())
    }

    /// Applies one `key=value` override. The value is read as a TOML value,
    /// falling back to a bare string (`--set parity=minus`).
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(assignment, "override must have the form key=value"))?;
        let key = key.trim();
        let parsed = format!("v = {}", value.trim())
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(value.trim().to_string()));
        self.insert(key.to_string(), parsed)
    }

    /// Layers `other` on top of `self`.
    pub fn merged(mut self, other: &RawConfig) -> Self {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(n)) => Ok(Some(*n as f64)),
            Some(v) => Err(CliError::config(key, format!("expected a number, got {v}"))),
        }
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    fn uint(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(n)) if *n >= 0 => Ok(Some(*n as u64)),
            Some(v) => Err(CliError::config(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn uint_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self.uint(key)?.unwrap_or(default))
    }

    fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(CliError::config(key, format!("expected a string, got {v}"))),
        }
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(CliError::config(key, format!("expected true or false, got {v}"))),
        }
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let items = match self.get(key) {
            None => return Ok(None),
            Some(Value::Array(items)) => items.clone(),
            Some(v @ (Value::Float(_) | Value::Integer(_))) => vec![v.clone()],
            Some(v) => return Err(CliError::config(key, format!("expected a list of numbers, got {v}"))),
        };
        items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(n) => Ok(*n as f64),
                other => Err(CliError::config(key, format!("expected a number in the list, got {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

/// Coupling as given by the user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    Gamma(f64),
    GammaOverGc(f64),
}

/// Fully resolved configuration: every default filled in. Serialized into the
/// manifest and hashed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub kind: String,
    pub label: String,
    pub model: Model,
    pub omega: f64,
    pub omega0: f64,
    pub coupling: Option<Coupling>,
    /// Resolved absolute coupling, when one was given.
    pub gamma: Option<f64>,
    pub gamma_over_gc: Option<f64>,
    pub j: f64,
    pub n_max: u32,
    pub parity: Parity,
    pub basis: BasisScheme,
    pub observables: bool,
    pub tolerance: Option<f64>,
    pub cutoff_step: Option<u32>,
    pub max_dim: usize,
    pub lambda_max: u32,
    pub energies: Vec<f64>,
    pub seeds: usize,
    pub seed_grid: usize,
    pub t_end: f64,
    pub max_points: usize,
    pub window: usize,
    pub step: usize,
    pub eps_min: Option<f64>,
    pub eps_max: f64,
    pub eps_step: f64,
    pub dos_resolution: usize,
    pub ratios: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
    pub gnuplot: bool,
    pub cache: bool,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<Model, CliError> {
    match s {
        "dicke" => Ok(Model::Dicke),
        "tc" | "tavis-cummings" => Ok(Model::TavisCummings),
        _ => Err(CliError::config("model", format!("`{s}` is not one of dicke, tc"))),
    }
}

fn parse_parity(s: &str) -> Result<Parity, CliError> {
    match s {
        "plus" | "+" | "+1" => Ok(Parity::Plus),
        "minus" | "-" | "-1" => Ok(Parity::Minus),
        _ => Err(CliError::config("parity", format!("`{s}` is not one of plus, minus"))),
    }
}

fn parse_basis(s: &str) -> Result<BasisScheme, CliError> {
    match s {
        "fock" => Ok(BasisScheme::Fock),
        "fock_parity" => Ok(BasisScheme::FockParity),
        "coherent_parity" => Ok(BasisScheme::CoherentParity),
        _ => Err(CliError::config("basis", format!("`{s}` is not one of fock, fock_parity, coherent_parity"))),
    }
}

fn parse_exec(s: &str) -> Result<Exec, CliError> {
    match s {
        "parallel" => Ok(Exec::Parallel),
        "sequential" => Ok(Exec::Sequential),
        _ => Err(CliError::config("exec", format!("`{s}` is not one of parallel, sequential"))),
    }
}

fn default_ratios() -> Vec<f64> {
    let below = (1..=9).map(|k| k as f64 / 10.0);
    let above = (11..=30).map(|k| k as f64 / 10.0);
    below.chain(above).collect()
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn to_u32(key: &str, v: u64) -> Result<u32, CliError> {
    u32::try_from(v).map_err(|_| CliError::config(key, format!("{v} is too large")))
}

impl RawConfig {
    /// Validates and fills defaults for `kind`.
    pub fn resolve(&self, kind: &str) -> Result<Resolved, CliError> {
        if let Some(k) = self.string("kind")? {
            if k != kind {
                return Err(CliError::config("kind", format!("config declares `{k}` but `{kind}` was requested")));
            }
        }
        let model = parse_model(&self.string("model")?.unwrap_or_else(|| "dicke".into()))?;
        let omega = self.float_or("omega", 1.0)?;
        let omega0 = self.float_or("omega0", 1.0)?;
        for (key, v) in [("omega", omega), ("omega0", omega0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(key, "must be positive"));
            }
        }
        let coupling = match (self.float("gamma")?, self.float("gamma_over_gc")?) {
            (Some(_), Some(_)) => return Err(CliError::config("gamma_over_gc", "give exactly one of gamma and gamma_over_gc")),
            (Some(g), None) => Some(Coupling::Gamma(g)),
            (None, Some(r)) => Some(Coupling::GammaOverGc(r)),
            (None, None) => None,
        };
        let ratios = self.floats("ratios")?;
        let needs_coupling = !(kind == "vmap" && ratios.is_some());
        if needs_coupling && coupling.is_none() {
            return Err(CliError::config("gamma_over_gc", "missing coupling: set gamma or gamma_over_gc"));
        }
        let j = self.float("j")?.ok_or_else(|| CliError::config("j", "missing pseudospin length j"))?;
        let two_j = 2.0 * j;
        if !(two_j >= 1.0 && (two_j - two_j.round()).abs() < 1e-9 && two_j < u32::MAX as f64) {
            return Err(CliError::config("j", format!("{j} is not a positive integer or half-integer")));
        }
        let quantum_dicke = model == Model::Dicke && matches!(kind, "spectrum" | "peres" | "adscan");
        let n_max = match self.uint("n_max")? {
            Some(n) => to_u32("n_max", n)?,
            None if quantum_dicke => return Err(CliError::config("n_max", "missing boson cutoff n_max")),
            None => 0,
        };
        if model == Model::TavisCummings && matches!(kind, "dos" | "adscan" | "vmap") {
            return Err(CliError::config("model", format!("`{kind}` requires the Dicke model")));
        }
        if model == Model::Dicke && kind == "tc-gaps" {
            return Err(CliError::config("model", "`tc-gaps` requires model = \"tc\""));
        }
        let energies = self.floats("energies")?.unwrap_or_default();
        if matches!(kind, "poincare" | "lyapunov-map") && energies.is_empty() {
            return Err(CliError::config("energies", "list the scaled energies E/(omega0 j) of the shells"));
        }
        let window = self.uint_or("window", 301)? as usize;
        let step = self.uint_or("step", 25)? as usize;
        if window < 3 {
            return Err(CliError::config("window", "needs at least 3 levels"));
        }
        if step == 0 {
            return Err(CliError::config("step", "must be positive"));
        }
        let eps_step = self.float_or("eps_step", 0.01)?;
        if !(eps_step > 0.0) {
            return Err(CliError::config("eps_step", "must be positive"));
        }
        let t_end = self.float_or("t_end", 1000.0)?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(CliError::config("t_end", "must be positive"));
        }
        let seeds = self.uint_or("seeds", 24)? as usize;
        if seeds == 0 {
            return Err(CliError::config("seeds", "must be positive"));
        }
        let samples = self.uint_or("samples", 10_000)? as usize;
        if samples == 0 {
            return Err(CliError::config("samples", "must be positive"));
        }
        let tolerance = self.float("tolerance")?;
        if tolerance.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::config("tolerance", "must be positive"));
        }
        let mut resolved = Resolved {
            kind: kind.to_string(),
            label: self.string("label")?.unwrap_or_default(),
            model,
            omega,
            omega0,
            coupling,
            gamma: None,
            gamma_over_gc: None,
            j,
            n_max,
            parity: parse_parity(&self.string("parity")?.unwrap_or_else(|| "plus".into()))?,
            basis: parse_basis(&self.string("basis")?.unwrap_or_else(|| "coherent_parity".into()))?,
            observables: self.boolean("observables", kind == "peres")?,
            tolerance,
            cutoff_step: self.uint("cutoff_step")?.map(|v| to_u32("cutoff_step", v)).transpose()?,
            max_dim: self.uint_or("max_dim", chaoslab_core::quantum::DEFAULT_MAX_DIM as u64)? as usize,
            lambda_max: to_u32("lambda_max", self.uint_or("lambda_max", 60)?)?,
            energies,
            seeds,
            seed_grid: self.uint_or("seed_grid", 40)? as usize,
            t_end,
            max_points: self.uint_or("max_points", 2000)? as usize,
            window,
            step,
            eps_min: self.float("eps_min")?,
            eps_max: self.float_or("eps_max", 2.0)?,
            eps_step,
            dos_resolution: self.uint_or("dos_resolution", 400)? as usize,
            ratios: ratios.clone().unwrap_or_default(),
            samples,
            seed: self.uint_or("seed", 0x5eed)?,
            exec: parse_exec(&self.string("exec")?.unwrap_or_else(|| "parallel".into()))?,
            gnuplot: self.boolean("gnuplot", true)?,
            cache: self.boolean("cache", true)?,
            cache_dir: self.string("cache_dir")?.map(PathBuf::from),
        };
        if kind == "vmap" && self.get("energies").is_none() {
            resolved.energies = grid(-2.5, 3.0, 0.1).into_iter().map(|e| (e * 1e9).round() / 1e9).collect();
        }
        if let Some(c) = coupling {
            let p = resolved.params_with(c)?;
            resolved.gamma = Some(p.gamma);
            resolved.gamma_over_gc = Some(p.gamma_ratio());
        }
        if kind == "vmap" && ratios.is_none() {
            // A single coupling gives one column of the map; none gives the full grid.
            resolved.ratios = resolved.gamma_over_gc.map_or_else(default_ratios, |r| vec![r]);
        }
        Ok(resolved)
    }
}

impl Resolved {
    pub fn two_j(&self) -> u32 {
        (2.0 * self.j).round() as u32
    }

    fn params_with(&self, coupling: Coupling) -> Result<ModelParams, CliError> {
        let key = match coupling {
            Coupling::Gamma(_) => "gamma",
            Coupling::GammaOverGc(_) => "gamma_over_gc",
        };
        let base = ModelParams::new(self.model, self.omega, self.omega0, 0.0, self.two_j(), self.n_max)
            .map_err(|e| CliError::config("j", e.to_string()))?;
        let p = match coupling {
            Coupling::Gamma(g) => ModelParams { gamma: g, ..base },
            Coupling::GammaOverGc(r) => base.with_gamma_ratio(r),
        };
        p.validate().map_err(|e| CliError::config(key, e.to_string()))?;
        Ok(p)
    }

    /// Model parameters for the configured coupling.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let c = self.coupling.ok_or_else(|| CliError::config("gamma_over_gc", "missing coupling: set gamma or gamma_over_gc"))?;
        self.params_with(c)
    }

    /// Model parameters at coupling ratio `ratio`, for coupling sweeps.
    pub fn params_at_ratio(&self, ratio: f64) -> Result<ModelParams, CliError> {
        self.params_with(Coupling::GammaOverGc(ratio))
    }
}
