//! Output bundle: CSV tables, gnuplot scripts and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// One CSV table, built in memory and written in one go.
pub struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<String>,
}

/// A CSV cell. Floats use the shortest round-trip representation, so equal
/// values always print identically.
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(&'static str),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::U(v as usize)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<&'static str> for Cell {
    fn from(v: &'static str) -> Self {
        Cell::S(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.header.len(), "row width of {}", self.name);
        let mut line = String::new();
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            match c {
                Cell::F(v) => write!(line, "{v:?}"),
                Cell::I(v) => write!(line, "{v}"),
                Cell::U(v) => write!(line, "{v}"),
                Cell::S(v) => write!(line, "{v}"),
                Cell::B(v) => write!(line, "{}", u8::from(*v)),
            }
            .expect("writing to a String");
        }
        self.rows.push(line);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> usize {
        1 + self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {}", self.name))
    }
}

/// A gnuplot script reading the tables of the same run.
pub struct Plot {
    pub name: String,
    pub body: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub rows: Option<usize>,
    pub sha256: String,
}

/// Collects the files of one run and writes them under `dir`.
pub struct Bundle {
    dir: PathBuf,
    hash: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

impl Bundle {
    pub fn new(dir: &Path, hash: String) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), hash, artifacts: Vec::new() })
    }

    fn write(&mut self, file: &str, bytes: &[u8], rows: Option<usize>) -> Result<(), CliError> {
        let path = self.dir.join(file);
        write_atomic(&path, bytes).map_err(|source| CliError::Output { path: path.display().to_string(), source })?;
        self.artifacts.push(Artifact { file: file.to_string(), rows, sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Writes `<prefix><table name>.csv`: a comment line with the manifest
    /// hash, the header, then the rows.
    pub fn table(&mut self, prefix: &str, table: &Table) -> Result<String, CliError> {
        let file = format!("{prefix}{}.csv", table.name);
        let mut text = format!("# chaoslab manifest {}\n{}\n", self.hash, table.header.join(","));
        for r in &table.rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(&file, text.as_bytes(), Some(table.rows.len()))?;
        Ok(file)
    }

    pub fn plot(&mut self, prefix: &str, plot: &Plot) -> Result<(), CliError> {
        let file = format!("{prefix}{}.gp", plot.name);
        let text = format!(
            "# chaoslab manifest {}\nset datafile separator ','\nset key autotitle columnhead\n{}\n",
            self.hash,
            plot.body
        );
        self.write(&file, text.as_bytes(), None)
    }

    pub fn json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(file);
        write_atomic(&path, text.as_bytes()).map_err(|source| CliError::Output { path: path.display().to_string(), source })
    }
}
