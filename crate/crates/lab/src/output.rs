use crate::config::ExperimentConfig;
use crate::plot::Plot;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    /// Acceptance criterion this check belongs to; 0 for experiment-local checks.
    pub criterion: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(criterion: u8, name: &str, pass: bool, detail: String) -> Self {
        Check { criterion, name: name.into(), pass, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
}

impl ExperimentManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Output directory that records a checksum for every file it writes.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        let digest = Sha256::digest(bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        self.files.retain(|f| f.path != name);
        self.files.push(OutputFile { path: name.into(), sha256: hex, bytes: bytes.len() });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> std::io::Result<()> {
        let mut s = String::from(header);
        s.push('\n');
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> std::io::Result<()> {
        self.write(name, plot.render().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        self.write(name, s.as_bytes())
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }
}
