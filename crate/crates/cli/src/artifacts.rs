//! Output directory bookkeeping: every file is written atomically and its
//! SHA-256 recorded for the manifest.

use std::path::{Path, PathBuf};

use frontlab_report::{chart_csv, csv_string, render_svg, sidecar_path, write_atomic, Chart};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// A file the run read: the configuration, or the table given to `plot`.
#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub seed: u64,
    pub outputs: Vec<Artifact>,
}

pub struct Artifacts {
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), data)?;
        self.written.push(Artifact {
            file: name.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len(),
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut data = serde_json::to_vec_pretty(value).map_err(frontlab_report::ReportError::from)?;
        data.push(b'\n');
        self.bytes(name, &data)
    }

    pub fn csv<I, R, S>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let text = csv_string(header, rows)?;
        self.bytes(name, text.as_bytes())
    }

    /// Writes `name` (an `.svg`) and its `.plot.csv` sidecar.
    pub fn chart(&mut self, name: &str, chart: &Chart) -> Result<(), CliError> {
        let sidecar = sidecar_path(Path::new(name));
        self.bytes(&sidecar.to_string_lossy(), chart_csv(chart)?.as_bytes())?;
        self.bytes(name, render_svg(chart).as_bytes())
    }

    /// Writes the manifest as `file_name` and removes an `error.json` left by
    /// an earlier failed run.
    pub fn finish(self, file_name: &str, command: &str, inputs: Vec<InputRecord>, seed: u64) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            tool: "frontlab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            inputs,
            seed,
            outputs: self.written,
        };
        let mut data = serde_json::to_vec_pretty(&manifest).map_err(frontlab_report::ReportError::from)?;
        data.push(b'\n');
        write_atomic(&self.dir.join(file_name), &data)?;
        let _ = std::fs::remove_file(self.dir.join("error.json"));
        Ok(manifest)
    }
}

/// `{:.12e}` for finite values, empty otherwise.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        String::new()
    }
}
