//! Output directory ownership, file inventory, plot data and the run manifest.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use kuramoto_core::export::num;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Result, RunError};

pub const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".kuramoto.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Renamed {
    pub requested: String,
    pub written: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    ChecksFailed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub code_version: String,
    pub status: Status,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub config: RunConfig,
    pub timings: Vec<StageTiming>,
    pub checks: Vec<CheckResult>,
    pub files: Vec<FileEntry>,
    pub renamed_series: Vec<Renamed>,
}

impl RunManifest {
    pub fn all_passed(&self) -> bool {
        self.status == Status::Passed
    }
}

/// A named set of columns written as CSV with a plot descriptor next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

impl Series {
    pub fn new(name: &str, title: &str, columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            x_label: columns.first().map(|c| c.to_string()).unwrap_or_default(),
            y_label: columns.get(1).map(|c| c.to_string()).unwrap_or_default(),
            rows,
            log_x: false,
            log_y: false,
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn labels(mut self, x: &str, y: &str) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotDescriptor {
    pub title: String,
    pub data: String,
    pub x: String,
    pub y: Vec<String>,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

/// Owns the output directory for the duration of a run.
pub struct Output {
    root: PathBuf,
    files: Vec<String>,
    series: HashSet<String>,
    renamed: Vec<Renamed>,
    timings: Vec<StageTiming>,
    checks: Vec<CheckResult>,
    stage: Option<String>,
    pub quiet: bool,
}

impl Output {
    pub fn open(root: &Path, quiet: bool) -> Result<Self> {
        fs::create_dir_all(root)?;
        let lock = root.join(LOCK);
        OpenOptions::new().write(true).create_new(true).open(&lock).map_err(|e| match e.kind() {
            std::io::ErrorKind::AlreadyExists => RunError::Locked(root.display().to_string()),
            _ => RunError::Io(e),
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            series: HashSet::new(),
            renamed: Vec::new(),
            timings: Vec::new(),
            checks: Vec::new(),
            stage: None,
            quiet,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for a file written under the root; the file joins the inventory.
    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.root.join(name)
    }

    /// Runs `f` as a named stage and records its wall-clock time.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.stage = Some(name.to_string());
        if !self.quiet {
            eprintln!("stage {name}");
        }
        let t = Instant::now();
        let out = f(self)?;
        self.timings.push(StageTiming { stage: name.to_string(), seconds: t.elapsed().as_secs_f64() });
        self.stage = None;
        Ok(out)
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        if !self.quiet {
            eprintln!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        }
        self.checks.push(CheckResult { name: name.into(), pass, detail });
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        self.core(kuramoto_core::export::write_json(&p, value))
    }

    /// Attaches the current stage to a core result.
    pub fn core<T>(&self, r: kuramoto_core::Result<T>) -> Result<T> {
        r.map_err(|source| RunError::Stage { stage: self.stage.clone().unwrap_or_else(|| "output".into()), source })
    }

    /// Opens a file for streaming output; it is added to the inventory.
    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        Ok(BufWriter::new(File::create(p)?))
    }

    /// One CSV plus one descriptor per series. Duplicate names get a -2, -3, ... suffix.
    pub fn emit_plotdata(&mut self, series: &[Series]) -> Result<Vec<String>> {
        let mut written = Vec::with_capacity(series.len());
        for s in series {
            if s.columns.is_empty() || s.rows.is_empty() || s.rows.iter().any(|r| r.len() != s.columns.len()) {
                return Err(RunError::Series(s.name.clone()));
            }
            let mut name = s.name.clone();
            let mut k = 2;
            while self.series.contains(&name) {
                name = format!("{}-{k}", s.name);
                k += 1;
            }
            if name != s.name {
                self.renamed.push(Renamed { requested: s.name.clone(), written: name.clone() });
            }
            self.series.insert(name.clone());
            let csv = format!("{name}.csv");
            let mut w = self.create(&csv)?;
            writeln!(w, "{}", s.columns.join(","))?;
            for r in &s.rows {
                writeln!(w, "{}", r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","))?;
            }
            w.flush()?;
            let d = PlotDescriptor {
                title: s.title.clone(),
                data: csv,
                x: s.columns[0].clone(),
                y: s.columns[1..].to_vec(),
                x_label: s.x_label.clone(),
                y_label: s.y_label.clone(),
                log_x: s.log_x,
                log_y: s.log_y,
            };
            self.json(&format!("{name}.plot.json"), &d)?;
            written.push(name);
        }
        Ok(written)
    }

    fn inventory(&self) -> Result<Vec<FileEntry>> {
        self.files
            .iter()
            .map(|f| {
                let bytes = fs::read(self.root.join(f))?;
                let digest = Sha256::digest(&bytes);
                Ok(FileEntry {
                    path: f.clone(),
                    bytes: bytes.len() as u64,
                    sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
                })
            })
            .collect()
    }

    /// Writes the manifest atomically and releases the directory.
    pub fn finish(self, config: &RunConfig, error: Option<&RunError>) -> Result<RunManifest> {
        let status = match error {
            Some(_) => Status::Error,
            None if self.checks.iter().all(|c| c.pass) => Status::Passed,
            None => Status::ChecksFailed,
        };
        let files = self.inventory().unwrap_or_default();
        let m = RunManifest {
            experiment: config.experiment.name().to_string(),
            code_version: format!("kuramoto-runner {}", env!("CARGO_PKG_VERSION")),
            status,
            failed_stage: error.and(self.stage.clone()),
            error: error.map(|e| e.to_string()),
            config: config.clone(),
            timings: self.timings.clone(),
            checks: self.checks.clone(),
            files,
            renamed_series: self.renamed.clone(),
        };
        let tmp = self.root.join(format!("{MANIFEST}.tmp"));
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer_pretty(&mut w, &m).map_err(|e| RunError::Io(e.into()))?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        fs::rename(&tmp, self.root.join(MANIFEST))?;
        Ok(m)
    }
}

impl Drop for Output {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK));
    }
}
