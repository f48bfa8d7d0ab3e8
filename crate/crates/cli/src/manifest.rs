//! Run manifests: an auditable record written by every command, including
//! failed ones.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::AppError;

#[derive(Debug, Serialize)]
pub struct StageReport {
    pub name: String,
    pub iterations: usize,
    pub final_residual_rel: f64,
    pub converged: bool,
}

#[derive(Debug, Serialize)]
pub struct NamedNorms {
    pub name: String,
    pub l2_rel: f64,
    pub linf_rel: f64,
    pub linf_abs: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageReport>,
    pub error_norms: Vec<NamedNorms>,
    /// Free-form per-command tables (per-slice errors, per-seed outcomes).
    pub tables: BTreeMap<String, serde_json::Value>,
    pub files: Vec<String>,
    pub error: Option<String>,
    /// Wall-clock only; everything above is deterministic for a fixed config.
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("phaselab".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            command: command.to_string(),
            config: BTreeMap::new(),
            versions,
            stages: Vec::new(),
            error_norms: Vec::new(),
            tables: BTreeMap::new(),
            files: Vec::new(),
            error: None,
            timing: Timing {
                wall_clock_seconds: 0.0,
            },
        }
    }

    pub fn add_stage(&mut self, name: &str, report: &phaselab::sparse::CgReport) {
        self.stages.push(StageReport {
            name: name.to_string(),
            iterations: report.iterations,
            final_residual_rel: report.final_residual_rel,
            converged: report.converged,
        });
    }

    pub fn add_norms(&mut self, name: &str, norms: &phaselab::ErrorNorms) {
        self.error_norms.push(NamedNorms {
            name: name.to_string(),
            l2_rel: norms.l2_rel,
            linf_rel: norms.linf_rel,
            linf_abs: norms.linf_abs,
        });
    }

    pub fn add_file(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }

    /// Serialize with sorted keys and write `manifest.json` under `dir`.
    pub fn write(&mut self, dir: &Path, started: Instant) -> Result<(), AppError> {
        self.timing.wall_clock_seconds = started.elapsed().as_secs_f64();
        std::fs::create_dir_all(dir)
            .map_err(|e| AppError::Io(format!("creating {}: {e}", dir.display())))?;
        let value = serde_json::to_value(self)
            .map_err(|e| AppError::Io(format!("serializing manifest: {e}")))?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&value)
            .map_err(|e| AppError::Io(format!("serializing manifest: {e}")))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| AppError::Io(format!("writing {}: {e}", path.display())))
    }
}
