//! `bai simulate`: PoE curves to CSV plus a reproducibility manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bai_core::simulation::{estimate_poe, PoECurve, RNG_METHOD};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigFile, Overrides};
use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";

/// One row of a PoE CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoeRow {
    pub algorithm: String,
    pub instance: String,
    pub t: u64,
    pub errors: u64,
    pub replications: u64,
    pub poe: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub instance: String,
    pub algorithm: String,
    pub budget: u64,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub rng_method: String,
    pub seed: u64,
    /// Effective configuration, overrides applied; feeding it back to
    /// `bai simulate --config` reproduces every CSV.
    pub config: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputEntry>,
}

pub fn csv_file_name(instance: &str, algorithm: &str) -> String {
    format!("poe_{instance}_{algorithm}.csv")
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn curve_rows(curve: &PoECurve, seed: u64) -> Vec<PoeRow> {
    curve
        .points
        .iter()
        .map(|p| PoeRow {
            algorithm: curve.algorithm.clone(),
            instance: curve.instance.clone(),
            t: p.t,
            errors: p.errors,
            replications: p.replications,
            poe: p.poe,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            seed,
        })
        .collect()
}

pub fn render_csv(rows: &[PoeRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses and validates the config, runs every (instance, algorithm) pair and
/// writes the CSVs and manifest into `out`. Nothing is written unless the
/// whole configuration validates.
pub fn run(config_path: &Path, out: &Path, overrides: &Overrides, workers: Option<usize>) -> CliResult<Vec<PathBuf>> {
    let text = fs::read_to_string(config_path).map_err(|e| CliError::io(config_path, e))?;
    let mut cfg = ConfigFile::parse(&text)?;
    cfg.apply(overrides);
    let experiments = cfg.experiments()?;
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }

    let started = unix_now();
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut outputs = Vec::new();
    let mut written = Vec::new();
    for exp in &experiments {
        for curve in estimate_poe(exp, workers)? {
            let rows = curve_rows(&curve, exp.seed);
            let bytes = render_csv(&rows);
            let name = csv_file_name(&curve.instance, &curve.algorithm);
            let path = out.join(&name);
            fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
            outputs.push(OutputEntry {
                file: name,
                instance: curve.instance.clone(),
                algorithm: curve.algorithm.clone(),
                budget: exp.budget,
                rows: rows.len(),
                sha256: sha256_hex(&bytes),
            });
            written.push(path);
        }
    }
    let manifest = RunManifest {
        tool: "bai".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng_method: RNG_METHOD.into(),
        seed: cfg.experiment.seed,
        config: cfg.to_toml(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs,
    };
    let path = out.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn read_poe_csv(path: &Path) -> CliResult<Vec<PoeRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<PoeRow>, _>>()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
