//! Output files: encoders, the run manifest and the matching importers.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use combsense::estimation::ReconstructedCovariance;
use combsense::io::{read_covariance_csv, write_covariance_csv};
use combsense::scenario::{Comparison, HeadlineValue, ModeRecovery, SensitivityTable, Setup};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One file of a scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// One point of an SNR-versus-depth curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub case: String,
    pub parameter: String,
    pub depth: f64,
    pub snr: f64,
    pub snr_sem: f64,
}

/// Extracted supermode, leading first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupermodeRow {
    pub index: usize,
    pub var_x: f64,
    pub var_p: f64,
    pub db_x: f64,
    pub db_p: f64,
    pub squeezing_db: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupermodeReport {
    pub n_samples: usize,
    pub modes: Vec<ModeRecovery>,
    pub spectrum: Vec<SupermodeRow>,
}

/// An acceptance threshold evaluated on a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite()
            && lower.is_none_or(|l| value >= l)
            && upper.is_none_or(|u| value <= u);
        Self {
            name: name.into(),
            value,
            lower,
            upper,
            passed,
        }
    }

    pub fn around(name: impl Into<String>, value: f64, center: f64, half_width: f64) -> Self {
        Self::new(name, value, Some(center - half_width), Some(center + half_width))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
}

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn json_bytes<S: Serialize + ?Sized>(value: &S) -> anyhow::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn csv_bytes<S: Serialize>(rows: &[S]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn read_csv<S: DeserializeOwned>(bytes: &[u8]) -> anyhow::Result<Vec<S>> {
    let mut r = csv::Reader::from_reader(bytes);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn covariance_bytes(cov: &DMatrix<f64>) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    write_covariance_csv(cov, &mut out)?;
    Ok(out)
}

pub fn config_text(setup: &Setup) -> anyhow::Result<String> {
    Ok(toml::to_string(setup)?)
}

/// Writes the artifacts, the effective configuration and the manifest into
/// `dir`, creating it if needed.
pub fn write_run(
    dir: &Path,
    scenario: &str,
    setup: &Setup,
    artifacts: &[Artifact],
    checks: Vec<Check>,
) -> anyhow::Result<Manifest> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let config = config_text(setup)?;
    let mut files = Vec::with_capacity(artifacts.len() + 1);
    let config_artifact = Artifact {
        name: CONFIG_FILE.into(),
        bytes: config.into_bytes(),
    };
    for a in std::iter::once(&config_artifact).chain(artifacts) {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        files.push(FileEntry {
            name: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
        });
    }
    let versions = BTreeMap::from([
        ("combsense".to_string(), combsense::VERSION.to_string()),
        ("combsense-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ]);
    let manifest = Manifest {
        scenario: scenario.into(),
        seed: setup.run.seed,
        config_sha256: sha256_hex(&config_artifact.bytes),
        versions,
        files,
        checks,
    };
    std::fs::write(dir.join(MANIFEST_FILE), json_bytes(&manifest)?)?;
    Ok(manifest)
}

fn reencode_json<S: Serialize + DeserializeOwned>(bytes: &[u8]) -> anyhow::Result<Vec<u8>> {
    json_bytes(&serde_json::from_slice::<S>(bytes)?)
}

/// Parses an emitted file with the importer for its name and encodes the
/// result again; a faithful round trip reproduces the input bytes.
pub fn reencode(name: &str, bytes: &[u8]) -> anyhow::Result<Vec<u8>> {
    match name {
        CONFIG_FILE => {
            let loaded = crate::config::parse(std::str::from_utf8(bytes)?);
            match loaded.setup {
                Some(s) if loaded.problems.is_empty() => Ok(config_text(&s)?.into_bytes()),
                _ => bail!("{name}: {:?}", loaded.problems),
            }
        }
        MANIFEST_FILE => reencode_json::<Manifest>(bytes),
        "slopes.json" | "slope_ratios.json" => reencode_json::<Comparison>(bytes),
        "sensitivity_table.json" => reencode_json::<SensitivityTable>(bytes),
        "supermodes.json" => reencode_json::<SupermodeReport>(bytes),
        "reconstruction.json" => {
            let v: serde_json::Value = serde_json::from_slice(bytes)?;
            let r = ReconstructedCovariance::<f64>::from_json_value(&v)?;
            json_bytes(&r.to_json_value())
        }
        "snr_vs_depth.csv" | "snr_curves.csv" => csv_bytes(&read_csv::<SnrRow>(bytes)?),
        "headline.csv" => csv_bytes(&read_csv::<HeadlineValue>(bytes)?),
        "truth_covariance.csv" | "reconstructed_covariance.csv" => {
            covariance_bytes(&read_covariance_csv::<f64, _>(bytes)?)
        }
        other => bail!("no importer for {other}"),
    }
}
