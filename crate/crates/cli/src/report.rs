//! Artifact schema and the merged comparison table.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use qsslab::analysis::CertificationReport;
use qsslab::nonces::Secret;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictFractions {
    pub retired: f64,
    pub round_dropped: f64,
    pub eavesdropper_detected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub retired: u64,
    pub round_dropped: u64,
    pub eavesdropper_detected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub manifest: RunManifest,
    pub nonce_set: String,
    pub strategy: String,
    /// `exact` or `monte-carlo`.
    pub method: String,
    pub rounds: Option<u64>,
    pub p_detect: f64,
    pub stderr: Option<f64>,
    pub exact_p_detect: f64,
    pub p_eve_knows_secret: f64,
    pub p_recovered: f64,
    pub verdicts: VerdictFractions,
    pub counts: Option<VerdictCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationArtifact {
    pub manifest: RunManifest,
    pub report: CertificationReport,
}

/// Every report file the tool writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Artifact {
    Certification(CertificationArtifact),
    Simulation(SimulationSummary),
}

impl Artifact {
    pub fn manifest(&self) -> &RunManifest {
        match self {
            Artifact::Certification(c) => &c.manifest,
            Artifact::Simulation(s) => &s.manifest,
        }
    }
}

/// One line of the merged table. Columns that do not apply to a row's kind
/// are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub source: String,
    pub kind: String,
    pub nonce_set: String,
    pub strategy: String,
    pub p_detect: Option<f64>,
    pub exact_p_detect: Option<f64>,
    pub p_eve_knows_secret: Option<f64>,
    pub recoverable: Option<bool>,
    pub secret: Option<bool>,
    pub imr_protected: Option<bool>,
    pub r_00: Option<f64>,
    pub r_01: Option<f64>,
    pub r_10: Option<f64>,
    pub r_11: Option<f64>,
    pub detection_floor: Option<f64>,
    pub detection_ceiling: Option<f64>,
    pub manifest_sha256: String,
}

const COLUMNS: [&str; 17] = [
    "source",
    "kind",
    "nonce_set",
    "strategy",
    "p_detect",
    "exact_p_detect",
    "p_eve_knows_secret",
    "recoverable",
    "secret",
    "imr_protected",
    "r_00",
    "r_01",
    "r_10",
    "r_11",
    "detection_floor",
    "detection_ceiling",
    "manifest_sha256",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub rows: Vec<Row>,
}

fn row(source: &Path, artifact: &Artifact) -> Row {
    let source = source.display().to_string();
    let manifest_sha256 = artifact.manifest().digest();
    match artifact {
        Artifact::Certification(c) => {
            let r = &c.report;
            let r_of = |s: Secret| r.r_of_s.get(&s).copied();
            Row {
                source,
                kind: "certification".into(),
                nonce_set: r.nonce_set_name.clone(),
                strategy: String::new(),
                p_detect: None,
                exact_p_detect: None,
                p_eve_knows_secret: None,
                recoverable: Some(r.recoverable),
                secret: Some(r.secret),
                imr_protected: Some(r.imr_protected),
                r_00: r_of(Secret::S00),
                r_01: r_of(Secret::S01),
                r_10: r_of(Secret::S10),
                r_11: r_of(Secret::S11),
                detection_floor: r.detection_bounds.map(|b| b.floor),
                detection_ceiling: r.detection_bounds.map(|b| b.ceiling),
                manifest_sha256,
            }
        }
        Artifact::Simulation(s) => Row {
            source,
            kind: "simulation".into(),
            nonce_set: s.nonce_set.clone(),
            strategy: s.strategy.clone(),
            p_detect: Some(s.p_detect),
            exact_p_detect: Some(s.exact_p_detect),
            p_eve_knows_secret: Some(s.p_eve_knows_secret),
            recoverable: None,
            secret: None,
            imr_protected: None,
            r_00: None,
            r_01: None,
            r_10: None,
            r_11: None,
            detection_floor: None,
            detection_ceiling: None,
            manifest_sha256,
        },
    }
}

pub fn load_artifact(path: &Path) -> Result<Artifact, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{}: not a qsslab report: {e}", path.display())))
}

/// Loads every input, dropping any whose manifest digest was already seen.
pub fn merge(inputs: &[PathBuf]) -> Result<Table, Failure> {
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for path in inputs {
        let artifact = load_artifact(path)?;
        if seen.insert(artifact.manifest().digest()) {
            rows.push(row(path, &artifact));
        }
    }
    Ok(Table { rows })
}

pub fn write_csv(path: &Path, table: &Table) -> Result<(), Failure> {
    let internal = |e: csv::Error| Failure::Internal(format!("writing {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(internal)?;
    w.write_record(COLUMNS).map_err(internal)?;
    for r in &table.rows {
        w.serialize(r).map_err(internal)?;
    }
    w.flush()
        .map_err(|e| Failure::Internal(format!("writing {}: {e}", path.display())))
}
