use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

/// Provenance block embedded in every artifact the tool writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub nonce_source: String,
    pub seed: u64,
    pub rounds: u64,
    pub mode_prior: f64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        nonce_source: &str,
        seed: u64,
        rounds: u64,
        mode_prior: f64,
    ) -> Result<Self, Failure> {
        let command = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
        Ok(Self {
            command,
            nonce_source: nonce_source.to_string(),
            seed,
            rounds,
            mode_prior,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp()?,
        })
    }

    /// Hex SHA-256 of the manifest's JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("plain data serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// `SOURCE_DATE_EPOCH` when set, so repeated runs can be byte-identical;
/// the wall clock otherwise.
fn timestamp() -> Result<String, Failure> {
    let when: DateTime<Utc> = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(raw) => {
            let secs: i64 = raw.trim().parse().map_err(|_| {
                Failure::Validation(format!("SOURCE_DATE_EPOCH `{raw}` is not an integer"))
            })?;
            DateTime::from_timestamp(secs, 0).ok_or_else(|| {
                Failure::Validation(format!("SOURCE_DATE_EPOCH `{raw}` is out of range"))
            })?
        }
        Err(_) => Utc::now(),
    };
    Ok(when.to_rfc3339_opts(SecondsFormat::Secs, true))
}
