use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AthleteProfile, SimConfig};
use crate::jumpcode::{DifficultyCatalog, CATALOG_VERSION};
use crate::rulebook::RuleConfig;
use crate::scoring::{emit_annotation, AnnotatedJump};

pub const MANIFEST_FORMAT: &str = "skijudge-dataset/1";

/// Everything needed to regenerate a dataset byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub seed: u64,
    pub record_count: usize,
    pub dataset_sha256: String,
    pub catalog_version: String,
    pub catalog_sha256: String,
    pub rule_config_sha256: String,
    pub config: SimConfig,
    pub athletes: Vec<AthleteProfile>,
}

impl DatasetManifest {
    pub fn path_for(dataset: &Path) -> PathBuf {
        let mut name = dataset.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

/// Writes `jumps` as JSONL to `path` and the manifest next to it.
pub fn write_dataset(
    path: &Path,
    jumps: &[AnnotatedJump],
    cfg: &SimConfig,
    athletes: &[AthleteProfile],
    catalog: &DifficultyCatalog,
    rules: &RuleConfig,
) -> io::Result<DatasetManifest> {
    let mut hasher = Sha256::new();
    let mut out = BufWriter::new(File::create(path)?);
    for jump in jumps {
        let mut line = emit_annotation(jump).to_line();
        line.push('\n');
        hasher.update(line.as_bytes());
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;

    let manifest = DatasetManifest {
        format: MANIFEST_FORMAT.to_string(),
        seed: cfg.seed,
        record_count: jumps.len(),
        dataset_sha256: hex::encode(hasher.finalize()),
        catalog_version: CATALOG_VERSION.to_string(),
        catalog_sha256: catalog.digest().to_string(),
        rule_config_sha256: rules.digest(),
        config: cfg.clone(),
        athletes: athletes.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(DatasetManifest::path_for(path), text)?;
    Ok(manifest)
}
