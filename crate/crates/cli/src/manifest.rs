//! Run manifests: the sidecar record written next to every artifact.
//!
//! A manifest pins down everything a run depended on — the subcommand, the
//! fully materialized configuration, the effective seed, and any flags that
//! are not part of the scenario itself — so `--manifest` can reproduce the
//! artifacts bit for bit later.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ResolvedConfig;
use crate::{csvout, CliError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: ResolvedConfig,
    pub seed: u64,
    /// Subcommand flags beyond the scenario config, as flag-value strings.
    pub params: BTreeMap<String, String>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &ResolvedConfig) -> Self {
        RunManifest {
            subcommand: String::from(subcommand),
            config: config.clone(),
            seed: config.seed,
            params: BTreeMap::new(),
            artifacts: Vec::new(),
            tool_version: String::from(env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(String::from(key), value.to_string());
        self
    }

    pub fn artifact(&mut self, path: &Path) -> &mut Self {
        self.artifacts.push(path.display().to_string());
        self
    }
}

/// Where the manifest for a given primary output lives.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Write the manifest next to the primary output.
pub fn write(out: &Path, manifest: &RunManifest) -> Result<PathBuf, CliError> {
    let path = manifest_path(out);
    let body = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::runtime(format!("cannot encode manifest: {e}")))?;
    csvout::write_atomic(&path, &format!("{body}\n"))?;
    Ok(path)
}

/// Read a manifest back for a reproduction run.
pub fn load(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("cannot parse manifest {}: {e}", path.display())))
}
