//! Shared CLI plumbing: exit-code discipline, flat config files, run
//! manifests and small IO helpers.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Errors split by exit code: usage/config problems exit 2, runtime
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Input paths must exist before the run starts; a missing input is a
/// usage error, not a runtime failure.
pub fn require_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file not found: {}", path.display())))
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| usage(format!("cannot create output dir {}: {e}", dir.display())))
}

/// Flat `key = value` config file. Lines starting with `#` are comments.
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile {
            values: BTreeMap::new(),
        }
    }

    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::empty());
        };
        require_input(path)?;
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                usage(format!(
                    "{} line {}: expected key = value",
                    path.display(),
                    i + 1
                ))
            })?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// Resolution order: explicit CLI flag, then config file, then default.
    pub fn resolve<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| usage(format!("config key {key}: {e}"))),
            None => Ok(default),
        }
    }
}

/// Reproducibility manifest written next to every command's outputs:
/// resolved config, input digests and output names. No timestamps, so a
/// rerun with identical inputs produces identical bytes.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: impl Serialize) -> Self {
        Manifest {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path)
            .map_err(|e| usage(format!("cannot read input {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.insert(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            format!("sha256:{}", hex_string(&digest)),
        );
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        if let Some(name) = path.file_name() {
            self.outputs.push(name.to_string_lossy().into_owned());
        }
    }

    pub fn write(mut self, dir: &Path) -> Result<(), CliError> {
        self.outputs.sort();
        self.outputs.push("manifest.json".to_string());
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), json)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("writing manifest: {e}")))?;
        Ok(())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Load a dataset CSV/meta pair, deriving the meta path when not given.
pub fn load_dataset(
    csv: &Path,
    meta: Option<&PathBuf>,
) -> Result<sentq_core::features::Dataset, CliError> {
    let meta_path = match meta {
        Some(p) => p.clone(),
        None => default_meta_path(csv),
    };
    require_input(csv)?;
    require_input(&meta_path)?;
    Ok(sentq_core::features::Dataset::load(csv, &meta_path)?)
}

pub fn default_meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}
