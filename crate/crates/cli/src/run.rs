//! Per-directory run bookkeeping: the lock file and the manifest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const LOCK_NAME: &str = ".zids.lock";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        let path = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(CliError::Usage(format!(
                "{} is in use by another run (remove {} if that run is gone)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::io(&path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: ExperimentConfig,
    /// Every seed the command consumed, by purpose.
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub started_at_unix: u64,
    pub finished_at_unix: u64,
    #[serde(flatten)]
    pub details: Map<String, Value>,
}

impl RunManifest {
    pub fn start(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds: BTreeMap::new(),
            threads: 1,
            started_at_unix: unix_now(),
            finished_at_unix: 0,
            details: Map::new(),
        }
    }

    pub fn seed(&mut self, purpose: &str, seed: u64) -> u64 {
        self.seeds.insert(purpose.to_string(), seed);
        seed
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable manifest entry"),
        );
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished_at_unix = unix_now();
        let mut text = serde_json::to_string_pretty(&self).expect("serializable manifest");
        text.push('\n');
        write_file(&dir.join("manifest.json"), text.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(CliError::io(path))
}
