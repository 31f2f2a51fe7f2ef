use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::CliError;

pub const LOCK_NAME: &str = ".gss.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

impl FileEntry {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let mut f = std::fs::File::open(path)
            .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
        let mut hasher = Sha256::new();
        let mut buf = vec![0u8; 1 << 16];
        let mut bytes = 0u64;
        loop {
            let n = f.read(&mut buf).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            if n == 0 {
                break;
            }
            bytes += n as u64;
            hasher.update(&buf[..n]);
        }
        Ok(Self { path: path.to_owned(), bytes, sha256: hex::encode(hasher.finalize()) })
    }
}

/// Record of one run: what was asked, what was read and what was written.
///
/// `config` is the fully resolved command (flags, environment and config
/// file merged); `gss replay` re-runs it verbatim. Secrets are never
/// recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: Command,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub seeds: BTreeMap<String, u64>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    /// `"ok"` or the error that ended the run.
    pub status: String,
    pub exit_code: i32,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest.{command}.json")
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))
    }
}

/// Exclusive ownership of an output directory for the life of a run.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path, command: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        let path = dir.join(LOCK_NAME);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                let owner = std::fs::read_to_string(&path).unwrap_or_default();
                CliError::Usage(format!(
                    "{} is in use by another run ({}); remove {} if that run is gone",
                    dir.display(),
                    owner.trim(),
                    path.display()
                ))
            } else {
                CliError::Usage(format!("cannot lock {}: {e}", dir.display()))
            }
        })?;
        let _ = writeln!(f, "pid {} command {command}", std::process::id());
        Ok(Self { path })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// Tracks the files a command reads and writes.
#[derive(Debug)]
pub struct RunContext {
    pub out_dir: PathBuf,
    /// Digested when registered, before the run can modify them.
    inputs: Vec<FileEntry>,
    outputs: Vec<PathBuf>,
    pub seeds: BTreeMap<String, u64>,
}

impl RunContext {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), inputs: Vec::new(), outputs: Vec::new(), seeds: BTreeMap::new() }
    }

    pub fn input(&mut self, path: &Path) {
        if self.inputs.iter().any(|e| e.path == path) {
            return;
        }
        // an unreadable input fails later with a better message
        if let Ok(entry) = FileEntry::of(path) {
            self.inputs.push(entry);
        }
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Notes a file written by other means (e.g. an archive writer).
    pub fn output(&mut self, path: &Path) {
        if !self.outputs.iter().any(|p| p == path) {
            self.outputs.push(path.to_owned());
        }
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.output_path(name);
        gss_core::io::write_atomic(&path, bytes)?;
        self.output(&path);
        Ok(path)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, records: &[T]) -> Result<PathBuf, CliError> {
        let bytes = gss_core::io::to_jsonl(records)?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_bytes(name, text.as_bytes())
    }

    pub(crate) fn entries(&self) -> (Vec<FileEntry>, Vec<FileEntry>) {
        let outputs = self
            .outputs
            .iter()
            .filter_map(|p| match FileEntry::of(p) {
                Ok(e) => Some(e),
                Err(e) => {
                    log::warn!("manifest: {e}");
                    None
                }
            })
            .collect();
        (self.inputs.clone(), outputs)
    }
}
