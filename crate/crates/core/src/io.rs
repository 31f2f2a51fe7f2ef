//! Line-delimited JSON record files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("serialisation failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl RecordIoError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_owned(), source }
    }
}

/// Serialises records one per line.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<Vec<u8>, RecordIoError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Writes records to `path` through a sibling temporary file and an atomic
/// rename.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), RecordIoError> {
    write_atomic(path, &to_jsonl(records)?)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RecordIoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| RecordIoError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| RecordIoError::io(path, e))
}

/// Parses records from any reader; blank lines are skipped.
pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R, path: &Path) -> Result<Vec<T>, RecordIoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| RecordIoError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|source| RecordIoError::Parse { path: path.to_owned(), line: i + 1, source })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RecordIoError> {
    let file = File::open(path).map_err(|e| RecordIoError::io(path, e))?;
    parse_jsonl(BufReader::new(file), path)
}
