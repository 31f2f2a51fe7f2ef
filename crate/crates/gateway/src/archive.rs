//! Sample archives: one JSON record per line, optionally gzip-compressed as
//! a whole (`.gz` suffix). Each record carries its own `format_version`, so
//! files mixing versions are read record by record.
//!
//! * version 1 stores per-layer statistics nested per layer;
//! * version 2 (written by default) flattens them into two row-major
//!   `layer_count × layer_dim` arrays per sample.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use gss_core::metrics::{LayerStats, ResponseSample, SampleSet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ARCHIVE_VERSION: u32 = 2;
pub const SUPPORTED_VERSIONS: [u32; 2] = [1, 2];

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: corrupt archive at record {index}: {detail}")]
    Corrupt { path: PathBuf, index: usize, detail: String },
    #[error("{path}: record {index} has unsupported format_version {version}")]
    UnsupportedVersion { path: PathBuf, index: usize, version: u64 },
    #[error("cannot archive record for prompt {prompt_id}: {detail}")]
    Unencodable { prompt_id: String, detail: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io { path: path.to_owned(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_k: u32,
    pub k: u32,
    pub max_tokens: u32,
    pub model_id: String,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { temperature: 1.0, top_k: 10, k: 10, max_tokens: 256, model_id: String::new() }
    }
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be > 0, got {}", self.temperature));
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be at least 1".into());
        }
        Ok(())
    }
}

/// The K responses collected for one prompt, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveRecord {
    pub format_version: u32,
    pub prompt_id: String,
    pub model_id: String,
    pub params: SamplingParams,
    pub samples: Vec<ResponseSample>,
    /// Hex SHA-256 of the canonical encoding of `samples` under
    /// `format_version`.
    pub content_checksum: String,
}

impl ArchiveRecord {
    /// Builds a current-version record and seals its checksum.
    pub fn new(prompt_id: impl Into<String>, params: SamplingParams, samples: Vec<ResponseSample>) -> Result<Self, ArchiveError> {
        Self::with_version(ARCHIVE_VERSION, prompt_id, params, samples)
    }

    pub fn with_version(
        format_version: u32,
        prompt_id: impl Into<String>,
        params: SamplingParams,
        samples: Vec<ResponseSample>,
    ) -> Result<Self, ArchiveError> {
        let mut rec = Self {
            format_version,
            prompt_id: prompt_id.into(),
            model_id: params.model_id.clone(),
            params,
            samples,
            content_checksum: String::new(),
        };
        rec.content_checksum = rec.compute_checksum()?;
        Ok(rec)
    }

    pub fn compute_checksum(&self) -> Result<String, ArchiveError> {
        let payload = match self.format_version {
            1 => serde_json::to_vec(&self.samples),
            2 => serde_json::to_vec(&flatten_all(self)?),
            v => {
                return Err(self.unencodable(format!("unknown format_version {v}")));
            }
        }
        .map_err(|e| self.unencodable(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(&payload)))
    }

    fn unencodable(&self, detail: String) -> ArchiveError {
        ArchiveError::Unencodable { prompt_id: self.prompt_id.clone(), detail }
    }

    pub fn to_sample_set(&self) -> SampleSet {
        SampleSet::new(self.prompt_id.clone(), self.model_id.clone(), self.samples.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FlatSample {
    text: String,
    token_count: u32,
    token_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    token_logsumexp: Vec<f64>,
    layer_count: u32,
    layer_dim: u32,
    mean_vecs: Vec<f32>,
    last_vecs: Vec<f32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    external_embedding: Option<Vec<f32>>,
}

fn flatten(s: &ResponseSample) -> Result<FlatSample, String> {
    let dim = s.layers.first().map_or(0, |l| l.mean_vec.len());
    let mut mean_vecs = Vec::with_capacity(dim * s.layers.len());
    let mut last_vecs = Vec::with_capacity(dim * s.layers.len());
    for (i, l) in s.layers.iter().enumerate() {
        if l.layer_index as usize != i {
            return Err(format!("layer at position {i} has layer_index {}", l.layer_index));
        }
        if l.mean_vec.len() != dim || l.last_vec.len() != dim {
            return Err(format!("layer {i} width differs from layer 0 width {dim}"));
        }
        mean_vecs.extend_from_slice(&l.mean_vec);
        last_vecs.extend_from_slice(&l.last_vec);
    }
    Ok(FlatSample {
        text: s.text.clone(),
        token_count: s.token_count,
        token_logprobs: s.token_logprobs.clone(),
        token_logsumexp: s.token_logsumexp.clone(),
        layer_count: s.layers.len() as u32,
        layer_dim: dim as u32,
        mean_vecs,
        last_vecs,
        external_embedding: s.external_embedding.clone(),
    })
}

fn flatten_all(rec: &ArchiveRecord) -> Result<Vec<FlatSample>, ArchiveError> {
    rec.samples
        .iter()
        .enumerate()
        .map(|(i, s)| flatten(s).map_err(|d| rec.unencodable(format!("sample {i}: {d}"))))
        .collect()
}

fn unflatten(f: FlatSample) -> Result<ResponseSample, String> {
    let (n, d) = (f.layer_count as usize, f.layer_dim as usize);
    if f.mean_vecs.len() != n * d || f.last_vecs.len() != n * d {
        return Err(format!("layer arrays do not match {n}×{d}"));
    }
    let layers = (0..n)
        .map(|i| LayerStats {
            layer_index: i as u32,
            mean_vec: f.mean_vecs[i * d..(i + 1) * d].to_vec(),
            last_vec: f.last_vecs[i * d..(i + 1) * d].to_vec(),
        })
        .collect();
    Ok(ResponseSample {
        text: f.text,
        token_count: f.token_count,
        token_logprobs: f.token_logprobs,
        token_logsumexp: f.token_logsumexp,
        layers,
        external_embedding: f.external_embedding,
    })
}

#[derive(Serialize, Deserialize)]
struct Line<S> {
    format_version: u32,
    prompt_id: String,
    model_id: String,
    params: SamplingParams,
    samples: Vec<S>,
    content_checksum: String,
}

fn non_finite(rec: &ArchiveRecord) -> Option<String> {
    for (i, s) in rec.samples.iter().enumerate() {
        let bad = s.token_logprobs.iter().chain(&s.token_logsumexp).any(|v| !v.is_finite())
            || s.layers.iter().any(|l| l.mean_vec.iter().chain(&l.last_vec).any(|v| !v.is_finite()))
            || s.external_embedding.iter().flatten().any(|v| !v.is_finite());
        if bad {
            return Some(format!("sample {i} contains non-finite values"));
        }
    }
    None
}

/// Canonical single-line encoding (with trailing newline). Fails if the
/// stored checksum no longer matches the samples.
pub fn encode_record(rec: &ArchiveRecord) -> Result<Vec<u8>, ArchiveError> {
    if let Some(detail) = non_finite(rec) {
        return Err(rec.unencodable(detail));
    }
    if rec.compute_checksum()? != rec.content_checksum {
        return Err(rec.unencodable("samples changed after the checksum was sealed".into()));
    }
    let mut out = match rec.format_version {
        1 => serde_json::to_vec(&Line {
            format_version: 1,
            prompt_id: rec.prompt_id.clone(),
            model_id: rec.model_id.clone(),
            params: rec.params.clone(),
            samples: rec.samples.clone(),
            content_checksum: rec.content_checksum.clone(),
        }),
        _ => serde_json::to_vec(&Line {
            format_version: rec.format_version,
            prompt_id: rec.prompt_id.clone(),
            model_id: rec.model_id.clone(),
            params: rec.params.clone(),
            samples: flatten_all(rec)?,
            content_checksum: rec.content_checksum.clone(),
        }),
    }
    .map_err(|e| rec.unencodable(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Decodes one archive line; `index` and `path` only label errors.
pub fn decode_record(line: &str, index: usize, path: &Path) -> Result<ArchiveRecord, ArchiveError> {
    let corrupt = |detail: String| ArchiveError::Corrupt { path: path.to_owned(), index, detail };
    #[derive(Deserialize)]
    struct Version {
        format_version: u64,
    }
    let version = serde_json::from_str::<Version>(line)
        .map_err(|e| corrupt(format!("unreadable record: {e}")))?
        .format_version;
    let rec = match version {
        1 => {
            let l: Line<ResponseSample> = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            l.into_record(Ok)
        }
        2 => {
            let l: Line<FlatSample> = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            l.into_record(unflatten)
        }
        v => return Err(ArchiveError::UnsupportedVersion { path: path.to_owned(), index, version: v }),
    }
    .map_err(&corrupt)?;
    let actual = rec.compute_checksum().map_err(|e| corrupt(e.to_string()))?;
    if actual != rec.content_checksum {
        return Err(corrupt(format!("checksum mismatch (stored {}, computed {actual})", rec.content_checksum)));
    }
    Ok(rec)
}

impl<S> Line<S> {
    fn into_record(self, convert: impl Fn(S) -> Result<ResponseSample, String>) -> Result<ArchiveRecord, String> {
        let samples = self
            .samples
            .into_iter()
            .enumerate()
            .map(|(i, s)| convert(s).map_err(|d| format!("sample {i}: {d}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ArchiveRecord {
            format_version: self.format_version,
            prompt_id: self.prompt_id,
            model_id: self.model_id,
            params: self.params,
            samples,
            content_checksum: self.content_checksum,
        })
    }
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Encodes all records (gzip-compressed when `compress`).
pub fn encode_archive(records: &[ArchiveRecord], compress: bool) -> Result<Vec<u8>, ArchiveError> {
    let mut plain = Vec::new();
    for r in records {
        plain.extend(encode_record(r)?);
    }
    if !compress {
        return Ok(plain);
    }
    // fixed header fields (no mtime, no name) keep output byte-stable
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&plain).and_then(|_| enc.finish()).map_err(io_err(Path::new("<memory>")))
}

/// Writes `records` to `path` atomically. A `.gz` suffix selects
/// compression.
pub fn write_archive(records: &[ArchiveRecord], path: &Path) -> Result<(), ArchiveError> {
    let bytes = encode_archive(records, is_gzip(path))?;
    gss_core::io::write_atomic(path, &bytes).map_err(|e| match e {
        gss_core::io::RecordIoError::Io { path, source } => ArchiveError::Io { path, source },
        other => ArchiveError::Io { path: path.to_owned(), source: io::Error::other(other.to_string()) },
    })
}

/// Decodes every record from `reader`, verifying checksums.
pub fn parse_archive<R: Read>(reader: R, path: &Path, compressed: bool) -> Result<Vec<ArchiveRecord>, ArchiveError> {
    let reader: Box<dyn BufRead> = if compressed {
        Box::new(BufReader::new(GzDecoder::new(reader)))
    } else {
        Box::new(BufReader::new(reader))
    };
    let mut out = Vec::new();
    for line in reader.lines() {
        let index = out.len();
        let line = line.map_err(|e| ArchiveError::Corrupt {
            path: path.to_owned(),
            index,
            detail: format!("read failed: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(decode_record(&line, index, path)?);
    }
    Ok(out)
}

pub fn read_archive(path: &Path) -> Result<Vec<ArchiveRecord>, ArchiveError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_archive(file, path, is_gzip(path))
}

/// Sibling file that collects records while a run is in progress.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".partial");
    PathBuf::from(p)
}

/// Append-only, uncompressed, line-per-record journal. Each append is
/// flushed so an interrupted run loses at most the line being written.
pub struct PartialArchive {
    path: PathBuf,
    out: BufWriter<File>,
}

impl PartialArchive {
    pub fn open(path: &Path) -> Result<Self, ArchiveError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        Ok(Self { path: path.to_owned(), out: BufWriter::new(file) })
    }

    pub fn append(&mut self, rec: &ArchiveRecord) -> Result<(), ArchiveError> {
        let line = encode_record(rec)?;
        self.out.write_all(&line).and_then(|_| self.out.flush()).map_err(io_err(&self.path))
    }

    /// Reads back a journal. A damaged final line (the usual result of an
    /// interrupt) is dropped; damage anywhere else is an error.
    pub fn recover(path: &Path) -> Result<Vec<ArchiveRecord>, ArchiveError> {
        let text = match std::fs::read(path) {
            Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io_err(path)(e)),
        };
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let mut out = Vec::new();
        for (i, line) in lines.iter().enumerate() {
            match decode_record(line, i, path) {
                Ok(r) => out.push(r),
                Err(e) if i + 1 == lines.len() => {
                    log::warn!("dropping damaged trailing journal line: {e}");
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}
