//! Classifier store keyed by training-data centroid.
//!
//! Records are append-only with store-assigned, strictly increasing ids.
//! Retrieval is either by recency (highest ids) or by relevancy (exact k-NN
//! over centroid keys under cosine distance, newer id wins ties).
//!
//! On disk a store is a directory holding `manifest.json`, one
//! `weights-<id>.txt` file per record (one hex float per line) and a
//! `checksums.sha256` file covering every other file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{cosine_distance, Centroid, SparseVector};
use crate::hexfloat;
use crate::learners::{Hyper, LearnerKind, LinearModel};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKSUM_FILE: &str = "checksums.sha256";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt store file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("checksum mismatch for {path}")]
    Checksum { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierRecord {
    pub id: u64,
    pub model: LinearModel,
    pub key: Centroid,
    pub created_window: u32,
    pub created_at: i64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    records: Vec<ClassifierRecord>,
    next_id: u64,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ClassifierRecord] {
        &self.records
    }

    pub fn get(&self, id: u64) -> Option<&ClassifierRecord> {
        self.records
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.records[i])
    }

    /// Appends a record and returns the id the store assigned to it.
    pub fn put(&mut self, model: LinearModel, key: Centroid, created_window: u32, created_at: i64) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.records.push(ClassifierRecord {
            id,
            model,
            key,
            created_window,
            created_at,
        });
        id
    }

    /// The `n` newest records, newest first.
    pub fn recent(&self, n: usize) -> Vec<&ClassifierRecord> {
        self.records.iter().rev().take(n).collect()
    }

    /// The `k` records whose keys are closest to `query`, ordered by
    /// `(distance, -id)`.
    pub fn relevant(&self, query: &SparseVector, k: usize) -> Vec<&ClassifierRecord> {
        let mut scored: Vec<(f64, &ClassifierRecord)> = self
            .records
            .iter()
            .map(|r| (cosine_distance(query, r.key.as_sparse()), r))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.id.cmp(&a.1.id)));
        scored.into_iter().take(k).map(|(_, r)| r).collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), RegistryError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
        let mut checksums = String::new();
        let mut manifest = Manifest {
            format_version: FORMAT_VERSION,
            next_id: self.next_id,
            records: Vec::with_capacity(self.records.len()),
        };
        for r in &self.records {
            let weights_file = format!("weights-{:06}.txt", r.id);
            let mut body = String::with_capacity(r.model.weights.len() * 22);
            for &w in &r.model.weights {
                body.push_str(&hexfloat::format(w));
                body.push('\n');
            }
            write_file(&dir.join(&weights_file), body.as_bytes(), &mut checksums)?;
            manifest.records.push(RecordMeta::from_record(r, weights_file));
        }
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_file(&dir.join(MANIFEST_FILE), json.as_bytes(), &mut checksums)?;
        let path = dir.join(CHECKSUM_FILE);
        fs::write(&path, checksums).map_err(|source| io_err(&path, source))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let dir = dir.as_ref();
        let sums_path = dir.join(CHECKSUM_FILE);
        let sums = fs::read_to_string(&sums_path).map_err(|source| io_err(&sums_path, source))?;
        let mut expected = std::collections::HashMap::new();
        for line in sums.lines().filter(|l| !l.trim().is_empty()) {
            let (digest, name) = line.split_once("  ").ok_or_else(|| RegistryError::Corrupt {
                path: sums_path.clone(),
                reason: format!("malformed line {line:?}"),
            })?;
            expected.insert(name.to_owned(), digest.to_owned());
        }
        let read_checked = |name: &str| -> Result<String, RegistryError> {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(|source| io_err(&path, source))?;
            match expected.get(name) {
                Some(d) if *d == sha256_hex(&bytes) => {}
                _ => return Err(RegistryError::Checksum { path }),
            }
            String::from_utf8(bytes).map_err(|_| RegistryError::Corrupt {
                path,
                reason: "not UTF-8".into(),
            })
        };

        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest: Manifest =
            serde_json::from_str(&read_checked(MANIFEST_FILE)?).map_err(|e| RegistryError::Corrupt {
                path: manifest_path.clone(),
                reason: e.to_string(),
            })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(RegistryError::Corrupt {
                path: manifest_path,
                reason: format!("unsupported format version {}", manifest.format_version),
            });
        }
        let mut records = Vec::with_capacity(manifest.records.len());
        for meta in manifest.records {
            let weights_path = dir.join(&meta.weights_file);
            let body = read_checked(&meta.weights_file)?;
            let weights = body
                .lines()
                .map(hexfloat::parse)
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| RegistryError::Corrupt {
                    path: weights_path.clone(),
                    reason: e.to_string(),
                })?;
            records.push(meta.into_record(weights).map_err(|reason| RegistryError::Corrupt {
                path: manifest_path.clone(),
                reason,
            })?);
        }
        if records.windows(2).any(|w| w[0].id >= w[1].id) || records.last().is_some_and(|r| r.id >= manifest.next_id) {
            return Err(RegistryError::Corrupt {
                path: manifest_path,
                reason: "record ids are not strictly increasing".into(),
            });
        }
        Ok(Self {
            records,
            next_id: manifest.next_id,
        })
    }
}

fn io_err(path: &Path, source: std::io::Error) -> RegistryError {
    RegistryError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Lowercase hex SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

fn write_file(path: &Path, bytes: &[u8], checksums: &mut String) -> Result<(), RegistryError> {
    fs::write(path, bytes).map_err(|source| io_err(path, source))?;
    let name = path.file_name().unwrap().to_string_lossy();
    writeln!(checksums, "{}  {}", sha256_hex(bytes), name).unwrap();
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    next_id: u64,
    records: Vec<RecordMeta>,
}

#[derive(Serialize, Deserialize)]
struct RecordMeta {
    id: u64,
    kind: LearnerKind,
    dim: usize,
    bias: String,
    hyper: Hyper,
    trained_window: u32,
    val_history: Vec<(u32, String)>,
    created_window: u32,
    created_at: i64,
    centroid: Vec<(u32, String)>,
    weights_file: String,
}

impl RecordMeta {
    fn from_record(r: &ClassifierRecord, weights_file: String) -> Self {
        Self {
            id: r.id,
            kind: r.model.kind,
            dim: r.model.dim(),
            bias: hexfloat::format(r.model.bias),
            hyper: r.model.hyper,
            trained_window: r.model.trained_window,
            val_history: r
                .model
                .val_history
                .iter()
                .map(|&(w, f)| (w, hexfloat::format(f)))
                .collect(),
            created_window: r.created_window,
            created_at: r.created_at,
            centroid: r
                .key
                .as_sparse()
                .entries()
                .iter()
                .map(|&(i, v)| (i, hexfloat::format(v)))
                .collect(),
            weights_file,
        }
    }

    fn into_record(self, weights: Vec<f64>) -> Result<ClassifierRecord, String> {
        if weights.len() != self.dim {
            return Err(format!(
                "record {} has {} weights, expected {}",
                self.id,
                weights.len(),
                self.dim
            ));
        }
        let parse = |s: &str| hexfloat::parse(s).map_err(|e| e.to_string());
        let mut entries = Vec::with_capacity(self.centroid.len());
        for (i, v) in &self.centroid {
            if *i as usize >= self.dim {
                return Err(format!("centroid index {i} out of range"));
            }
            entries.push((*i, parse(v)?));
        }
        let val_history = self
            .val_history
            .iter()
            .map(|(w, f)| Ok((*w, parse(f)?)))
            .collect::<Result<Vec<_>, String>>()?;
        Ok(ClassifierRecord {
            id: self.id,
            model: LinearModel {
                kind: self.kind,
                weights,
                bias: parse(&self.bias)?,
                hyper: self.hyper,
                trained_window: self.trained_window,
                val_history,
            },
            key: Centroid::from_sparse(SparseVector::from_pairs(self.dim, entries)),
            created_window: self.created_window,
            created_at: self.created_at,
        })
    }
}
