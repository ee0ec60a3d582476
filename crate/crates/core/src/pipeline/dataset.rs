//! Parallel-dataset I/O in TSV and JSONL formats.

use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, TokenSeq};

/// Whether a record came from the original data or was synthesized.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Synthetic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Original => "original",
            Origin::Synthetic => "synthetic",
        })
    }
}

impl FromStr for Origin {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Origin::Original),
            "synthetic" => Ok(Origin::Synthetic),
            _ => Err(()),
        }
    }
}

/// One sentence/MR pair.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Record {
    pub sentence: String,
    pub mr: String,
    #[serde(default = "default_origin")]
    pub origin: Origin,
}

fn default_origin() -> Origin {
    Origin::Original
}

/// A parallel corpus of sentences and meaning representations.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ParallelDataset {
    pub records: Vec<Record>,
}

impl ParallelDataset {
    pub fn sentence_corpus(&self) -> Vec<TokenSeq> {
        self.records.iter().map(|r| tokenize(&r.sentence)).collect()
    }

    pub fn mr_corpus(&self) -> Vec<TokenSeq> {
        self.records.iter().map(|r| tokenize(&r.mr)).collect()
    }
}

/// On-disk dataset encoding.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DatasetFormat {
    /// `sentence<TAB>mr` with an optional third `origin` column.
    Tsv,
    /// One JSON object per line with `sentence`, `mr`, and optional `origin`.
    Jsonl,
}

impl DatasetFormat {
    /// Picks a format from a file extension, if it is a recognized one.
    pub fn infer(path: &Path) -> Option<DatasetFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Some(DatasetFormat::Tsv),
            Some("jsonl") => Some(DatasetFormat::Jsonl),
            _ => None,
        }
    }

    pub fn extension(&self) -> &'static str {
        match self {
            DatasetFormat::Tsv => "tsv",
            DatasetFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(DatasetFormat::Tsv),
            "jsonl" => Ok(DatasetFormat::Jsonl),
            _ => Err(format!("unknown dataset format '{s}' (expected tsv or jsonl)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("record {index} has a tab or newline in a field; not representable as TSV")]
    UnencodableField { index: usize },
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Malformed {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_tsv_line(path: &Path, lineno: usize, line: &str) -> Result<Record, DatasetError> {
    let fields: Vec<&str> = line.split('\t').collect();
    let (sentence, mr, origin) = match fields.as_slice() {
        [sentence, mr] => (*sentence, *mr, Origin::Original),
        [sentence, mr, tag] => {
            let origin = tag.parse::<Origin>().map_err(|()| {
                malformed(
                    path,
                    lineno,
                    format!("third column must be 'original' or 'synthetic', got '{tag}'"),
                )
            })?;
            (*sentence, *mr, origin)
        }
        other => {
            return Err(malformed(
                path,
                lineno,
                format!("expected 2 or 3 tab-separated columns, got {}", other.len()),
            ));
        }
    };
    if mr.trim().is_empty() {
        return Err(malformed(path, lineno, "empty meaning representation"));
    }
    Ok(Record {
        sentence: sentence.to_string(),
        mr: mr.to_string(),
        origin,
    })
}

fn parse_jsonl_line(path: &Path, lineno: usize, line: &str) -> Result<Record, DatasetError> {
    let record: Record = serde_json::from_str(line)
        .map_err(|e| malformed(path, lineno, format!("invalid JSON record: {e}")))?;
    if record.mr.trim().is_empty() {
        return Err(malformed(path, lineno, "empty meaning representation"));
    }
    Ok(record)
}

/// Reads a parallel dataset. Blank lines are skipped; any malformed line is
/// reported with its line number.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<ParallelDataset, DatasetError> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        records.push(match format {
            DatasetFormat::Tsv => parse_tsv_line(path, lineno, &line)?,
            DatasetFormat::Jsonl => parse_jsonl_line(path, lineno, &line)?,
        });
    }
    Ok(ParallelDataset { records })
}

/// Writes a dataset atomically (temp file in the target directory, then
/// rename). The origin column/field is always emitted.
pub fn write_dataset(
    path: &Path,
    dataset: &ParallelDataset,
    format: DatasetFormat,
) -> Result<(), DatasetError> {
    let mut buffer = Vec::new();
    for (index, record) in dataset.records.iter().enumerate() {
        match format {
            DatasetFormat::Tsv => {
                let clean = |s: &str| !s.contains('\t') && !s.contains('\n') && !s.contains('\r');
                if !clean(&record.sentence) || !clean(&record.mr) {
                    return Err(DatasetError::UnencodableField { index });
                }
                writeln!(buffer, "{}\t{}\t{}", record.sentence, record.mr, record.origin)
            }
            DatasetFormat::Jsonl => {
                let json = serde_json::to_string(record).expect("record serialization");
                writeln!(buffer, "{json}")
            }
        }
        .expect("write to vec");
    }
    write_atomic(path, &buffer)
}

/// Writes bytes to `path` via a temporary sibling file and an atomic rename,
/// so a failed run never leaves a partial file behind.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let err = |source| DatasetError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
