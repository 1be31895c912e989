//! JSONL readers and writers for the pipeline's record formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::IoError;

/// One input document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub source_id: String,
    pub text: String,
    #[serde(default)]
    pub title: String,
    /// Entity pair for closed extraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<String>,
    /// Per-record label vocabulary for closed extraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl CorpusRecord {
    pub fn new(source_id: impl Into<String>, text: impl Into<String>) -> Self {
        CorpusRecord {
            source_id: source_id.into(),
            text: text.into(),
            title: String::new(),
            e1: None,
            e2: None,
            labels: None,
        }
    }
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| file_err(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents).map_err(|e| file_err(path, e))
}

/// Lazily parses a JSONL file; blank lines are skipped.
pub fn jsonl_reader<T: DeserializeOwned>(
    path: &Path,
) -> Result<impl Iterator<Item = Result<T, IoError>>, IoError> {
    let file = File::open(path).map_err(|e| file_err(path, e))?;
    let display = path.display().to_string();
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Err(source) => Some(Err(IoError::File {
                path: display.clone(),
                source,
            })),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(serde_json::from_str(&l).map_err(|source| IoError::Json {
                path: display.clone(),
                line: i + 1,
                source,
            })),
        }))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    jsonl_reader(path)?.collect()
}

/// Writes records one per line.
pub struct JsonlWriter {
    path: String,
    out: BufWriter<File>,
    written: usize,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        let file = File::create(path).map_err(|e| file_err(path, e))?;
        Ok(JsonlWriter {
            path: path.display().to_string(),
            out: BufWriter::new(file),
            written: 0,
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), IoError> {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(self.out, "{line}").map_err(|source| IoError::File {
            path: self.path.clone(),
            source,
        })?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<usize, IoError> {
        self.out.flush().map_err(|source| IoError::File {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.written)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let mut w = JsonlWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish().map(|_| ())
}
