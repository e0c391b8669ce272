//! Line-oriented JSON helpers shared by every artifact reader and writer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

/// A malformed line noted while reading leniently.
#[derive(Debug, Clone)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Reads every line as a `T`; the first malformed line is an error carrying
/// its line number. Blank lines are skipped.
pub fn read<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| JsonlError::Malformed {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Reads every parseable line, collecting malformed ones instead of failing.
pub fn read_lossy<T: DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<(Vec<T>, Vec<LineError>), JsonlError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(record) => records.push(record),
            Err(e) => errors.push(LineError {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, errors))
}

/// Writes one compact JSON object per line.
pub fn write<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), JsonlError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| JsonlError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    let file = File::create(path).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| JsonlError::Malformed {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        out.write_all(line.as_bytes())
            .map_err(|source| JsonlError::Io {
                path: path.display().to_string(),
                source,
            })?;
        out.write_all(b"\n").map_err(|source| JsonlError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    out.flush().map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}
