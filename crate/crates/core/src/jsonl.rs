//! JSON Lines reading and writing.

use serde::{de::DeserializeOwned, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl JsonlError {
    pub fn line(&self) -> Option<usize> {
        match self {
            JsonlError::Parse { line, .. } => Some(*line),
            JsonlError::Io { .. } => None,
        }
    }
}

/// Parses every non-blank line. Line numbers in errors are 1-based.
pub fn parse_str<T: DeserializeOwned>(text: &str, origin: &str) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|source| JsonlError::Parse {
            path: origin.to_string(),
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text, &path.display().to_string())
}

pub fn to_string<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable record"));
        out.push('\n');
    }
    out
}

pub fn write<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> Result<(), JsonlError> {
    let path = path.as_ref();
    std::fs::write(path, to_string(items)).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Appends one record as a line, creating the file if needed.
pub fn append<T: Serialize>(path: impl AsRef<Path>, item: &T) -> Result<(), JsonlError> {
    let path = path.as_ref();
    let io = |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let mut line = serde_json::to_string(item).expect("serializable record");
    line.push('\n');
    f.write_all(line.as_bytes()).map_err(io)
}

/// Streams lines from any reader; used for stdin input.
pub fn from_reader<T: DeserializeOwned, R: BufRead>(reader: R, origin: &str) -> Result<Vec<T>, JsonlError> {
    let mut text = String::new();
    for line in reader.lines() {
        let line = line.map_err(|source| JsonlError::Io {
            path: origin.to_string(),
            source,
        })?;
        text.push_str(&line);
        text.push('\n');
    }
    parse_str(&text, origin)
}
