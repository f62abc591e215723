//! Versioned JSON files for models, tables and other training artifacts.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: expected a `{expected}` file, found `{found}`")]
    WrongFormat {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}: format version {found} is not supported (expected {expected})")]
    Version {
        path: String,
        expected: u32,
        found: u32,
    },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    data: T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn to_versioned_json<T: Serialize>(format: &str, data: &T) -> String {
    serde_json::to_string_pretty(&Envelope {
        format: format.to_string(),
        version: FORMAT_VERSION,
        data,
    })
    .expect("artifact serializes")
}

pub fn from_versioned_json<T: DeserializeOwned>(
    format: &str,
    text: &str,
    path: &str,
) -> Result<T, PersistError> {
    let json = |source| PersistError::Json {
        path: path.to_string(),
        source,
    };
    let header: Header = serde_json::from_str(text).map_err(json)?;
    if header.format != format {
        return Err(PersistError::WrongFormat {
            path: path.to_string(),
            expected: format.to_string(),
            found: header.format,
        });
    }
    if header.version != FORMAT_VERSION {
        return Err(PersistError::Version {
            path: path.to_string(),
            expected: FORMAT_VERSION,
            found: header.version,
        });
    }
    let env: Envelope<T> = serde_json::from_str(text).map_err(json)?;
    Ok(env.data)
}

pub fn save<T: Serialize>(path: &Path, format: &str, data: &T) -> Result<(), PersistError> {
    std::fs::write(path, to_versioned_json(format, data)).map_err(|e| PersistError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T, PersistError> {
    let p = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| PersistError::Io {
        path: p.clone(),
        message: e.to_string(),
    })?;
    from_versioned_json(format, &text, &p)
}
