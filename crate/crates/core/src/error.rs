use thiserror::Error;

use crate::signal::SignalKind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignalError {
    #[error("unknown signal kind `{0}`")]
    UnknownKind(String),
    #[error("malformed certificate fingerprint `{0}`: expected 64 hex digits")]
    MalformedFingerprint(String),
}

/// Errors from the Android binary XML and resource table readers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResourceError {
    #[error("malformed chunk at offset {offset}: {reason}")]
    MalformedChunk { offset: usize, reason: String },
    #[error("string pool index {index} out of range ({len} strings)")]
    StringIndex { index: u32, len: usize },
    #[error("root element is `{0}`, expected `manifest`")]
    NotAManifest(String),
    #[error("manifest has no package attribute")]
    MissingPackage,
}

impl ResourceError {
    pub(crate) fn malformed(offset: usize, reason: impl Into<String>) -> Self {
        ResourceError::MalformedChunk {
            offset,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("DER decode failure: {0}")]
    Der(String),
    #[error("PKCS#7 structure: {0}")]
    Pkcs7(String),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("not a zip archive: {0}")]
    NotAZip(String),
    #[error("AndroidManifest.xml missing from archive")]
    ManifestMissing,
    #[error("AndroidManifest.xml unparseable: {0}")]
    Manifest(#[from] ResourceError),
    #[error("reading archive member `{name}`: {source}")]
    Member {
        name: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid market registry: {0}")]
    Registry(String),
    #[error("unsupported dataset format version {found} (this build reads {supported})")]
    FormatVersion { found: u32, supported: u32 },
    #[error("{0}")]
    Duplicate(String),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("signal kind `{0}` is not part of this graph")]
    KindNotInGraph(SignalKind),
    #[error("signal kind `{0}` cannot be a graph node")]
    NotAGraphKind(SignalKind),
}
