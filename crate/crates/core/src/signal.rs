//! Attribution signal vocabulary: kinds, canonical normalization, script
//! classification and edit-distance similarity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::SignalError;

/// The closed set of attribution signal kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    PackageName,
    AppNameMarket,
    AppNameManifest,
    DeveloperName,
    DeveloperWebsite,
    DeveloperEmail,
    DeveloperAddress,
    PrivacyPolicyUrl,
    CertFingerprint,
}

impl SignalKind {
    pub const ALL: [SignalKind; 9] = [
        SignalKind::PackageName,
        SignalKind::AppNameMarket,
        SignalKind::AppNameManifest,
        SignalKind::DeveloperName,
        SignalKind::DeveloperWebsite,
        SignalKind::DeveloperEmail,
        SignalKind::DeveloperAddress,
        SignalKind::PrivacyPolicyUrl,
        SignalKind::CertFingerprint,
    ];

    /// Kinds published on a market profile (everything except the package
    /// name, the manifest label and the certificate).
    pub const MARKET_METADATA: [SignalKind; 6] = [
        SignalKind::AppNameMarket,
        SignalKind::DeveloperName,
        SignalKind::DeveloperWebsite,
        SignalKind::DeveloperEmail,
        SignalKind::DeveloperAddress,
        SignalKind::PrivacyPolicyUrl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::PackageName => "package_name",
            SignalKind::AppNameMarket => "app_name_market",
            SignalKind::AppNameManifest => "app_name_manifest",
            SignalKind::DeveloperName => "developer_name",
            SignalKind::DeveloperWebsite => "developer_website",
            SignalKind::DeveloperEmail => "developer_email",
            SignalKind::DeveloperAddress => "developer_address",
            SignalKind::PrivacyPolicyUrl => "privacy_policy_url",
            SignalKind::CertFingerprint => "cert_fingerprint",
        }
    }

    pub fn is_url(self) -> bool {
        matches!(
            self,
            SignalKind::DeveloperWebsite | SignalKind::PrivacyPolicyUrl
        )
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalKind {
    type Err = SignalError;

    /// Accepts the snake_case names plus the short aliases used on the
    /// command line (`cert`, `app_name`, `website`, `email`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "package_name" | "package" => SignalKind::PackageName,
            "app_name_market" | "app_name" => SignalKind::AppNameMarket,
            "app_name_manifest" | "manifest_label" => SignalKind::AppNameManifest,
            "developer_name" | "developer" => SignalKind::DeveloperName,
            "developer_website" | "website" => SignalKind::DeveloperWebsite,
            "developer_email" | "email" => SignalKind::DeveloperEmail,
            "developer_address" | "address" => SignalKind::DeveloperAddress,
            "privacy_policy_url" | "privacy_policy" => SignalKind::PrivacyPolicyUrl,
            "cert_fingerprint" | "cert" | "certificate" => SignalKind::CertFingerprint,
            _ => return Err(SignalError::UnknownKind(s.to_string())),
        };
        Ok(kind)
    }
}

/// A normalized attribution datum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signal {
    pub kind: SignalKind,
    pub raw_value: String,
    pub canonical_value: String,
}

/// Normalizes `raw` into a [`Signal`].
///
/// Returns `Ok(None)` when nothing is left after trimming: an empty value and
/// a missing value are the same thing. Text kinds are NFC-composed and fully
/// case folded. URL kinds only lowercase scheme and host and drop one
/// trailing `/`. Fingerprints must be 64 hex digits.
pub fn normalize_signal(kind: SignalKind, raw: &str) -> Result<Option<Signal>, SignalError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    let canonical = match kind {
        SignalKind::CertFingerprint => canonical_fingerprint(trimmed)?,
        k if k.is_url() => canonical_url(trimmed),
        _ => canonical_text(trimmed),
    };
    if canonical.is_empty() {
        return Ok(None);
    }
    Ok(Some(Signal {
        kind,
        raw_value: raw.to_string(),
        canonical_value: canonical,
    }))
}

/// Validates and lowercases a SHA-256 hex digest.
pub fn canonical_fingerprint(value: &str) -> Result<String, SignalError> {
    if value.len() != 64 || !value.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(SignalError::MalformedFingerprint(value.to_string()));
    }
    Ok(value.to_ascii_lowercase())
}

fn canonical_text(value: &str) -> String {
    let composed: String = value.nfc().collect();
    let folded = caseless::default_case_fold_str(&composed);
    folded.nfc().collect::<String>().trim().to_string()
}

fn canonical_url(value: &str) -> String {
    let composed: String = value.nfc().collect();
    let (scheme, rest) = match composed.find("://") {
        Some(idx) => (Some(&composed[..idx]), &composed[idx + 3..]),
        None => (None, composed.as_str()),
    };
    let authority_end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let (authority, tail) = rest.split_at(authority_end);

    let mut out = String::with_capacity(composed.len());
    if let Some(scheme) = scheme {
        out.push_str(&scheme.to_lowercase());
        out.push_str("://");
    }
    out.push_str(&authority.to_lowercase());
    out.push_str(tail);
    // exactly one trailing slash is dropped; "//" is kept so the result is a fixed point
    if out.ends_with('/') && !out.ends_with("//") {
        out.pop();
    }
    out.trim().to_string()
}

/// Writing-system classification of a text value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    Latin,
    NonLatin,
    Mixed,
    Empty,
}

const LATIN_RANGES: &[(u32, u32)] = &[
    (0x0000, 0x024F),   // Basic Latin through Latin Extended-B
    (0x0250, 0x02AF),   // IPA Extensions
    (0x1E00, 0x1EFF),   // Latin Extended Additional
    (0x2C60, 0x2C7F),   // Latin Extended-C
    (0xA720, 0xA7FF),   // Latin Extended-D
    (0xAB30, 0xAB6F),   // Latin Extended-E
    (0xFB00, 0xFB06),   // Latin ligatures
    (0xFF21, 0xFF3A),   // fullwidth A-Z
    (0xFF41, 0xFF5A),   // fullwidth a-z
    (0x10780, 0x107BF), // Latin Extended-F
    (0x1DF00, 0x1DFFF), // Latin Extended-G
];

fn is_latin_block(c: char) -> bool {
    let cp = c as u32;
    LATIN_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// Classifies `text` by its alphabetic code points. Digits, punctuation and
/// whitespace do not count either way.
pub fn detect_script(text: &str) -> Script {
    let (mut latin, mut other) = (false, false);
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        if is_latin_block(c) {
            latin = true;
        } else {
            other = true;
        }
        if latin && other {
            return Script::Mixed;
        }
    }
    match (latin, other) {
        (true, false) => Script::Latin,
        (false, true) => Script::NonLatin,
        _ => Script::Empty,
    }
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - d(a, b) / max(|a|, |b|)` with lengths in code points; 1.0 for two
/// empty strings.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_distance(a, b) as f64 / longest as f64
}
