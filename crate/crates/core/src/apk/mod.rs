//! APK signal extraction: manifest package name and label, and every
//! signing certificate across the v1, v2 and v3 signature schemes.
//!
//! Signatures are not verified. Only the identity claims are read.

mod arsc;
mod axml;
pub mod cert;
mod der;
pub mod naming;
mod res;
mod signing_block;
mod v1;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Cursor, Read};

use log::debug;
use serde::{Deserialize, Serialize};

pub use arsc::ResourceTable;
pub use axml::{parse_manifest, ManifestInfo, ManifestLabel};
pub use cert::{
    is_play_signing_subject, parse_certificate, parse_certificate_with_warnings, sha256_hex,
    CertificateInfo, ParsedCertificate, RdnField, RdnSet, SignatureScheme,
};
pub use naming::{
    check_naming_convention, match_package_scheme, BuilderSchemes, NamingCheck, NamingMatch,
};

use crate::error::{ExtractError, ResourceError};

pub const WARN_UNSIGNED: &str = "unsigned";
pub const WARN_CROSS_SCHEME_MISMATCH: &str = "cross-scheme-mismatch";
pub const WARN_UNRESOLVED_RESOURCE: &str = "unresolved-resource";

/// Signals recovered from one APK file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApkSignals {
    pub apk_sha256: String,
    pub package_name: String,
    pub app_name_manifest: Option<String>,
    /// Sorted by fingerprint.
    pub certificates: Vec<CertificateInfo>,
    /// Largest number of signers declared by any one scheme; 0 when unsigned.
    pub signer_count: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractOptions {
    /// Resolve `@string/...` labels through `resources.arsc`.
    pub resolve_resources: bool,
}

/// Package name and label from a compiled manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestSignals {
    pub package_name: String,
    pub app_label: Option<String>,
    /// Why the label is absent despite being declared (`unresolved-resource`).
    pub label_warning: Option<&'static str>,
}

/// Reads the package name and label, resolving a label reference through
/// `resources` when one is supplied.
pub fn parse_manifest_package_and_label(
    manifest: &[u8],
    resources: Option<&[u8]>,
) -> Result<ManifestSignals, ResourceError> {
    let info = parse_manifest(manifest)?;
    let (app_label, label_warning) = match info.label {
        None => (None, None),
        Some(ManifestLabel::Literal(text)) => (Some(text), None),
        Some(ManifestLabel::Reference(id)) => {
            let resolved = match resources {
                Some(bytes) => ResourceTable::parse(bytes)?.resolve_string(id),
                None => None,
            };
            match resolved {
                Some(text) => (Some(text), None),
                None => (None, Some(WARN_UNRESOLVED_RESOURCE)),
            }
        }
    };
    Ok(ManifestSignals {
        package_name: info.package_name,
        app_label,
        label_warning,
    })
}

#[derive(Default)]
struct CertCollector {
    certs: BTreeMap<String, CertificateInfo>,
    warnings: Vec<String>,
}

impl CertCollector {
    /// Records `der` under `scheme`, returning its fingerprint.
    fn add(&mut self, der: &[u8], scheme: SignatureScheme) -> Option<String> {
        match parse_certificate_with_warnings(der) {
            Ok(parsed) => {
                for w in parsed.warnings {
                    if !self.warnings.contains(&w) {
                        self.warnings.push(w);
                    }
                }
                let fp = parsed.info.fingerprint_sha256.clone();
                self.certs
                    .entry(fp.clone())
                    .or_insert(parsed.info)
                    .schemes
                    .insert(scheme);
                Some(fp)
            }
            Err(e) => {
                self.warnings
                    .push(format!("certificate-unparseable:{scheme}: {e}"));
                None
            }
        }
    }
}

fn read_member<R: Read + std::io::Seek>(
    archive: &mut zip::ZipArchive<R>,
    name: &str,
) -> Result<Option<Vec<u8>>, ExtractError> {
    let mut file = match archive.by_name(name) {
        Ok(f) => f,
        Err(zip::result::ZipError::FileNotFound) => return Ok(None),
        Err(e) => return Err(ExtractError::NotAZip(e.to_string())),
    };
    let mut buf = Vec::with_capacity(file.size() as usize);
    file.read_to_end(&mut buf)
        .map_err(|source| ExtractError::Member {
            name: name.to_string(),
            source,
        })?;
    Ok(Some(buf))
}

/// Extracts [`ApkSignals`] from the raw bytes of an APK.
///
/// Unsigned archives are not an error: they come back with no certificates
/// and an `unsigned` warning. Unreadable signature data is likewise
/// reported as a warning so one damaged block does not hide the others.
pub fn extract_apk(bytes: &[u8], options: &ExtractOptions) -> Result<ApkSignals, ExtractError> {
    let apk_sha256 = sha256_hex(bytes);
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| ExtractError::NotAZip(e.to_string()))?;

    let manifest =
        read_member(&mut archive, "AndroidManifest.xml")?.ok_or(ExtractError::ManifestMissing)?;
    let resources = if options.resolve_resources {
        read_member(&mut archive, "resources.arsc")?
    } else {
        None
    };
    let mut warnings = Vec::new();
    let manifest = match parse_manifest_package_and_label(&manifest, resources.as_deref()) {
        Ok(m) => m,
        // a broken resource table should not lose the package name
        Err(e) if resources.is_some() => {
            warnings.push(format!("resource-table-unparseable: {e}"));
            parse_manifest_package_and_label(&manifest, None)?
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(w) = manifest.label_warning {
        warnings.push(w.to_string());
    }

    let mut collector = CertCollector::default();

    let mut block_names: Vec<String> = archive
        .file_names()
        .filter(|n| v1::is_signature_block(n))
        .map(str::to_string)
        .collect();
    block_names.sort();
    let mut v1_certs = BTreeSet::new();
    let mut v1_signers = 0;
    for name in &block_names {
        let Some(blob) = read_member(&mut archive, name)? else {
            continue;
        };
        match v1::signer_certificates(&blob) {
            Ok(certs) => {
                if !certs.is_empty() {
                    v1_signers += 1;
                }
                for der in certs {
                    v1_certs.extend(collector.add(&der, SignatureScheme::V1));
                }
            }
            Err(e) => warnings.push(format!("v1-signature-unparseable:{name}: {e}")),
        }
    }

    let mut v2_certs = BTreeSet::new();
    let (mut v2_signers, mut v3_signers) = (0, 0);
    match signing_block::find_pairs(bytes) {
        Ok(Some(pairs)) => {
            for (id, value) in pairs {
                let v3 = matches!(id, signing_block::V3_BLOCK_ID | signing_block::V31_BLOCK_ID);
                if id != signing_block::V2_BLOCK_ID && !v3 {
                    debug!("skipping signing block entry {id:#010x}");
                    continue;
                }
                let signers = match signing_block::parse_signers(id, value) {
                    Ok(s) => s,
                    Err(e) => {
                        warnings.push(format!("signing-block-unparseable:{id:#010x}: {e}"));
                        continue;
                    }
                };
                if v3 {
                    v3_signers = v3_signers.max(signers.len());
                    for signer in &signers {
                        collector.add(&signer.certificate, SignatureScheme::V3);
                        for der in &signer.lineage {
                            collector.add(der, SignatureScheme::V3);
                        }
                    }
                } else {
                    v2_signers = signers.len();
                    for signer in &signers {
                        v2_certs.extend(collector.add(&signer.certificate, SignatureScheme::V2));
                    }
                }
            }
        }
        Ok(None) => {}
        Err(e) => warnings.push(format!("signing-block-unparseable: {e}")),
    }

    let signer_count = v1_signers.max(v2_signers).max(v3_signers);
    if collector.certs.is_empty() {
        warnings.push(WARN_UNSIGNED.to_string());
    }
    if !v1_certs.is_empty() && !v2_certs.is_empty() && v1_certs != v2_certs {
        warnings.push(WARN_CROSS_SCHEME_MISMATCH.to_string());
    }
    warnings.extend(collector.warnings);

    Ok(ApkSignals {
        apk_sha256,
        package_name: manifest.package_name,
        app_name_manifest: manifest.app_label,
        certificates: collector.certs.into_values().collect(),
        signer_count,
        warnings,
    })
}
