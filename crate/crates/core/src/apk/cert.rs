//! Signing certificate identity: fingerprint, subject/issuer RDNs.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use x509_parser::der_parser::asn1_rs::Tag;
use x509_parser::oid_registry::{
    Oid, OID_X509_COMMON_NAME, OID_X509_COUNTRY_NAME, OID_X509_LOCALITY_NAME,
    OID_X509_ORGANIZATIONAL_UNIT, OID_X509_ORGANIZATION_NAME, OID_X509_STATE_OR_PROVINCE_NAME,
};
use x509_parser::prelude::{FromDer, X509Certificate, X509Name};

use crate::error::CertificateError;

/// APK signature scheme a certificate was found under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignatureScheme {
    V1,
    V2,
    V3,
}

impl fmt::Display for SignatureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SignatureScheme::V1 => "V1",
            SignatureScheme::V2 => "V2",
            SignatureScheme::V3 => "V3",
        };
        f.write_str(s)
    }
}

/// The six distinguished-name attributes tracked for availability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdnField {
    CommonName,
    Organization,
    OrganizationalUnit,
    Locality,
    State,
    Country,
}

impl RdnField {
    pub const ALL: [RdnField; 6] = [
        RdnField::CommonName,
        RdnField::Organization,
        RdnField::OrganizationalUnit,
        RdnField::Locality,
        RdnField::State,
        RdnField::Country,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RdnField::CommonName => "common_name",
            RdnField::Organization => "organization",
            RdnField::OrganizationalUnit => "organizational_unit",
            RdnField::Locality => "locality",
            RdnField::State => "state",
            RdnField::Country => "country",
        }
    }

    fn oid(self) -> Oid<'static> {
        match self {
            RdnField::CommonName => OID_X509_COMMON_NAME,
            RdnField::Organization => OID_X509_ORGANIZATION_NAME,
            RdnField::OrganizationalUnit => OID_X509_ORGANIZATIONAL_UNIT,
            RdnField::Locality => OID_X509_LOCALITY_NAME,
            RdnField::State => OID_X509_STATE_OR_PROVINCE_NAME,
            RdnField::Country => OID_X509_COUNTRY_NAME,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RdnSet {
    pub common_name: Option<String>,
    pub organization: Option<String>,
    pub organizational_unit: Option<String>,
    pub locality: Option<String>,
    pub state: Option<String>,
    pub country: Option<String>,
}

impl RdnSet {
    pub fn get(&self, field: RdnField) -> Option<&str> {
        match field {
            RdnField::CommonName => self.common_name.as_deref(),
            RdnField::Organization => self.organization.as_deref(),
            RdnField::OrganizationalUnit => self.organizational_unit.as_deref(),
            RdnField::Locality => self.locality.as_deref(),
            RdnField::State => self.state.as_deref(),
            RdnField::Country => self.country.as_deref(),
        }
    }

    fn slot(&mut self, field: RdnField) -> &mut Option<String> {
        match field {
            RdnField::CommonName => &mut self.common_name,
            RdnField::Organization => &mut self.organization,
            RdnField::OrganizationalUnit => &mut self.organizational_unit,
            RdnField::Locality => &mut self.locality,
            RdnField::State => &mut self.state,
            RdnField::Country => &mut self.country,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateInfo {
    pub fingerprint_sha256: String,
    pub subject: RdnSet,
    pub issuer: RdnSet,
    pub self_signed: bool,
    pub schemes: BTreeSet<SignatureScheme>,
}

/// A parsed certificate plus anything noteworthy about how its names were
/// decoded (legacy string types are transliterated best-effort).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCertificate {
    pub info: CertificateInfo,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses a DER certificate. `schemes` is left empty.
pub fn parse_certificate(der: &[u8]) -> Result<CertificateInfo, CertificateError> {
    parse_certificate_with_warnings(der).map(|p| p.info)
}

pub fn parse_certificate_with_warnings(der: &[u8]) -> Result<ParsedCertificate, CertificateError> {
    let (rest, cert) =
        X509Certificate::from_der(der).map_err(|e| CertificateError::Der(e.to_string()))?;
    if !rest.is_empty() {
        return Err(CertificateError::Der(format!(
            "{} trailing bytes",
            rest.len()
        )));
    }
    let mut warnings = Vec::new();
    let subject = read_rdns(cert.subject(), &mut warnings);
    let issuer = read_rdns(cert.issuer(), &mut warnings);
    Ok(ParsedCertificate {
        info: CertificateInfo {
            fingerprint_sha256: sha256_hex(der),
            subject,
            issuer,
            self_signed: cert.subject().as_raw() == cert.issuer().as_raw(),
            schemes: BTreeSet::new(),
        },
        warnings,
    })
}

fn read_rdns(name: &X509Name<'_>, warnings: &mut Vec<String>) -> RdnSet {
    let mut set = RdnSet::default();
    for attr in name.iter_attributes() {
        let Some(field) = RdnField::ALL
            .into_iter()
            .find(|f| *attr.attr_type() == f.oid())
        else {
            continue;
        };
        let slot = set.slot(field);
        if slot.is_some() {
            continue; // first occurrence wins
        }
        let value = attr.attr_value();
        let (text, lossy) = decode_directory_string(value.tag(), value.data);
        if lossy {
            let warning = format!("transliterated-rdn:{}", field.as_str());
            if !warnings.contains(&warning) {
                warnings.push(warning);
            }
        }
        let text = text.trim();
        if !text.is_empty() {
            *slot = Some(text.to_string());
        }
    }
    set
}

/// Decodes an X.520 DirectoryString. The flag is set when the encoding had to
/// be guessed or bytes were replaced.
fn decode_directory_string(tag: Tag, data: &[u8]) -> (String, bool) {
    match tag {
        Tag::Utf8String
        | Tag::PrintableString
        | Tag::Ia5String
        | Tag::VisibleString
        | Tag::NumericString => match std::str::from_utf8(data) {
            Ok(s) => (s.to_string(), false),
            Err(_) => (String::from_utf8_lossy(data).into_owned(), true),
        },
        Tag::BmpString => {
            let units: Vec<u16> = data
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect();
            match String::from_utf16(&units) {
                Ok(s) if data.len() % 2 == 0 => (s, false),
                _ => (String::from_utf16_lossy(&units), true),
            }
        }
        Tag::UniversalString => {
            let mut lossy = data.len() % 4 != 0;
            let s = data
                .chunks_exact(4)
                .map(|c| {
                    char::from_u32(u32::from_be_bytes([c[0], c[1], c[2], c[3]])).unwrap_or_else(
                        || {
                            lossy = true;
                            char::REPLACEMENT_CHARACTER
                        },
                    )
                })
                .collect();
            (s, lossy)
        }
        // T.61 and anything else: read as Latin-1
        _ => (data.iter().map(|b| *b as char).collect(), true),
    }
}

/// Whether the subject matches the one used by Play App Signing
/// certificates (`CN=Google Inc.`, organization absent or also `Google Inc.`).
pub fn is_play_signing_subject(cert: &CertificateInfo) -> bool {
    const PLAY: &str = "google inc.";
    let matches = |v: &str| v.trim().to_lowercase() == PLAY;
    match cert.subject.common_name.as_deref() {
        Some(cn) if matches(cn) => cert.subject.organization.as_deref().is_none_or(matches),
        _ => false,
    }
}
