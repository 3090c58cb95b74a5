//! JAR (v1) signature blocks: PKCS#7 `SignedData` under `META-INF/`.

use x509_parser::extensions::ParsedExtension;
use x509_parser::prelude::{FromDer, X509Certificate};

use crate::apk::der::{
    expect, read_all, read_tlv, Tlv, TAG_CONTEXT_0, TAG_CONTEXT_0_PRIMITIVE, TAG_INTEGER, TAG_OID,
    TAG_SEQUENCE, TAG_SET,
};
use crate::error::CertificateError;

/// 1.2.840.113549.1.7.2
const OID_SIGNED_DATA: &[u8] = &[0x2A, 0x86, 0x48, 0x86, 0xF7, 0x0D, 0x01, 0x07, 0x02];

/// Whether `name` is a v1 signature block file.
pub(crate) fn is_signature_block(name: &str) -> bool {
    let Some(file) = name.strip_prefix("META-INF/") else {
        return false;
    };
    if file.contains('/') {
        return false;
    }
    let upper = file.to_ascii_uppercase();
    [".RSA", ".DSA", ".EC"]
        .iter()
        .any(|ext| upper.ends_with(ext))
}

enum SignerId<'a> {
    IssuerSerial { issuer: &'a [u8], serial: &'a [u8] },
    KeyId(&'a [u8]),
}

struct CandidateCert<'a> {
    raw: &'a [u8],
    issuer: &'a [u8],
    subject: &'a [u8],
    serial: &'a [u8],
    key_id: Option<&'a [u8]>,
}

/// Returns the DER of every end-entity signer certificate in a PKCS#7
/// `SignedData` blob.
///
/// Signer certificates are matched through each `SignerInfo`'s identifier;
/// if none match, certificates that did not issue another certificate in
/// the bag are returned instead.
pub(crate) fn signer_certificates(blob: &[u8]) -> Result<Vec<Vec<u8>>, CertificateError> {
    let (content_info, _) = read_tlv(blob)?;
    expect(&content_info, TAG_SEQUENCE, "ContentInfo")?;
    let parts = read_all(content_info.content)?;
    let [oid, explicit, ..] = parts.as_slice() else {
        return Err(CertificateError::Pkcs7("ContentInfo too short".into()));
    };
    expect(oid, TAG_OID, "contentType")?;
    if oid.content != OID_SIGNED_DATA {
        return Err(CertificateError::Pkcs7(
            "content type is not signedData".into(),
        ));
    }
    expect(explicit, TAG_CONTEXT_0, "content")?;
    let (signed_data, _) = read_tlv(explicit.content)?;
    expect(&signed_data, TAG_SEQUENCE, "SignedData")?;
    let fields = read_all(signed_data.content)?;

    // version, digestAlgorithms, encapContentInfo, [0] certificates, [1] crls, signerInfos
    let certs_field = fields.iter().find(|t| t.tag == TAG_CONTEXT_0);
    let signer_infos = fields
        .iter()
        .rev()
        .find(|t| t.tag == TAG_SET)
        .ok_or_else(|| CertificateError::Pkcs7("missing signerInfos".into()))?;

    let cert_tlvs = match certs_field {
        Some(field) => read_all(field.content)?,
        None => Vec::new(),
    };
    let parsed: Vec<X509Certificate<'_>> = cert_tlvs
        .iter()
        .map(|t| {
            X509Certificate::from_der(t.raw)
                .map(|(_, c)| c)
                .map_err(|e| CertificateError::Der(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let candidates: Vec<CandidateCert<'_>> = cert_tlvs
        .iter()
        .zip(parsed.iter())
        .map(|(tlv, cert)| CandidateCert {
            raw: tlv.raw,
            issuer: cert.issuer().as_raw(),
            subject: cert.subject().as_raw(),
            serial: cert.raw_serial(),
            key_id: cert
                .extensions()
                .iter()
                .find_map(|ext| match ext.parsed_extension() {
                    ParsedExtension::SubjectKeyIdentifier(id) => Some(id.0),
                    _ => None,
                }),
        })
        .collect();

    let mut selected: Vec<&[u8]> = Vec::new();
    for info in read_all(signer_infos.content)? {
        let Some(sid) = signer_id(&info)? else {
            continue;
        };
        let found = candidates.iter().find(|c| match sid {
            SignerId::IssuerSerial { issuer, serial } => {
                c.issuer == issuer && strip_leading_zeros(c.serial) == strip_leading_zeros(serial)
            }
            SignerId::KeyId(id) => c.key_id == Some(id),
        });
        if let Some(cert) = found {
            if !selected.contains(&cert.raw) {
                selected.push(cert.raw);
            }
        }
    }
    if selected.is_empty() {
        selected = candidates
            .iter()
            .filter(|c| {
                !candidates
                    .iter()
                    .any(|other| other.issuer == c.subject && other.raw != c.raw)
            })
            .map(|c| c.raw)
            .collect();
    }
    Ok(selected.into_iter().map(<[u8]>::to_vec).collect())
}

fn signer_id<'a>(info: &Tlv<'a>) -> Result<Option<SignerId<'a>>, CertificateError> {
    expect(info, TAG_SEQUENCE, "SignerInfo")?;
    let fields = read_all(info.content)?;
    let Some(sid) = fields.get(1) else {
        return Ok(None);
    };
    match sid.tag {
        TAG_SEQUENCE => {
            let parts = read_all(sid.content)?;
            match parts.as_slice() {
                [issuer, serial, ..] if issuer.tag == TAG_SEQUENCE && serial.tag == TAG_INTEGER => {
                    Ok(Some(SignerId::IssuerSerial {
                        issuer: issuer.raw,
                        serial: serial.content,
                    }))
                }
                _ => Ok(None),
            }
        }
        TAG_CONTEXT_0_PRIMITIVE => Ok(Some(SignerId::KeyId(sid.content))),
        _ => Ok(None),
    }
}

fn strip_leading_zeros(bytes: &[u8]) -> &[u8] {
    let start = bytes.iter().position(|b| *b != 0).unwrap_or(bytes.len());
    &bytes[start..]
}
