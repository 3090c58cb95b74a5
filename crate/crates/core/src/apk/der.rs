//! Just enough BER/DER to walk a PKCS#7 `SignedData`. Certificates
//! themselves are handed to `x509-parser`.

use crate::error::CertificateError;

pub(crate) const TAG_INTEGER: u8 = 0x02;
pub(crate) const TAG_OID: u8 = 0x06;
pub(crate) const TAG_SEQUENCE: u8 = 0x30;
pub(crate) const TAG_SET: u8 = 0x31;
pub(crate) const TAG_CONTEXT_0: u8 = 0xA0;
pub(crate) const TAG_CONTEXT_0_PRIMITIVE: u8 = 0x80;

const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tlv<'a> {
    pub tag: u8,
    pub content: &'a [u8],
    /// Tag, length and content (and end-of-contents octets for BER).
    pub raw: &'a [u8],
}

fn err(msg: impl Into<String>) -> CertificateError {
    CertificateError::Pkcs7(msg.into())
}

/// Reads one TLV from the start of `input`, returning it and the remainder.
pub(crate) fn read_tlv(input: &[u8]) -> Result<(Tlv<'_>, &[u8]), CertificateError> {
    read_tlv_depth(input, 0)
}

fn read_tlv_depth(input: &[u8], depth: usize) -> Result<(Tlv<'_>, &[u8]), CertificateError> {
    if depth > MAX_DEPTH {
        return Err(err("nesting too deep"));
    }
    let tag = *input
        .first()
        .ok_or_else(|| err("unexpected end of input"))?;
    if tag & 0x1F == 0x1F {
        return Err(err("high tag numbers are not supported"));
    }
    let first = *input.get(1).ok_or_else(|| err("missing length"))?;
    let (len, header) = match first {
        0x80 => {
            if tag & 0x20 == 0 {
                return Err(err("indefinite length on primitive"));
            }
            // BER indefinite length: children until the 00 00 terminator
            let mut rest = &input[2..];
            loop {
                if rest.len() < 2 {
                    return Err(err("unterminated indefinite length"));
                }
                if rest[0] == 0 && rest[1] == 0 {
                    break;
                }
                rest = read_tlv_depth(rest, depth + 1)?.1;
            }
            let content_len = input.len() - 2 - rest.len();
            let total = 2 + content_len + 2;
            let tlv = Tlv {
                tag,
                content: &input[2..2 + content_len],
                raw: &input[..total],
            };
            return Ok((tlv, &input[total..]));
        }
        n if n & 0x80 == 0 => (n as usize, 2),
        n => {
            let count = (n & 0x7F) as usize;
            if count > 4 {
                return Err(err("length too large"));
            }
            let bytes = input
                .get(2..2 + count)
                .ok_or_else(|| err("truncated length"))?;
            (
                bytes.iter().fold(0usize, |acc, b| (acc << 8) | *b as usize),
                2 + count,
            )
        }
    };
    let end = header
        .checked_add(len)
        .filter(|e| *e <= input.len())
        .ok_or_else(|| err("content overruns input"))?;
    Ok((
        Tlv {
            tag,
            content: &input[header..end],
            raw: &input[..end],
        },
        &input[end..],
    ))
}

/// Reads all TLVs in `input`.
pub(crate) fn read_all(mut input: &[u8]) -> Result<Vec<Tlv<'_>>, CertificateError> {
    let mut out = Vec::new();
    while !input.is_empty() {
        let (tlv, rest) = read_tlv(input)?;
        out.push(tlv);
        input = rest;
    }
    Ok(out)
}

pub(crate) fn expect(tlv: &Tlv<'_>, tag: u8, what: &str) -> Result<(), CertificateError> {
    if tlv.tag != tag {
        return Err(err(format!(
            "{what}: expected tag {tag:#04x}, found {:#04x}",
            tlv.tag
        )));
    }
    Ok(())
}
