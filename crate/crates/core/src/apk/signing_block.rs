//! APK Signing Block (v2/v3 signature schemes).
//!
//! The block sits immediately before the ZIP central directory:
//! `u64 size | (u64 len, u32 id, value)* | u64 size | "APK Sig Block 42"`.

use std::fmt;

const MAGIC: &[u8; 16] = b"APK Sig Block 42";
const EOCD_SIGNATURE: u32 = 0x0605_4b50;
const EOCD_MIN_SIZE: usize = 22;

pub(crate) const V2_BLOCK_ID: u32 = 0x7109_871a;
pub(crate) const V3_BLOCK_ID: u32 = 0xf053_68c0;
pub(crate) const V31_BLOCK_ID: u32 = 0x1b93_ad61;
const PROOF_OF_ROTATION_ATTR_ID: u32 = 0x3ba0_6f8c;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BlockError(pub String);

impl fmt::Display for BlockError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn fail<T>(msg: impl Into<String>) -> Result<T, BlockError> {
    Err(BlockError(msg.into()))
}

/// Little-endian cursor over length-prefixed structures.
struct Cursor<'a> {
    data: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8]) -> Self {
        Cursor { data }
    }

    fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], BlockError> {
        if n > self.data.len() {
            return fail(format!("need {n} bytes, {} left", self.data.len()));
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, BlockError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64, BlockError> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn length_prefixed(&mut self) -> Result<&'a [u8], BlockError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    /// A u32-length-prefixed sequence of u32-length-prefixed items.
    fn sequence(&mut self) -> Result<Vec<&'a [u8]>, BlockError> {
        let mut inner = Cursor::new(self.length_prefixed()?);
        let mut items = Vec::new();
        while !inner.is_empty() {
            items.push(inner.length_prefixed()?);
        }
        Ok(items)
    }
}

/// Locates the signing block and returns its `(id, value)` pairs, or `None`
/// when the archive has no signing block.
pub(crate) fn find_pairs(apk: &[u8]) -> Result<Option<Vec<(u32, &[u8])>>, BlockError> {
    let Some(eocd) = find_eocd(apk) else {
        return fail("end of central directory not found");
    };
    let cd_offset =
        u32::from_le_bytes(apk[eocd + 16..eocd + 20].try_into().expect("4 bytes")) as usize;
    if cd_offset > eocd || cd_offset < 32 {
        return Ok(None);
    }
    if &apk[cd_offset - 16..cd_offset] != MAGIC {
        return Ok(None);
    }
    let footer_size = u64::from_le_bytes(
        apk[cd_offset - 24..cd_offset - 16]
            .try_into()
            .expect("8 bytes"),
    );
    let block_size = usize::try_from(footer_size)
        .ok()
        .filter(|s| *s >= 24 && *s + 8 <= cd_offset)
        .ok_or_else(|| BlockError(format!("implausible signing block size {footer_size}")))?;
    let start = cd_offset - block_size - 8;
    let header_size = u64::from_le_bytes(apk[start..start + 8].try_into().expect("8 bytes"));
    if header_size != footer_size {
        return fail(format!(
            "signing block size mismatch: {header_size} != {footer_size}"
        ));
    }

    let mut cursor = Cursor::new(&apk[start + 8..cd_offset - 24]);
    let mut pairs = Vec::new();
    while !cursor.is_empty() {
        let len = cursor.u64()?;
        let len = usize::try_from(len)
            .ok()
            .filter(|l| *l >= 4)
            .ok_or_else(|| BlockError(format!("bad pair length {len}")))?;
        let mut pair = Cursor::new(cursor.take(len)?);
        let id = pair.u32()?;
        pairs.push((id, pair.data));
    }
    Ok(Some(pairs))
}

fn find_eocd(apk: &[u8]) -> Option<usize> {
    if apk.len() < EOCD_MIN_SIZE {
        return None;
    }
    let last = apk.len() - EOCD_MIN_SIZE;
    let first = last.saturating_sub(u16::MAX as usize);
    (first..=last).rev().find(|&at| {
        let sig = u32::from_le_bytes(apk[at..at + 4].try_into().expect("4 bytes"));
        let comment_len = u16::from_le_bytes([apk[at + 20], apk[at + 21]]) as usize;
        sig == EOCD_SIGNATURE && at + EOCD_MIN_SIZE + comment_len == apk.len()
    })
}

/// Certificates carried by one v2/v3 signer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct BlockSigner {
    /// The signer's own certificate (first of its chain).
    pub certificate: Vec<u8>,
    /// v3 proof-of-rotation lineage, oldest first. Empty for v2.
    pub lineage: Vec<Vec<u8>>,
}

/// Parses a v2 or v3 signature scheme block value into its signers.
pub(crate) fn parse_signers(id: u32, value: &[u8]) -> Result<Vec<BlockSigner>, BlockError> {
    let v3 = id != V2_BLOCK_ID;
    let mut outer = Cursor::new(value);
    let signers = outer.sequence()?;
    let mut out = Vec::with_capacity(signers.len());
    for signer in signers {
        let mut signer = Cursor::new(signer);
        let mut signed_data = Cursor::new(signer.length_prefixed()?);
        let _digests = signed_data.sequence()?;
        let certificates = signed_data.sequence()?;
        if v3 {
            let _min_sdk = signed_data.u32()?;
            let _max_sdk = signed_data.u32()?;
        }
        let attributes = signed_data.sequence()?;
        let Some(first) = certificates.first() else {
            return fail("signer without certificates");
        };
        let mut lineage = Vec::new();
        if v3 {
            for attr in attributes {
                let mut attr = Cursor::new(attr);
                if attr.u32()? == PROOF_OF_ROTATION_ATTR_ID {
                    lineage = parse_lineage(attr.data)?;
                }
            }
        }
        out.push(BlockSigner {
            certificate: first.to_vec(),
            lineage,
        });
    }
    Ok(out)
}

/// `u32 version` then nodes of
/// `lp(lp(lp(cert) u32 parent_alg) u32 flags u32 alg lp(signature))`.
fn parse_lineage(value: &[u8]) -> Result<Vec<Vec<u8>>, BlockError> {
    let mut cursor = Cursor::new(value);
    let _version = cursor.u32()?;
    let mut certs = Vec::new();
    while !cursor.is_empty() {
        let mut node = Cursor::new(cursor.length_prefixed()?);
        let mut signed = Cursor::new(node.length_prefixed()?);
        certs.push(signed.length_prefixed()?.to_vec());
    }
    Ok(certs)
}
