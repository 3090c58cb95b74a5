//! Chunk framing and string pools shared by binary XML and `resources.arsc`.

use crate::error::ResourceError;

pub(crate) const RES_STRING_POOL_TYPE: u16 = 0x0001;
pub(crate) const RES_TABLE_TYPE: u16 = 0x0002;
pub(crate) const RES_XML_TYPE: u16 = 0x0003;
pub(crate) const RES_XML_START_NAMESPACE_TYPE: u16 = 0x0100;
pub(crate) const RES_XML_START_ELEMENT_TYPE: u16 = 0x0102;
pub(crate) const RES_XML_RESOURCE_MAP_TYPE: u16 = 0x0180;
pub(crate) const RES_TABLE_PACKAGE_TYPE: u16 = 0x0200;
pub(crate) const RES_TABLE_TYPE_TYPE: u16 = 0x0201;

pub(crate) const TYPE_REFERENCE: u8 = 0x01;
pub(crate) const TYPE_STRING: u8 = 0x03;

pub(crate) const NO_INDEX: u32 = 0xFFFF_FFFF;

pub(crate) fn u16_at(data: &[u8], offset: usize) -> Result<u16, ResourceError> {
    data.get(offset..offset + 2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .ok_or_else(|| ResourceError::malformed(offset, "truncated u16"))
}

pub(crate) fn u32_at(data: &[u8], offset: usize) -> Result<u32, ResourceError> {
    data.get(offset..offset + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| ResourceError::malformed(offset, "truncated u32"))
}

/// One `ResChunk_header`-framed chunk. `offset` is relative to the buffer
/// the chunk was read from and only used for error messages.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Chunk<'a> {
    pub kind: u16,
    pub header_size: usize,
    /// The whole chunk including its header.
    pub data: &'a [u8],
    pub offset: usize,
}

impl<'a> Chunk<'a> {
    pub fn read(buf: &'a [u8], offset: usize) -> Result<Self, ResourceError> {
        let kind = u16_at(buf, offset)?;
        let header_size = u16_at(buf, offset + 2)? as usize;
        let size = u32_at(buf, offset + 4)? as usize;
        if header_size < 8 || size < header_size {
            return Err(ResourceError::malformed(
                offset,
                format!("bad header size {header_size} / chunk size {size}"),
            ));
        }
        let end = offset
            .checked_add(size)
            .filter(|end| *end <= buf.len())
            .ok_or_else(|| ResourceError::malformed(offset, "chunk overruns buffer"))?;
        Ok(Chunk {
            kind,
            header_size,
            data: &buf[offset..end],
            offset,
        })
    }

    pub fn body(&self) -> &'a [u8] {
        &self.data[self.header_size..]
    }

    /// Iterates child chunks laid out after `start` (relative to this chunk).
    pub fn children(&self, start: usize) -> ChunkIter<'a> {
        ChunkIter {
            buf: self.data,
            pos: start,
            base: self.offset,
        }
    }
}

pub(crate) struct ChunkIter<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> Iterator for ChunkIter<'a> {
    type Item = Result<Chunk<'a>, ResourceError>;

    fn next(&mut self) -> Option<Self::Item> {
        // trailing padding shorter than a header is tolerated
        if self.pos + 8 > self.buf.len() {
            return None;
        }
        match Chunk::read(self.buf, self.pos) {
            Ok(mut chunk) => {
                self.pos += chunk.data.len();
                chunk.offset += self.base;
                Some(Ok(chunk))
            }
            Err(e) => {
                self.pos = self.buf.len();
                Some(Err(e))
            }
        }
    }
}

/// A decoded `ResStringPool`. Strings are decoded eagerly; pools in
/// manifests and label tables are small.
#[derive(Debug, Clone, Default)]
pub(crate) struct StringPool {
    strings: Vec<String>,
}

const UTF8_FLAG: u32 = 0x100;

impl StringPool {
    pub fn parse(chunk: &Chunk<'_>) -> Result<Self, ResourceError> {
        let data = chunk.data;
        let count = u32_at(data, 8)? as usize;
        let flags = u32_at(data, 16)?;
        let strings_start = u32_at(data, 20)? as usize;
        let utf8 = flags & UTF8_FLAG != 0;
        if count > data.len() / 4 {
            return Err(ResourceError::malformed(
                chunk.offset,
                "string count exceeds pool size",
            ));
        }
        let mut strings = Vec::with_capacity(count);
        for i in 0..count {
            let rel = u32_at(data, chunk.header_size + 4 * i)? as usize;
            let at = strings_start
                .checked_add(rel)
                .filter(|p| *p < data.len())
                .ok_or_else(|| {
                    ResourceError::malformed(chunk.offset, "string offset out of range")
                })?;
            let s = if utf8 {
                decode_utf8(data, at)
            } else {
                decode_utf16(data, at)
            }
            .map_err(|reason| ResourceError::malformed(chunk.offset + at, reason))?;
            strings.push(s);
        }
        Ok(StringPool { strings })
    }

    pub fn get(&self, index: u32) -> Result<&str, ResourceError> {
        self.strings
            .get(index as usize)
            .map(String::as_str)
            .ok_or(ResourceError::StringIndex {
                index,
                len: self.strings.len(),
            })
    }
}

fn decode_utf8(data: &[u8], at: usize) -> Result<String, &'static str> {
    let byte = |p: usize| data.get(p).copied().ok_or("truncated string length");
    // utf-16 length first (ignored), then utf-8 byte length; each 1 or 2 bytes
    let mut p = at;
    p += if byte(p)? & 0x80 != 0 { 2 } else { 1 };
    let first = byte(p)? as usize;
    let len = if first & 0x80 != 0 {
        let len = ((first & 0x7F) << 8) | byte(p + 1)? as usize;
        p += 2;
        len
    } else {
        p += 1;
        first
    };
    let raw = data.get(p..p + len).ok_or("truncated utf-8 string")?;
    Ok(String::from_utf8_lossy(raw).into_owned())
}

fn decode_utf16(data: &[u8], at: usize) -> Result<String, &'static str> {
    let unit = |p: usize| -> Result<u16, &'static str> {
        data.get(p..p + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .ok_or("truncated utf-16 string")
    };
    let first = unit(at)? as usize;
    let (len, mut p) = if first & 0x8000 != 0 {
        (((first & 0x7FFF) << 16) | unit(at + 2)? as usize, at + 4)
    } else {
        (first, at + 2)
    };
    if len > data.len() / 2 {
        return Err("utf-16 length exceeds pool");
    }
    let mut units = Vec::with_capacity(len);
    for _ in 0..len {
        units.push(unit(p)?);
        p += 2;
    }
    Ok(String::from_utf16_lossy(&units))
}

/// A `Res_value` as it appears in attributes and table entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ResValue {
    pub data_type: u8,
    pub data: u32,
}

impl ResValue {
    pub fn read(data: &[u8], offset: usize) -> Result<Self, ResourceError> {
        let data_type = *data
            .get(offset + 3)
            .ok_or_else(|| ResourceError::malformed(offset, "truncated Res_value"))?;
        Ok(ResValue {
            data_type,
            data: u32_at(data, offset + 4)?,
        })
    }
}
