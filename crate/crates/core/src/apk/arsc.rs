//! Minimal `resources.arsc` reader: enough to resolve string references in
//! the default (unqualified) configuration.

use std::collections::BTreeMap;

use crate::apk::res::{
    u16_at, u32_at, Chunk, ResValue, StringPool, RES_STRING_POOL_TYPE, RES_TABLE_PACKAGE_TYPE,
    RES_TABLE_TYPE, RES_TABLE_TYPE_TYPE, TYPE_REFERENCE, TYPE_STRING,
};
use crate::error::ResourceError;

const FLAG_SPARSE: u8 = 0x01;
const FLAG_OFFSET16: u8 = 0x02;
const ENTRY_FLAG_COMPLEX: u16 = 0x0001;
const ENTRY_FLAG_COMPACT: u16 = 0x0008;
const MAX_REFERENCE_DEPTH: usize = 8;

/// Default-configuration values keyed by resource id.
#[derive(Debug, Clone, Default)]
pub struct ResourceTable {
    strings: StringPool,
    values: BTreeMap<u32, ResValue>,
}

impl ResourceTable {
    pub fn parse(bytes: &[u8]) -> Result<Self, ResourceError> {
        let root = Chunk::read(bytes, 0)?;
        if root.kind != RES_TABLE_TYPE {
            return Err(ResourceError::malformed(
                0,
                format!(
                    "expected resource table chunk, found type {:#06x}",
                    root.kind
                ),
            ));
        }
        let mut table = ResourceTable::default();
        let mut have_pool = false;
        for chunk in root.children(root.header_size) {
            let chunk = chunk?;
            match chunk.kind {
                RES_STRING_POOL_TYPE if !have_pool => {
                    table.strings = StringPool::parse(&chunk)?;
                    have_pool = true;
                }
                RES_TABLE_PACKAGE_TYPE => table.read_package(&chunk)?,
                _ => {}
            }
        }
        Ok(table)
    }

    fn read_package(&mut self, package: &Chunk<'_>) -> Result<(), ResourceError> {
        let package_id = u32_at(package.data, 8)? & 0xFF;
        for chunk in package.children(package.header_size) {
            let chunk = chunk?;
            if chunk.kind == RES_TABLE_TYPE_TYPE {
                self.read_type(package_id, &chunk)?;
            }
        }
        Ok(())
    }

    fn read_type(&mut self, package_id: u32, chunk: &Chunk<'_>) -> Result<(), ResourceError> {
        let data = chunk.data;
        let type_id = *data
            .get(8)
            .ok_or_else(|| ResourceError::malformed(chunk.offset, "truncated type chunk"))?;
        let flags = data[9];
        let entry_count = u32_at(data, 12)? as usize;
        let entries_start = u32_at(data, 16)? as usize;
        let config_size = u32_at(data, 20)? as usize;
        let config = data
            .get(20..20 + config_size)
            .ok_or_else(|| ResourceError::malformed(chunk.offset, "truncated configuration"))?;
        if config.len() < 4 || config[4..].iter().any(|b| *b != 0) {
            return Ok(()); // qualified configuration
        }

        let index = chunk.header_size;
        let mut offsets = Vec::with_capacity(entry_count);
        if flags & FLAG_SPARSE != 0 {
            for i in 0..entry_count {
                let entry = u16_at(data, index + 4 * i)? as usize;
                let offset = u16_at(data, index + 4 * i + 2)? as usize * 4;
                offsets.push((entry, offset));
            }
        } else if flags & FLAG_OFFSET16 != 0 {
            for i in 0..entry_count {
                let raw = u16_at(data, index + 2 * i)?;
                if raw != 0xFFFF {
                    offsets.push((i, raw as usize * 4));
                }
            }
        } else {
            for i in 0..entry_count {
                let raw = u32_at(data, index + 4 * i)?;
                if raw != u32::MAX {
                    offsets.push((i, raw as usize));
                }
            }
        }

        for (entry, offset) in offsets {
            let at = entries_start + offset;
            let size = u16_at(data, at)? as usize;
            let entry_flags = u16_at(data, at + 2)?;
            let value = if entry_flags & ENTRY_FLAG_COMPACT != 0 {
                ResValue {
                    data_type: (entry_flags >> 8) as u8,
                    data: u32_at(data, at + 4)?,
                }
            } else if entry_flags & ENTRY_FLAG_COMPLEX != 0 {
                continue; // bags (styles, plurals) carry no plain label
            } else {
                ResValue::read(data, at + size)?
            };
            let id = (package_id << 24) | ((type_id as u32) << 16) | (entry as u32 & 0xFFFF);
            self.values.entry(id).or_insert(value);
        }
        Ok(())
    }

    /// Resolves `id` to a string, following reference chains.
    pub fn resolve_string(&self, id: u32) -> Option<String> {
        let mut id = id;
        for _ in 0..MAX_REFERENCE_DEPTH {
            let value = self.values.get(&id)?;
            match value.data_type {
                TYPE_STRING => return self.strings.get(value.data).ok().map(str::to_string),
                TYPE_REFERENCE => id = value.data,
                _ => return None,
            }
        }
        None
    }
}
