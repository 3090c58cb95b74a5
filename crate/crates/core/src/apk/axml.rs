//! Reads the package name and application label out of a compiled
//! `AndroidManifest.xml`.

use crate::apk::res::{
    u16_at, u32_at, Chunk, ResValue, StringPool, NO_INDEX, RES_STRING_POOL_TYPE,
    RES_XML_RESOURCE_MAP_TYPE, RES_XML_START_ELEMENT_TYPE, RES_XML_START_NAMESPACE_TYPE,
    RES_XML_TYPE, TYPE_REFERENCE, TYPE_STRING,
};
use crate::error::ResourceError;

const ANDROID_NS: &str = "http://schemas.android.com/apk/res/android";
const ATTR_LABEL: u32 = 0x0101_0001;

/// The `android:label` of `<application>` as written in the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ManifestLabel {
    Literal(String),
    /// A `@string/...` style reference, by resource id.
    Reference(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestInfo {
    pub package_name: String,
    pub label: Option<ManifestLabel>,
}

struct Attribute {
    ns: u32,
    name: u32,
    raw: u32,
    value: ResValue,
}

struct Element {
    name: u32,
    attributes: Vec<Attribute>,
}

fn read_element(chunk: &Chunk<'_>) -> Result<Element, ResourceError> {
    let data = chunk.data;
    let ext = chunk.header_size;
    let name = u32_at(data, ext + 4)?;
    let attr_start = u16_at(data, ext + 8)? as usize;
    let attr_size = u16_at(data, ext + 10)? as usize;
    let attr_count = u16_at(data, ext + 12)? as usize;
    if attr_size < 20 {
        return Err(ResourceError::malformed(
            chunk.offset,
            "attribute size below 20",
        ));
    }
    let mut attributes = Vec::with_capacity(attr_count);
    for i in 0..attr_count {
        let at = ext + attr_start + i * attr_size;
        attributes.push(Attribute {
            ns: u32_at(data, at)?,
            name: u32_at(data, at + 4)?,
            raw: u32_at(data, at + 8)?,
            value: ResValue::read(data, at + 12)?,
        });
    }
    Ok(Element { name, attributes })
}

/// Parses a compiled manifest far enough to recover the root `package`
/// attribute and the `<application android:label>` value.
pub fn parse_manifest(bytes: &[u8]) -> Result<ManifestInfo, ResourceError> {
    let root = Chunk::read(bytes, 0)?;
    if root.kind != RES_XML_TYPE {
        return Err(ResourceError::malformed(
            0,
            format!("expected XML chunk, found type {:#06x}", root.kind),
        ));
    }

    let mut pool: Option<StringPool> = None;
    let mut resource_ids: Vec<u32> = Vec::new();
    let mut package: Option<String> = None;
    let mut label: Option<ManifestLabel> = None;
    let mut seen_root = false;

    for chunk in root.children(root.header_size) {
        let chunk = chunk?;
        match chunk.kind {
            RES_STRING_POOL_TYPE if pool.is_none() => pool = Some(StringPool::parse(&chunk)?),
            RES_XML_RESOURCE_MAP_TYPE => {
                resource_ids = chunk
                    .body()
                    .chunks_exact(4)
                    .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect();
            }
            RES_XML_START_NAMESPACE_TYPE => {}
            RES_XML_START_ELEMENT_TYPE => {
                let pool = pool.as_ref().ok_or_else(|| {
                    ResourceError::malformed(chunk.offset, "element before string pool")
                })?;
                let element = read_element(&chunk)?;
                let name = pool.get(element.name)?;
                if !seen_root {
                    seen_root = true;
                    if name != "manifest" {
                        return Err(ResourceError::NotAManifest(name.to_string()));
                    }
                    package = find_package(pool, &element)?;
                } else if name == "application" {
                    label = find_label(pool, &resource_ids, &element)?;
                    break;
                }
            }
            _ => {}
        }
    }

    let package_name = package
        .filter(|p| !p.is_empty())
        .ok_or(ResourceError::MissingPackage)?;
    Ok(ManifestInfo {
        package_name,
        label,
    })
}

fn string_value(pool: &StringPool, attr: &Attribute) -> Result<Option<String>, ResourceError> {
    if attr.value.data_type == TYPE_STRING {
        return pool.get(attr.value.data).map(|s| Some(s.to_string()));
    }
    if attr.raw != NO_INDEX {
        return pool.get(attr.raw).map(|s| Some(s.to_string()));
    }
    Ok(None)
}

fn find_package(pool: &StringPool, element: &Element) -> Result<Option<String>, ResourceError> {
    for attr in &element.attributes {
        if attr.ns == NO_INDEX && pool.get(attr.name)? == "package" {
            return string_value(pool, attr);
        }
    }
    Ok(None)
}

fn is_label(
    pool: &StringPool,
    resource_ids: &[u32],
    attr: &Attribute,
) -> Result<bool, ResourceError> {
    // obfuscated manifests may blank attribute names; the resource map is authoritative
    if let Some(&id) = resource_ids.get(attr.name as usize) {
        return Ok(id == ATTR_LABEL);
    }
    Ok(attr.ns != NO_INDEX && pool.get(attr.ns)? == ANDROID_NS && pool.get(attr.name)? == "label")
}

fn find_label(
    pool: &StringPool,
    resource_ids: &[u32],
    element: &Element,
) -> Result<Option<ManifestLabel>, ResourceError> {
    for attr in &element.attributes {
        if !is_label(pool, resource_ids, attr)? {
            continue;
        }
        if attr.value.data_type == TYPE_REFERENCE {
            return Ok(Some(ManifestLabel::Reference(attr.value.data)));
        }
        return Ok(string_value(pool, attr)?.map(ManifestLabel::Literal));
    }
    Ok(None)
}
