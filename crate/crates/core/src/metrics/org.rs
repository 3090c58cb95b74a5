//! Per-developer-name signal counts for a list of organizations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ingest::{latest_entries, Dataset, MarketEntry};
use crate::signal::{normalize_signal, SignalKind};

use super::REPORT_FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgRow {
    /// As given by the caller.
    pub developer_name: String,
    pub apps: u64,
    pub emails: u64,
    pub websites: u64,
    pub certificates: u64,
    /// Canonical developer names whose entries share a certificate with
    /// this one.
    pub other_developer_names: BTreeSet<String>,
    /// No latest entry in the market carries this name.
    pub unknown: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgReport {
    pub format_version: u32,
    pub market: String,
    pub rows: Vec<OrgRow>,
}

fn org_row(name: &str, entries: &[&MarketEntry]) -> OrgRow {
    let canonical = normalize_signal(SignalKind::DeveloperName, name)
        .ok()
        .flatten()
        .map(|s| s.canonical_value);
    let own: Vec<&&MarketEntry> = entries
        .iter()
        .filter(|e| {
            canonical.is_some() && e.value(SignalKind::DeveloperName) == canonical.as_deref()
        })
        .collect();
    let distinct = |kind| -> u64 {
        own.iter()
            .filter_map(|e| e.value(kind))
            .collect::<BTreeSet<_>>()
            .len() as u64
    };
    let fingerprints: BTreeSet<&str> = own.iter().flat_map(|e| e.fingerprints()).collect();
    let other_developer_names = entries
        .iter()
        .filter(|e| !e.fingerprints().is_disjoint(&fingerprints))
        .filter_map(|e| e.value(SignalKind::DeveloperName))
        .filter(|n| Some(*n) != canonical.as_deref())
        .map(str::to_string)
        .collect();
    OrgRow {
        developer_name: name.to_string(),
        apps: own
            .iter()
            .map(|e| e.package_name.as_str())
            .collect::<BTreeSet<_>>()
            .len() as u64,
        emails: distinct(SignalKind::DeveloperEmail),
        websites: distinct(SignalKind::DeveloperWebsite),
        certificates: fingerprints.len() as u64,
        other_developer_names,
        unknown: own.is_empty(),
    }
}

/// One row per name in `names`, over the latest entries of `market`.
pub fn org_report(dataset: &Dataset, market: &str, names: &[String]) -> OrgReport {
    let latest = latest_entries(dataset.entries());
    let entries = latest.in_market(market);
    OrgReport {
        format_version: REPORT_FORMAT_VERSION,
        market: market.to_string(),
        rows: names.iter().map(|n| org_row(n, &entries)).collect(),
    }
}

impl OrgReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "developer_name",
            "apps",
            "emails",
            "websites",
            "certificates",
            "other_developer_names",
            "unknown",
        ])?;
        for r in &self.rows {
            let others: Vec<&str> = r.other_developer_names.iter().map(String::as_str).collect();
            w.write_record([
                r.developer_name.clone(),
                r.apps.to_string(),
                r.emails.to_string(),
                r.websites.to_string(),
                r.certificates.to_string(),
                others.join("; "),
                r.unknown.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
