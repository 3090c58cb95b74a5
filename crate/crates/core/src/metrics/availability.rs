//! Share of latest entries with a missing signal, per market.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::apk::{CertificateInfo, RdnField};
use crate::ingest::{latest_entries, Dataset, MarketEntry};
use crate::signal::SignalKind;
use crate::stats::Ratio;

use super::REPORT_FORMAT_VERSION;

/// One table cell. `NotCollected` is distinct from a measured 0%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Measured {
        missing: u64,
        total: u64,
        percent: Option<f64>,
    },
    NotCollected,
}

impl Cell {
    fn measured(r: Ratio) -> Self {
        Cell::Measured {
            missing: r.numerator,
            total: r.denominator,
            percent: r.percent,
        }
    }

    pub fn ratio(&self) -> Option<Ratio> {
        match *self {
            Cell::Measured { missing, total, .. } => Some(Ratio::new(missing, total)),
            Cell::NotCollected => None,
        }
    }

    /// `---` for not-collected, otherwise the percentage with two decimals.
    pub fn render(&self) -> String {
        match self {
            Cell::NotCollected => "---".to_string(),
            Cell::Measured { percent: None, .. } => "n/a".to_string(),
            Cell::Measured {
                percent: Some(p), ..
            } => format!("{p:.2}%"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityOptions {
    /// Partially collected kinds only count entries fetched at or after
    /// this instant. Without it they count every entry.
    pub cutoff: Option<DateTime<Utc>>,
    /// RDN rows count an entry as missing when any of its certificates
    /// lacks the field, instead of looking at the first certificate only.
    pub all_signers: bool,
    /// Restrict to these markets; every market in the dataset when empty.
    pub markets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketAvailability {
    /// Unique (market, package) latest entries.
    pub entries: u64,
    /// Latest entries with at least one certificate.
    pub entries_with_certificates: u64,
    pub signals: BTreeMap<SignalKind, Cell>,
    pub certificate_rdns: BTreeMap<RdnField, Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityReport {
    pub format_version: u32,
    pub options: AvailabilityOptions,
    pub markets: BTreeMap<String, MarketAvailability>,
}

fn rdn_missing(certs: &[CertificateInfo], field: RdnField, all_signers: bool) -> bool {
    if all_signers {
        certs.iter().any(|c| c.subject.get(field).is_none())
    } else {
        // certificates are kept sorted by fingerprint
        let first = certs
            .iter()
            .min_by(|a, b| a.fingerprint_sha256.cmp(&b.fingerprint_sha256))
            .expect("caller checks non-empty");
        first.subject.get(field).is_none()
    }
}

fn market_availability(
    dataset: &Dataset,
    market: &str,
    entries: &[&MarketEntry],
    options: &AvailabilityOptions,
) -> MarketAvailability {
    let mut signals = BTreeMap::new();
    for kind in SignalKind::MARKET_METADATA {
        if !dataset.registry.is_collected(market, kind) {
            signals.insert(kind, Cell::NotCollected);
            continue;
        }
        let partial_cutoff = options
            .cutoff
            .filter(|_| dataset.registry.is_partial(market, kind));
        let counted: Vec<&&MarketEntry> = entries
            .iter()
            .filter(|e| partial_cutoff.is_none_or(|c| e.fetched_at >= c))
            .collect();
        let missing = counted.iter().filter(|e| e.value(kind).is_none()).count();
        signals.insert(
            kind,
            Cell::measured(Ratio::from_usize(missing, counted.len())),
        );
    }

    let signed: Vec<&&MarketEntry> = entries
        .iter()
        .filter(|e| !e.certificates.is_empty())
        .collect();
    let certificate_rdns = RdnField::ALL
        .into_iter()
        .map(|field| {
            let missing = signed
                .iter()
                .filter(|e| rdn_missing(&e.certificates, field, options.all_signers))
                .count();
            (
                field,
                Cell::measured(Ratio::from_usize(missing, signed.len())),
            )
        })
        .collect();

    MarketAvailability {
        entries: entries.len() as u64,
        entries_with_certificates: signed.len() as u64,
        signals,
        certificate_rdns,
    }
}

/// Missing-signal percentages over the latest entry of each (market,
/// package). Kinds a market does not publish are reported as not collected
/// and contribute to neither numerator nor denominator.
pub fn availability(dataset: &Dataset, options: &AvailabilityOptions) -> AvailabilityReport {
    let latest = latest_entries(dataset.entries());
    let markets: Vec<String> = if options.markets.is_empty() {
        dataset.markets.iter().cloned().collect()
    } else {
        options.markets.clone()
    };
    let markets = markets
        .into_iter()
        .map(|m| {
            let entries = latest.in_market(&m);
            let row = market_availability(dataset, &m, &entries, options);
            (m, row)
        })
        .collect();
    AvailabilityReport {
        format_version: REPORT_FORMAT_VERSION,
        options: options.clone(),
        markets,
    }
}

impl AvailabilityReport {
    /// Long-format table: `group,signal,market,status,missing,total,percent,cell`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "group", "signal", "market", "status", "missing", "total", "percent", "cell",
        ])?;
        let mut row = |group: &str, name: &str, market: &str, cell: &Cell| -> csv::Result<()> {
            let (status, missing, total, percent) = match cell {
                Cell::NotCollected => {
                    ("not_collected", String::new(), String::new(), String::new())
                }
                Cell::Measured {
                    missing,
                    total,
                    percent,
                } => (
                    "measured",
                    missing.to_string(),
                    total.to_string(),
                    percent.map(|p| p.to_string()).unwrap_or_default(),
                ),
            };
            w.write_record([
                group,
                name,
                market,
                status,
                &missing,
                &total,
                &percent,
                &cell.render(),
            ])
        };
        for (market, m) in &self.markets {
            for (kind, cell) in &m.signals {
                row("market", kind.as_str(), market, cell)?;
            }
            for (field, cell) in &m.certificate_rdns {
                row("certificate_rdn", field.as_str(), market, cell)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
