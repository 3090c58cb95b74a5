//! Market-entry records: loading, the dataset container, latest-entry and
//! longitudinal pair selection, and joining APK extraction results.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read, Write};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::apk::{ApkSignals, CertificateInfo};
use crate::error::IngestError;
use crate::signal::{canonical_fingerprint, normalize_signal, Signal, SignalKind};

pub const DATASET_FORMAT_VERSION: u32 = 1;

pub const GOOGLE_PLAY: &str = "google-play";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryFlag {
    /// No extraction result matched the entry's `apk_sha256`.
    ApkMissing,
    /// The APK declares a different package name than the listing.
    PackageConflict,
    /// `fetched_at` had no time of day and was read as midnight UTC.
    DateOnlyTimestamp,
}

/// One listing of one package on one market at one crawl time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketEntry {
    pub market: String,
    pub package_name: String,
    pub crawl_id: u8,
    pub fetched_at: DateTime<Utc>,
    pub apk_sha256: Option<String>,
    pub signals: BTreeMap<SignalKind, Signal>,
    #[serde(default)]
    pub certificates: Vec<CertificateInfo>,
    #[serde(default)]
    pub flags: BTreeSet<EntryFlag>,
}

pub type EntryKey = (String, String);

impl MarketEntry {
    pub fn key(&self) -> EntryKey {
        (self.market.clone(), self.package_name.clone())
    }

    pub fn signal(&self, kind: SignalKind) -> Option<&Signal> {
        self.signals.get(&kind)
    }

    /// Canonical value of `kind`. Certificates are not stored here; see
    /// [`MarketEntry::fingerprints`].
    pub fn value(&self, kind: SignalKind) -> Option<&str> {
        self.signals.get(&kind).map(|s| s.canonical_value.as_str())
    }

    pub fn fingerprints(&self) -> BTreeSet<&str> {
        self.certificates
            .iter()
            .map(|c| c.fingerprint_sha256.as_str())
            .collect()
    }

    fn sort_key(&self) -> (&str, &str, DateTime<Utc>) {
        (&self.market, &self.package_name, self.fetched_at)
    }
}

/// What a market publishes. Kinds it never exposes are `not_collected`;
/// `partial` kinds were only collected for part of the crawl.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketProfile {
    #[serde(default)]
    pub not_collected: BTreeSet<SignalKind>,
    #[serde(default)]
    pub partial: BTreeSet<SignalKind>,
}

/// Known markets and their signal availability masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MarketRegistry {
    markets: BTreeMap<String, MarketProfile>,
}

impl Default for MarketRegistry {
    fn default() -> Self {
        use SignalKind::*;
        let contact_only_name: BTreeSet<SignalKind> = [
            DeveloperWebsite,
            DeveloperEmail,
            DeveloperAddress,
            PrivacyPolicyUrl,
        ]
        .into();
        let mut markets = BTreeMap::new();
        markets.insert(
            GOOGLE_PLAY.to_string(),
            MarketProfile {
                not_collected: BTreeSet::new(),
                partial: [DeveloperName, DeveloperEmail, DeveloperAddress].into(),
            },
        );
        for m in ["apkmonk", "tencent", "apkmirror"] {
            markets.insert(
                m.to_string(),
                MarketProfile {
                    not_collected: contact_only_name.clone(),
                    partial: BTreeSet::new(),
                },
            );
        }
        let mut baidu = contact_only_name;
        baidu.insert(DeveloperName);
        markets.insert(
            "baidu".to_string(),
            MarketProfile {
                not_collected: baidu,
                partial: BTreeSet::new(),
            },
        );
        MarketRegistry { markets }
    }
}

fn valid_market_id(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit())
        && chars
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '-' | '_' | '.'))
}

impl MarketRegistry {
    pub fn new(markets: BTreeMap<String, MarketProfile>) -> Result<Self, IngestError> {
        if let Some(bad) = markets.keys().find(|m| !valid_market_id(m)) {
            return Err(IngestError::Registry(format!(
                "invalid market identifier `{bad}`"
            )));
        }
        Ok(MarketRegistry { markets })
    }

    /// Reads a registry file: an object mapping market id to profile. The
    /// file replaces the built-in table rather than extending it.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, IngestError> {
        let markets: BTreeMap<String, MarketProfile> =
            serde_json::from_reader(reader).map_err(|e| IngestError::Registry(e.to_string()))?;
        MarketRegistry::new(markets)
    }

    pub fn contains(&self, market: &str) -> bool {
        self.markets.contains_key(market)
    }

    pub fn markets(&self) -> impl Iterator<Item = &str> {
        self.markets.keys().map(String::as_str)
    }

    pub fn profile(&self, market: &str) -> Option<&MarketProfile> {
        self.markets.get(market)
    }

    /// Unknown markets are treated as collecting everything.
    pub fn is_collected(&self, market: &str, kind: SignalKind) -> bool {
        self.profile(market)
            .is_none_or(|p| !p.not_collected.contains(&kind))
    }

    pub fn is_partial(&self, market: &str, kind: SignalKind) -> bool {
        self.profile(market)
            .is_some_and(|p| p.partial.contains(&kind))
    }
}

/// The loaded, immutable set of market entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub format_version: u32,
    pub markets: BTreeSet<String>,
    pub registry: MarketRegistry,
    entries: Vec<MarketEntry>,
}

impl Dataset {
    /// Builds a dataset, sorting entries by (market, package, fetched_at).
    /// Fails on a duplicate triple.
    pub fn new(
        mut entries: Vec<MarketEntry>,
        registry: MarketRegistry,
    ) -> Result<Self, IngestError> {
        entries.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].sort_key() == w[1].sort_key())
        {
            return Err(IngestError::Duplicate(duplicate_message(&w[1])));
        }
        let markets = entries.iter().map(|e| e.market.clone()).collect();
        Ok(Dataset {
            format_version: DATASET_FORMAT_VERSION,
            markets,
            registry,
            entries,
        })
    }

    pub fn entries(&self) -> &[MarketEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<MarketEntry> {
        self.entries
    }

    pub fn market_entries<'a>(
        &'a self,
        market: &'a str,
    ) -> impl Iterator<Item = &'a MarketEntry> + 'a {
        self.entries.iter().filter(move |e| e.market == market)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, IngestError> {
        let value: serde_json::Value = serde_json::from_reader(reader)?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .unwrap_or(0) as u32;
        if found != DATASET_FORMAT_VERSION {
            return Err(IngestError::FormatVersion {
                found,
                supported: DATASET_FORMAT_VERSION,
            });
        }
        let raw: Dataset = serde_json::from_value(value)?;
        // re-sort and re-check rather than trusting the file
        Dataset::new(raw.entries, raw.registry)
    }
}

fn duplicate_message(entry: &MarketEntry) -> String {
    format!(
        "duplicate entry (market={}, package_name={}, fetched_at={})",
        entry.market,
        entry.package_name,
        entry
            .fetched_at
            .to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
    )
}

/// One input line, exactly as written.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    market: Option<String>,
    package_name: Option<String>,
    crawl_id: Option<u8>,
    fetched_at: Option<String>,
    apk_sha256: Option<String>,
    app_name: Option<String>,
    developer_name: Option<String>,
    developer_website: Option<String>,
    developer_email: Option<String>,
    developer_address: Option<String>,
    privacy_policy_url: Option<String>,
}

/// A record that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// 1-based line number in the input.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOutcome {
    pub dataset: Dataset,
    pub errors: Vec<RecordError>,
}

/// Parses a UTC ISO-8601 timestamp. A bare date is accepted as midnight UTC
/// and reported through the returned flag.
pub fn parse_timestamp(s: &str) -> Result<(DateTime<Utc>, bool), String> {
    let s = s.trim();
    if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight exists");
        return Ok((midnight.and_utc(), true));
    }
    let parsed =
        DateTime::parse_from_rfc3339(s).map_err(|e| format!("bad timestamp `{s}`: {e}"))?;
    if parsed.offset().local_minus_utc() != 0 {
        return Err(format!("timestamp `{s}` is not in UTC"));
    }
    Ok((parsed.with_timezone(&Utc), false))
}

fn required(field: Option<String>, name: &str) -> Result<String, String> {
    field
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .ok_or_else(|| format!("missing required field `{name}`"))
}

fn entry_from_record(raw: RawRecord, registry: &MarketRegistry) -> Result<MarketEntry, String> {
    let market = required(raw.market, "market")?;
    if !registry.contains(&market) {
        return Err(format!("unknown market `{market}`"));
    }
    let package_name = required(raw.package_name, "package_name")?;
    let crawl_id = raw.crawl_id.ok_or("missing required field `crawl_id`")?;
    if !matches!(crawl_id, 1 | 2) {
        return Err(format!("crawl_id must be 1 or 2, got {crawl_id}"));
    }
    let (fetched_at, date_only) = parse_timestamp(&required(raw.fetched_at, "fetched_at")?)?;
    let apk_sha256 = match raw
        .apk_sha256
        .as_deref()
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        Some(h) => Some(
            canonical_fingerprint(h)
                .map_err(|_| format!("apk_sha256 `{h}` is not a SHA-256 digest"))?,
        ),
        None => None,
    };

    let mut signals = BTreeMap::new();
    let fields = [
        (SignalKind::PackageName, Some(package_name.clone())),
        (SignalKind::AppNameMarket, raw.app_name),
        (SignalKind::DeveloperName, raw.developer_name),
        (SignalKind::DeveloperWebsite, raw.developer_website),
        (SignalKind::DeveloperEmail, raw.developer_email),
        (SignalKind::DeveloperAddress, raw.developer_address),
        (SignalKind::PrivacyPolicyUrl, raw.privacy_policy_url),
    ];
    for (kind, value) in fields {
        let Some(value) = value else { continue };
        if let Some(signal) = normalize_signal(kind, &value).map_err(|e| e.to_string())? {
            signals.insert(kind, signal);
        }
    }
    let mut flags = BTreeSet::new();
    if date_only {
        flags.insert(EntryFlag::DateOnlyTimestamp);
    }
    Ok(MarketEntry {
        market,
        package_name,
        crawl_id,
        fetched_at,
        apk_sha256,
        signals,
        certificates: Vec::new(),
        flags,
    })
}

/// Loads newline-delimited JSON market records. Bad records are collected
/// into `errors`; the rest form the dataset. Blank lines are skipped.
pub fn load_dataset<R: BufRead>(
    reader: R,
    registry: &MarketRegistry,
) -> Result<LoadOutcome, IngestError> {
    let mut entries: Vec<MarketEntry> = Vec::new();
    let mut seen: BTreeSet<(String, String, DateTime<Utc>)> = BTreeSet::new();
    let mut errors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|raw| entry_from_record(raw, registry));
        match parsed {
            Ok(entry) => {
                let triple = (
                    entry.market.clone(),
                    entry.package_name.clone(),
                    entry.fetched_at,
                );
                if seen.insert(triple) {
                    entries.push(entry);
                } else {
                    errors.push(RecordError {
                        line: line_no,
                        message: duplicate_message(&entry),
                    });
                }
            }
            Err(message) => errors.push(RecordError {
                line: line_no,
                message,
            }),
        }
    }
    let dataset = Dataset::new(entries, registry.clone())?;
    Ok(LoadOutcome { dataset, errors })
}

/// Reads extraction output, one `ApkSignals` JSON object per line.
pub fn read_apk_signals<R: BufRead>(reader: R) -> Result<Vec<ApkSignals>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IngestError::Line {
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Attaches certificates and the manifest label from extraction results,
/// matched on `apk_sha256`.
pub fn join_apk_signals(dataset: Dataset, results: &[ApkSignals]) -> Dataset {
    let by_hash: BTreeMap<&str, &ApkSignals> =
        results.iter().map(|r| (r.apk_sha256.as_str(), r)).collect();
    let registry = dataset.registry.clone();
    let entries = dataset
        .into_entries()
        .into_iter()
        .map(|mut entry| {
            entry.flags.remove(&EntryFlag::ApkMissing);
            entry.flags.remove(&EntryFlag::PackageConflict);
            let found = entry.apk_sha256.as_deref().and_then(|h| by_hash.get(h));
            match found {
                None => {
                    entry.flags.insert(EntryFlag::ApkMissing);
                }
                Some(apk) => {
                    entry.certificates = apk.certificates.clone();
                    entry.signals.remove(&SignalKind::AppNameManifest);
                    if let Some(label) = apk.app_name_manifest.as_deref() {
                        if let Ok(Some(s)) = normalize_signal(SignalKind::AppNameManifest, label) {
                            entry.signals.insert(SignalKind::AppNameManifest, s);
                        }
                    }
                    if apk.package_name != entry.package_name {
                        entry.flags.insert(EntryFlag::PackageConflict);
                    }
                }
            }
            entry
        })
        .collect();
    Dataset::new(entries, registry).expect("keys unchanged by join")
}

/// Result of picking the most recent entry per (market, package).
#[derive(Debug, Clone)]
pub struct LatestEntries<'a> {
    pub entries: BTreeMap<EntryKey, &'a MarketEntry>,
    /// Keys whose latest timestamp was shared by more than one entry.
    pub ties: BTreeSet<EntryKey>,
}

impl<'a> LatestEntries<'a> {
    pub fn values(&self) -> Vec<&'a MarketEntry> {
        self.entries.values().copied().collect()
    }

    pub fn in_market(&self, market: &str) -> Vec<&'a MarketEntry> {
        self.entries
            .iter()
            .filter(|((m, _), _)| m == market)
            .map(|(_, e)| *e)
            .collect()
    }
}

/// Keeps the entry with the largest `fetched_at` per key. Equal timestamps
/// prefer the larger `apk_sha256`, then the earlier position in `entries`,
/// and mark the key as tied.
pub fn latest_entries(entries: &[MarketEntry]) -> LatestEntries<'_> {
    let mut best: BTreeMap<EntryKey, &MarketEntry> = BTreeMap::new();
    let mut ties = BTreeSet::new();
    for entry in entries {
        let key = entry.key();
        match best.get(&key) {
            None => {
                best.insert(key, entry);
            }
            Some(current) => {
                if entry.fetched_at > current.fetched_at {
                    ties.remove(&key);
                    best.insert(key, entry);
                } else if entry.fetched_at == current.fetched_at {
                    ties.insert(key.clone());
                    if entry.apk_sha256 > current.apk_sha256 {
                        best.insert(key, entry);
                    }
                }
            }
        }
    }
    LatestEntries {
        entries: best,
        ties,
    }
}

/// The earliest first-crawl entry and the latest second-crawl entry of one
/// (market, package), plus every entry strictly between them in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongitudinalPair<'a> {
    pub first: &'a MarketEntry,
    pub last: &'a MarketEntry,
    pub intermediate: Vec<&'a MarketEntry>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCoverage {
    pub pairs: usize,
    /// Keys seen only in the first crawl.
    pub only_first: usize,
    /// Keys seen only in the second crawl.
    pub only_second: usize,
}

impl PairCoverage {
    pub fn keys(&self) -> usize {
        self.pairs + self.only_first + self.only_second
    }
}

#[derive(Debug, Clone)]
pub struct LongitudinalSelection<'a> {
    pub pairs: Vec<LongitudinalPair<'a>>,
    pub coverage: BTreeMap<String, PairCoverage>,
}

fn ordering_key(e: &MarketEntry) -> (DateTime<Utc>, Option<&str>) {
    (e.fetched_at, e.apk_sha256.as_deref())
}

/// Selects one pair per (market, package) present in both crawls. Pairs are
/// ordered by key.
pub fn longitudinal_pairs(entries: &[MarketEntry]) -> LongitudinalSelection<'_> {
    let mut groups: BTreeMap<EntryKey, Vec<&MarketEntry>> = BTreeMap::new();
    for e in entries {
        groups.entry(e.key()).or_default().push(e);
    }
    let mut pairs = Vec::new();
    let mut coverage: BTreeMap<String, PairCoverage> = BTreeMap::new();
    for ((market, _), mut group) in groups {
        // stable sort keeps input order for full ties
        group.sort_by(|a, b| ordering_key(a).cmp(&ordering_key(b)));
        let first = group.iter().find(|e| e.crawl_id == 1).copied();
        let last = group.iter().rev().find(|e| e.crawl_id == 2).copied();
        let cov = coverage.entry(market).or_default();
        match (first, last) {
            (Some(first), Some(last)) => {
                cov.pairs += 1;
                let intermediate = group
                    .iter()
                    .filter(|e| {
                        !std::ptr::eq(**e, first)
                            && !std::ptr::eq(**e, last)
                            && e.fetched_at >= first.fetched_at
                            && e.fetched_at <= last.fetched_at
                    })
                    .copied()
                    .collect();
                pairs.push(LongitudinalPair {
                    first,
                    last,
                    intermediate,
                });
            }
            (Some(_), None) => cov.only_first += 1,
            (None, Some(_)) => cov.only_second += 1,
            (None, None) => unreachable!("every entry has crawl 1 or 2"),
        }
    }
    LongitudinalSelection { pairs, coverage }
}
