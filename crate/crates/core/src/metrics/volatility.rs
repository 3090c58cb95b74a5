//! Signal changes between the two ends of each longitudinal pair.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{longitudinal_pairs, Dataset, LongitudinalPair, MarketEntry, PairCoverage};
use crate::signal::SignalKind;
use crate::stats::Ratio;

use super::REPORT_FORMAT_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueChange {
    /// Same value at both ends, or absent at both ends.
    Unchanged,
    Changed,
    Appeared,
    Disappeared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertChange {
    Unchanged,
    /// The last set strictly contains the first.
    Added,
    /// Both non-empty and disjoint.
    FullyReplaced,
    /// The last set is strictly contained in the first.
    RemovedOnly,
    BothEmpty,
    /// Some certificates kept, some dropped, some new.
    Mixed,
}

pub fn classify_value(first: Option<&str>, last: Option<&str>) -> ValueChange {
    match (first, last) {
        (None, None) => ValueChange::Unchanged,
        (None, Some(_)) => ValueChange::Appeared,
        (Some(_), None) => ValueChange::Disappeared,
        (Some(a), Some(b)) if a == b => ValueChange::Unchanged,
        (Some(_), Some(_)) => ValueChange::Changed,
    }
}

pub fn classify_signal(first: &MarketEntry, last: &MarketEntry, kind: SignalKind) -> ValueChange {
    classify_value(first.value(kind), last.value(kind))
}

pub fn classify_certificates(first: &BTreeSet<&str>, last: &BTreeSet<&str>) -> CertChange {
    match (first.is_empty(), last.is_empty()) {
        (true, true) => CertChange::BothEmpty,
        _ if first == last => CertChange::Unchanged,
        _ if last.is_superset(first) => CertChange::Added,
        _ if last.is_subset(first) => CertChange::RemovedOnly,
        _ if first.is_disjoint(last) => CertChange::FullyReplaced,
        _ => CertChange::Mixed,
    }
}

/// Whether `kind` ends where it started but took another value in between.
pub fn is_reverted(pair: &LongitudinalPair<'_>, kind: SignalKind) -> bool {
    let start = pair.first.value(kind);
    start == pair.last.value(kind) && pair.intermediate.iter().any(|e| e.value(kind) != start)
}

fn certs_reverted(pair: &LongitudinalPair<'_>) -> bool {
    let start = pair.first.fingerprints();
    start == pair.last.fingerprints() && pair.intermediate.iter().any(|e| e.fingerprints() != start)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolatilityOptions {
    /// Count pairs whose value left and came back through intermediate
    /// entries. They stay in `unchanged` either way.
    pub scan_intermediate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindVolatility {
    /// Headline rate: value-to-value changes over all pairs.
    pub changed: Ratio,
    pub unchanged: u64,
    pub appeared: u64,
    pub disappeared: u64,
    /// Present only when intermediate entries were scanned.
    pub reverted: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertVolatility {
    pub added: Ratio,
    pub fully_replaced: Ratio,
    pub unchanged: u64,
    pub removed_only: u64,
    pub both_empty: u64,
    pub mixed: u64,
    pub reverted: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketVolatility {
    pub pairs: u64,
    /// Pairs over keys seen in either crawl.
    pub pair_coverage: Ratio,
    pub signals: BTreeMap<SignalKind, KindVolatility>,
    pub certificates: CertVolatility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityReport {
    pub format_version: u32,
    pub options: VolatilityOptions,
    pub markets: BTreeMap<String, MarketVolatility>,
}

/// Kinds tracked over time.
pub const VOLATILITY_KINDS: [SignalKind; 7] = [
    SignalKind::AppNameMarket,
    SignalKind::AppNameManifest,
    SignalKind::DeveloperName,
    SignalKind::DeveloperWebsite,
    SignalKind::DeveloperEmail,
    SignalKind::DeveloperAddress,
    SignalKind::PrivacyPolicyUrl,
];

fn market_volatility(
    pairs: &[&LongitudinalPair<'_>],
    coverage: PairCoverage,
    options: VolatilityOptions,
) -> MarketVolatility {
    let n = pairs.len();
    let scan = options.scan_intermediate;
    let signals = VOLATILITY_KINDS
        .into_iter()
        .map(|kind| {
            let mut counts: BTreeMap<ValueChange, u64> = BTreeMap::new();
            let mut reverted = 0;
            for p in pairs {
                *counts
                    .entry(classify_signal(p.first, p.last, kind))
                    .or_default() += 1;
                if scan && is_reverted(p, kind) {
                    reverted += 1;
                }
            }
            let get = |c| counts.get(&c).copied().unwrap_or(0);
            let row = KindVolatility {
                changed: Ratio::new(get(ValueChange::Changed), n as u64),
                unchanged: get(ValueChange::Unchanged),
                appeared: get(ValueChange::Appeared),
                disappeared: get(ValueChange::Disappeared),
                reverted: scan.then_some(reverted),
            };
            (kind, row)
        })
        .collect();

    let mut counts: BTreeMap<CertChange, u64> = BTreeMap::new();
    let mut reverted = 0;
    for p in pairs {
        let c = classify_certificates(&p.first.fingerprints(), &p.last.fingerprints());
        *counts.entry(c).or_default() += 1;
        if scan && certs_reverted(p) {
            reverted += 1;
        }
    }
    let get = |c| counts.get(&c).copied().unwrap_or(0);
    MarketVolatility {
        pairs: n as u64,
        pair_coverage: Ratio::from_usize(coverage.pairs, coverage.keys()),
        signals,
        certificates: CertVolatility {
            added: Ratio::new(get(CertChange::Added), n as u64),
            fully_replaced: Ratio::new(get(CertChange::FullyReplaced), n as u64),
            unchanged: get(CertChange::Unchanged),
            removed_only: get(CertChange::RemovedOnly),
            both_empty: get(CertChange::BothEmpty),
            mixed: get(CertChange::Mixed),
            reverted: scan.then_some(reverted),
        },
    }
}

/// Volatility over pre-selected pairs. `coverage` supplies the per-market
/// key counts; markets absent from it report coverage over the pairs alone.
pub fn volatility_of_pairs(
    pairs: &[LongitudinalPair<'_>],
    coverage: &BTreeMap<String, PairCoverage>,
    options: VolatilityOptions,
) -> VolatilityReport {
    let mut by_market: BTreeMap<&str, Vec<&LongitudinalPair<'_>>> = BTreeMap::new();
    for p in pairs {
        by_market
            .entry(p.first.market.as_str())
            .or_default()
            .push(p);
    }
    for m in coverage.keys() {
        by_market.entry(m.as_str()).or_default();
    }
    let markets = by_market
        .into_iter()
        .map(|(m, ps)| {
            let cov = coverage.get(m).copied().unwrap_or(PairCoverage {
                pairs: ps.len(),
                ..Default::default()
            });
            (m.to_string(), market_volatility(&ps, cov, options))
        })
        .collect();
    VolatilityReport {
        format_version: REPORT_FORMAT_VERSION,
        options,
        markets,
    }
}

pub fn volatility(dataset: &Dataset, options: VolatilityOptions) -> VolatilityReport {
    let selection = longitudinal_pairs(dataset.entries());
    volatility_of_pairs(&selection.pairs, &selection.coverage, options)
}

impl VolatilityReport {
    /// `market,row,class,count,pairs,percent`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["market", "row", "class", "count", "pairs", "percent"])?;
        for (market, m) in &self.markets {
            let pct = |c: u64| {
                if m.pairs == 0 {
                    String::new()
                } else {
                    (c as f64 * 100.0 / m.pairs as f64).to_string()
                }
            };
            for (kind, k) in &m.signals {
                let mut classes = vec![
                    ("changed", k.changed.numerator),
                    ("unchanged", k.unchanged),
                    ("appeared", k.appeared),
                    ("disappeared", k.disappeared),
                ];
                if let Some(r) = k.reverted {
                    classes.push(("reverted", r));
                }
                for (class, count) in classes {
                    w.write_record([
                        market,
                        kind.as_str(),
                        class,
                        &count.to_string(),
                        &m.pairs.to_string(),
                        &pct(count),
                    ])?;
                }
            }
            let c = &m.certificates;
            let mut classes = vec![
                ("added", c.added.numerator),
                ("fully_replaced", c.fully_replaced.numerator),
                ("unchanged", c.unchanged),
                ("removed_only", c.removed_only),
                ("both_empty", c.both_empty),
                ("mixed", c.mixed),
            ];
            if let Some(r) = c.reverted {
                classes.push(("reverted", r));
            }
            for (class, count) in classes {
                w.write_record([
                    market,
                    "certificate",
                    class,
                    &count.to_string(),
                    &m.pairs.to_string(),
                    &pct(count),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
