//! Consistency of signals within one app, within one market and across
//! markets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::apk::is_play_signing_subject;
use crate::graph::{build_graph, default_kinds, signal_degree_stats, DegreeStats};
use crate::ingest::{latest_entries, Dataset, MarketEntry, GOOGLE_PLAY};
use crate::signal::{detect_script, levenshtein_distance, Script, SignalKind};
use crate::stats::{CcdfPoint, Ratio};

use super::REPORT_FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamePairRow {
    pub market: String,
    pub package_name: String,
    pub market_name: String,
    pub manifest_name: String,
    pub exact: bool,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinApp {
    /// Entries with both names, before script filtering.
    pub candidates: u64,
    /// Dropped because either name has non-Latin letters.
    pub excluded_non_latin: u64,
    pub compared: u64,
    pub exact_match: Ratio,
    pub below_half: Ratio,
    /// Ten bins of width 0.1; a similarity of 1.0 lands in the last.
    pub histogram: [u64; 10],
    pub rows: Vec<NamePairRow>,
}

/// Histogram bin of `1 - d/m`, computed without floating point.
pub fn similarity_bin(distance: usize, longest: usize) -> usize {
    if longest == 0 {
        return 9;
    }
    ((10 * (longest - distance)) / longest).min(9)
}

fn latin_enough(script: Script) -> bool {
    matches!(script, Script::Latin | Script::Empty)
}

fn within_app_market(market: &str, entries: &[&MarketEntry]) -> WithinApp {
    let mut histogram = [0u64; 10];
    let mut rows = Vec::new();
    let (mut candidates, mut excluded, mut exact, mut below) = (0u64, 0u64, 0u64, 0u64);
    for e in entries {
        let (Some(a), Some(b)) = (
            e.value(SignalKind::AppNameMarket),
            e.value(SignalKind::AppNameManifest),
        ) else {
            continue;
        };
        candidates += 1;
        if !latin_enough(detect_script(a)) || !latin_enough(detect_script(b)) {
            excluded += 1;
            continue;
        }
        let d = levenshtein_distance(a, b);
        let m = a.chars().count().max(b.chars().count());
        let similarity = if m == 0 {
            1.0
        } else {
            1.0 - d as f64 / m as f64
        };
        histogram[similarity_bin(d, m)] += 1;
        if 2 * (m - d) < m {
            below += 1;
        }
        let is_exact = a == b;
        if is_exact {
            exact += 1;
        }
        rows.push(NamePairRow {
            market: market.to_string(),
            package_name: e.package_name.clone(),
            market_name: a.to_string(),
            manifest_name: b.to_string(),
            exact: is_exact,
            similarity,
        });
    }
    let compared = candidates - excluded;
    WithinApp {
        candidates,
        excluded_non_latin: excluded,
        compared,
        exact_match: Ratio::new(exact, compared),
        below_half: Ratio::new(below, compared),
        histogram,
        rows,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub from_kind: SignalKind,
    pub to_kind: SignalKind,
    pub nodes: u64,
    pub max: u64,
    pub multi_valued: Ratio,
    pub entries_touched: Ratio,
    pub ccdf: Vec<CcdfPoint>,
}

impl From<&DegreeStats> for DegreeSummary {
    fn from(s: &DegreeStats) -> Self {
        DegreeSummary {
            from_kind: s.from_kind,
            to_kind: s.to_kind,
            nodes: s.rows.len() as u64,
            max: s.rows.iter().map(|r| r.count as u64).max().unwrap_or(0),
            multi_valued: s.multi_valued,
            entries_touched: s.entries_touched,
            ccdf: s.ccdf.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WithinMarket {
    pub entries: u64,
    /// Package names per signal value, one row per graph kind.
    pub package_names_per_signal: Vec<DegreeSummary>,
    pub developer_names_per_certificate: DegreeSummary,
    pub certificates_per_developer_name: DegreeSummary,
}

fn within_market(entries: &[&MarketEntry]) -> WithinMarket {
    let graph = build_graph(entries.iter().copied(), &default_kinds(), None)
        .expect("default kinds are graph kinds");
    let stats = |from, to| -> DegreeSummary {
        (&signal_degree_stats(&graph, from, to).expect("default kinds present")).into()
    };
    let package_names_per_signal = default_kinds()
        .into_iter()
        .filter(|k| *k != SignalKind::PackageName)
        .map(|k| stats(k, SignalKind::PackageName))
        .collect();
    WithinMarket {
        entries: entries.len() as u64,
        package_names_per_signal,
        developer_names_per_certificate: stats(
            SignalKind::CertFingerprint,
            SignalKind::DeveloperName,
        ),
        certificates_per_developer_name: stats(
            SignalKind::DeveloperName,
            SignalKind::CertFingerprint,
        ),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossMarketOptions {
    /// Same certificate means equal fingerprint sets instead of any shared
    /// fingerprint.
    pub cert_equality: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPairRow {
    pub market_a: String,
    pub market_b: String,
    /// Package names with a latest entry on both markets.
    pub shared_packages: u64,
    /// Over shared packages where both sides have certificates.
    pub same_cert: Ratio,
    /// Over shared packages where both names exist in the same script.
    pub same_app_name: Ratio,
    pub same_developer_name: Ratio,
    /// Entries of the other market, shared with Google Play, signed with a
    /// Play App Signing certificate. Only for pairs including Google Play.
    pub google_cert_on_alt_market: Option<Ratio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossMarket {
    pub options: CrossMarketOptions,
    /// Unordered pairs with `market_a < market_b`.
    pub pairs: Vec<MarketPairRow>,
}

impl CrossMarket {
    pub fn pair(&self, a: &str, b: &str) -> Option<&MarketPairRow> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.pairs
            .iter()
            .find(|p| p.market_a == a && p.market_b == b)
    }
}

fn same_script_equal(a: Option<&str>, b: Option<&str>) -> Option<bool> {
    let (a, b) = (a?, b?);
    if detect_script(a) != detect_script(b) {
        return None;
    }
    Some(a == b)
}

fn tally(outcomes: impl Iterator<Item = Option<bool>>) -> Ratio {
    let (mut hit, mut total) = (0u64, 0u64);
    for o in outcomes.flatten() {
        total += 1;
        hit += u64::from(o);
    }
    Ratio::new(hit, total)
}

fn pair_row(
    a: &str,
    b: &str,
    left: &BTreeMap<&str, &MarketEntry>,
    right: &BTreeMap<&str, &MarketEntry>,
    options: CrossMarketOptions,
) -> MarketPairRow {
    let shared: Vec<(&MarketEntry, &MarketEntry)> = left
        .iter()
        .filter_map(|(pkg, l)| right.get(pkg).map(|r| (*l, *r)))
        .collect();
    let same_cert = tally(shared.iter().map(|(l, r)| {
        let (fl, fr) = (l.fingerprints(), r.fingerprints());
        if fl.is_empty() || fr.is_empty() {
            return None;
        }
        Some(if options.cert_equality {
            fl == fr
        } else {
            !fl.is_disjoint(&fr)
        })
    }));
    let same_app_name = tally(shared.iter().map(|(l, r)| {
        same_script_equal(
            l.value(SignalKind::AppNameMarket),
            r.value(SignalKind::AppNameMarket),
        )
    }));
    let same_developer_name = tally(shared.iter().map(|(l, r)| {
        same_script_equal(
            l.value(SignalKind::DeveloperName),
            r.value(SignalKind::DeveloperName),
        )
    }));
    let google_cert_on_alt_market = if a == GOOGLE_PLAY || b == GOOGLE_PLAY {
        let alt_is_right = a == GOOGLE_PLAY;
        Some(tally(shared.iter().map(|(l, r)| {
            let alt = if alt_is_right { r } else { l };
            if alt.certificates.is_empty() {
                return None;
            }
            Some(alt.certificates.iter().any(is_play_signing_subject))
        })))
    } else {
        None
    };
    MarketPairRow {
        market_a: a.to_string(),
        market_b: b.to_string(),
        shared_packages: shared.len() as u64,
        same_cert,
        same_app_name,
        same_developer_name,
        google_cert_on_alt_market,
    }
}

fn cross_market_of(
    latest: &BTreeMap<String, Vec<&MarketEntry>>,
    options: CrossMarketOptions,
) -> CrossMarket {
    let by_pkg: BTreeMap<&str, BTreeMap<&str, &MarketEntry>> = latest
        .iter()
        .map(|(m, es)| {
            (
                m.as_str(),
                es.iter().map(|e| (e.package_name.as_str(), *e)).collect(),
            )
        })
        .collect();
    let markets: Vec<&str> = by_pkg.keys().copied().collect();
    let mut pairs = Vec::new();
    for (i, a) in markets.iter().enumerate() {
        for b in &markets[i + 1..] {
            pairs.push(pair_row(a, b, &by_pkg[a], &by_pkg[b], options));
        }
    }
    CrossMarket { options, pairs }
}

/// Cross-market section alone.
pub fn cross_market(dataset: &Dataset, options: CrossMarketOptions) -> CrossMarket {
    cross_market_of(&latest_by_market(dataset), options)
}

fn latest_by_market(dataset: &Dataset) -> BTreeMap<String, Vec<&MarketEntry>> {
    let latest = latest_entries(dataset.entries());
    let mut out: BTreeMap<String, Vec<&MarketEntry>> = BTreeMap::new();
    for ((market, _), e) in latest.entries {
        out.entry(market).or_default().push(e);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub format_version: u32,
    pub within_app: BTreeMap<String, WithinApp>,
    pub within_market: BTreeMap<String, WithinMarket>,
    pub cross_market: CrossMarket,
}

pub fn within_app_consistency(dataset: &Dataset) -> BTreeMap<String, WithinApp> {
    latest_by_market(dataset)
        .iter()
        .map(|(m, es)| (m.clone(), within_app_market(m, es)))
        .collect()
}

pub fn within_market_consistency(dataset: &Dataset) -> BTreeMap<String, WithinMarket> {
    latest_by_market(dataset)
        .iter()
        .map(|(m, es)| (m.clone(), within_market(es)))
        .collect()
}

pub fn consistency(dataset: &Dataset, options: CrossMarketOptions) -> ConsistencyReport {
    let latest = latest_by_market(dataset);
    ConsistencyReport {
        format_version: REPORT_FORMAT_VERSION,
        within_app: latest
            .iter()
            .map(|(m, es)| (m.clone(), within_app_market(m, es)))
            .collect(),
        within_market: latest
            .iter()
            .map(|(m, es)| (m.clone(), within_market(es)))
            .collect(),
        cross_market: cross_market_of(&latest, options),
    }
}

impl CrossMarket {
    /// Pairwise matrix in long form, both orientations.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "market_x",
            "market_y",
            "metric",
            "numerator",
            "denominator",
            "percent",
        ])?;
        let mut rows: BTreeSet<(String, String, &str, u64, u64, String)> = BTreeSet::new();
        for p in &self.pairs {
            let mut metrics = vec![
                (
                    "shared_packages",
                    Ratio::new(p.shared_packages, p.shared_packages),
                ),
                ("same_cert", p.same_cert),
                ("same_app_name", p.same_app_name),
                ("same_developer_name", p.same_developer_name),
            ];
            if let Some(g) = p.google_cert_on_alt_market {
                metrics.push(("google_cert_on_alt_market", g));
            }
            for (name, r) in metrics {
                let pct = r.percent.map(|v| v.to_string()).unwrap_or_default();
                for (x, y) in [(&p.market_a, &p.market_b), (&p.market_b, &p.market_a)] {
                    rows.insert((
                        x.clone(),
                        y.clone(),
                        name,
                        r.numerator,
                        r.denominator,
                        pct.clone(),
                    ));
                }
            }
        }
        for (x, y, name, n, d, pct) in rows {
            w.write_record([x, y, name.to_string(), n.to_string(), d.to_string(), pct])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl ConsistencyReport {
    /// Within-app rows: one line per compared name pair.
    pub fn write_within_app_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for app in self.within_app.values() {
            for row in &app.rows {
                w.serialize(row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
