//! Slow reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use attrigraph_core::apk::{CertificateInfo, RdnSet};
use attrigraph_core::ingest::MarketEntry;
use attrigraph_core::signal::{normalize_signal, SignalKind};
use rand::seq::SliceRandom;
use rand::Rng;

/// Components by breadth-first search, each sorted, ordered by smallest member.
pub fn bfs_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Number of edges in a BFS spanning forest.
pub fn spanning_forest_edges(n: usize, edges: &[(usize, usize)]) -> usize {
    bfs_components(n, edges).iter().map(|c| c.len() - 1).sum()
}

const INF: usize = usize::MAX / 4;

fn all_pairs_distances(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Walks every shortest s-t path explicitly and tallies the interior nodes.
fn enumerate_paths(
    v: usize,
    t: usize,
    adj: &[Vec<usize>],
    d: &[Vec<usize>],
    path: &mut Vec<usize>,
    through: &mut [u64],
    total: &mut u64,
) {
    if v == t {
        *total += 1;
        for &x in &path[1..path.len() - 1] {
            through[x] += 1;
        }
        return;
    }
    for &w in &adj[v] {
        if d[w][t] + 1 == d[v][t] {
            path.push(w);
            enumerate_paths(w, t, adj, d, path, through, total);
            path.pop();
        }
    }
}

/// Betweenness from full shortest-path enumeration over unordered pairs.
pub fn brute_betweenness(n: usize, edges: &[(usize, usize)], normalized: bool) -> Vec<f64> {
    let d = all_pairs_distances(n, edges);
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if d[s][t] >= INF {
                continue;
            }
            let mut through = vec![0u64; n];
            let mut total = 0u64;
            enumerate_paths(s, t, &adj, &d, &mut vec![s], &mut through, &mut total);
            for v in 0..n {
                score[v] += through[v] as f64 / total as f64;
            }
        }
    }
    if normalized {
        for comp in bfs_components(n, edges) {
            let k = comp.len();
            for v in comp {
                score[v] = if k > 2 {
                    score[v] / (((k - 1) * (k - 2)) as f64 / 2.0)
                } else {
                    0.0
                };
            }
        }
    }
    score
}

/// Textbook full-matrix edit distance over code points.
pub fn dp_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        m[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            m[i][j] = (m[i - 1][j] + 1)
                .min(m[i][j - 1] + 1)
                .min(m[i - 1][j - 1] + cost);
        }
    }
    m[a.len()][b.len()]
}

/// (x, count of values >= x, total) for each distinct x, by counting.
pub fn counted_ccdf(values: &[u64]) -> Vec<(u64, u64, u64)> {
    let distinct: BTreeSet<u64> = values.iter().copied().collect();
    distinct
        .into_iter()
        .map(|x| {
            (
                x,
                values.iter().filter(|&&v| v >= x).count() as u64,
                values.len() as u64,
            )
        })
        .collect()
}

pub fn cert(fp: String) -> CertificateInfo {
    CertificateInfo {
        fingerprint_sha256: fp,
        subject: RdnSet::default(),
        issuer: RdnSet::default(),
        self_signed: true,
        schemes: Default::default(),
    }
}

pub fn fingerprint(tag: &str) -> String {
    attrigraph_core::apk::sha256_hex(tag.as_bytes())
}

pub fn entry(
    market: &str,
    pkg: &str,
    signals: &[(SignalKind, String)],
    certs: &[String],
) -> MarketEntry {
    let mut map = BTreeMap::new();
    map.insert(
        SignalKind::PackageName,
        normalize_signal(SignalKind::PackageName, pkg)
            .unwrap()
            .unwrap(),
    );
    for (k, v) in signals {
        if let Some(s) = normalize_signal(*k, v).unwrap() {
            map.insert(*k, s);
        }
    }
    MarketEntry {
        market: market.to_string(),
        package_name: pkg.to_string(),
        crawl_id: 1,
        fetched_at: chrono::DateTime::UNIX_EPOCH,
        apk_sha256: None,
        signals: map,
        certificates: certs.iter().cloned().map(cert).collect(),
        flags: Default::default(),
    }
}

/// Small random entry set whose graph stays under 60 nodes: at most 15
/// entries, values drawn from small pools so entries collide.
pub fn random_entries<R: Rng>(rng: &mut R) -> Vec<MarketEntry> {
    let pools: [(SignalKind, usize); 5] = [
        (SignalKind::DeveloperName, 4),
        (SignalKind::DeveloperEmail, 3),
        (SignalKind::DeveloperWebsite, 3),
        (SignalKind::PrivacyPolicyUrl, 3),
        (SignalKind::AppNameMarket, 4),
    ];
    let n = rng.gen_range(0..=15);
    let mut entries: Vec<MarketEntry> = (0..n)
        .map(|i| {
            let mut signals: Vec<(SignalKind, String)> = Vec::new();
            for &(k, size) in &pools {
                if rng.gen_bool(0.35) {
                    signals.push((k, format!("{}{}", k.as_str(), rng.gen_range(0..size))));
                }
            }
            let certs: BTreeSet<String> = (0..rng.gen_range(0..=2))
                .map(|_| fingerprint(&format!("c{}", rng.gen_range(0..4))))
                .collect();
            let certs: Vec<String> = certs.into_iter().collect();
            entry("m", &format!("p{i}"), &signals, &certs)
        })
        .collect();
    entries.shuffle(rng);
    entries
}
