//! The bipartite attribution graph: entry nodes on one side, signal-value
//! nodes on the other, joined wherever an entry carries that value.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::ingest::MarketEntry;
use crate::signal::SignalKind;
use crate::stats::{ccdf, CcdfPoint, Ratio};

/// Kinds used when none are given.
pub const DEFAULT_GRAPH_KINDS: [SignalKind; 7] = [
    SignalKind::PackageName,
    SignalKind::AppNameMarket,
    SignalKind::DeveloperName,
    SignalKind::DeveloperWebsite,
    SignalKind::DeveloperEmail,
    SignalKind::PrivacyPolicyUrl,
    SignalKind::CertFingerprint,
];

/// Kinds ignored when deciding whether a cluster is fully consistent.
pub const CONSISTENCY_EXEMPT: [SignalKind; 2] =
    [SignalKind::AppNameMarket, SignalKind::PackageName];

pub fn default_kinds() -> BTreeSet<SignalKind> {
    DEFAULT_GRAPH_KINDS.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "node_type", rename_all = "snake_case")]
pub enum GraphNode {
    Entry {
        market: String,
        package_name: String,
    },
    Signal {
        kind: SignalKind,
        value: String,
    },
}

impl GraphNode {
    pub fn is_entry(&self) -> bool {
        matches!(self, GraphNode::Entry { .. })
    }

    pub fn kind(&self) -> Option<SignalKind> {
        match self {
            GraphNode::Signal { kind, .. } => Some(*kind),
            GraphNode::Entry { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphNode::Entry {
                market,
                package_name,
            } => format!("{market}/{package_name}"),
            GraphNode::Signal { kind, value } => format!("{kind}:{value}"),
        }
    }
}

/// Node ids are positions in the sorted node list, so they are stable for
/// a given set of entries and kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributionGraph {
    nodes: Vec<GraphNode>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    kinds: BTreeSet<SignalKind>,
    scope: Option<BTreeSet<String>>,
}

impl AttributionGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &GraphNode {
        &self.nodes[id]
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    pub fn kinds(&self) -> &BTreeSet<SignalKind> {
        &self.kinds
    }

    pub fn scope(&self) -> Option<&BTreeSet<String>> {
        self.scope.as_ref()
    }

    pub fn index_of(&self, node: &GraphNode) -> Option<usize> {
        self.nodes.binary_search(node).ok()
    }

    pub fn entry_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_entry())
    }

    pub fn entry_count(&self) -> usize {
        self.entry_ids().count()
    }

    /// Every edge once, as (signal id, entry id), in id order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nodes.len())
            .filter(|&i| !self.nodes[i].is_entry())
            .flat_map(move |s| self.adjacency[s].iter().map(move |&e| (s, e)))
    }

    /// Drops one node and its edges; used to probe cluster structure.
    pub fn without_node(&self, id: usize) -> AttributionGraph {
        let mut nodes = self.nodes.clone();
        nodes.remove(id);
        let remap = |i: usize| if i > id { i - 1 } else { i };
        let mut adjacency: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
        for (i, adj) in self.adjacency.iter().enumerate() {
            if i == id {
                continue;
            }
            adjacency.push(
                adj.iter()
                    .filter(|&&j| j != id)
                    .map(|&j| remap(j))
                    .collect(),
            );
        }
        let edge_count = self.edge_count - self.adjacency[id].len();
        AttributionGraph {
            nodes,
            adjacency,
            edge_count,
            kinds: self.kinds.clone(),
            scope: self.scope.clone(),
        }
    }
}

/// Builds the graph over `entries`, keeping only those whose market is in
/// `scope` (all when `None`). Entries sharing a (market, package) collapse
/// into one node.
pub fn build_graph<'a, I>(
    entries: I,
    kinds: &BTreeSet<SignalKind>,
    scope: Option<&BTreeSet<String>>,
) -> Result<AttributionGraph, GraphError>
where
    I: IntoIterator<Item = &'a MarketEntry>,
{
    if let Some(&bad) = kinds.iter().find(|k| **k == SignalKind::AppNameManifest) {
        return Err(GraphError::NotAGraphKind(bad));
    }
    let mut edges: BTreeSet<(GraphNode, GraphNode)> = BTreeSet::new();
    let mut entry_nodes: BTreeSet<GraphNode> = BTreeSet::new();
    for entry in entries {
        if scope.is_some_and(|s| !s.contains(&entry.market)) {
            continue;
        }
        let entry_node = GraphNode::Entry {
            market: entry.market.clone(),
            package_name: entry.package_name.clone(),
        };
        for &kind in kinds {
            if kind == SignalKind::CertFingerprint {
                for fp in entry.fingerprints() {
                    edges.insert((
                        GraphNode::Signal {
                            kind,
                            value: fp.to_string(),
                        },
                        entry_node.clone(),
                    ));
                }
            } else if let Some(value) = entry.value(kind) {
                edges.insert((
                    GraphNode::Signal {
                        kind,
                        value: value.to_string(),
                    },
                    entry_node.clone(),
                ));
            }
        }
        entry_nodes.insert(entry_node);
    }

    let mut all: BTreeSet<GraphNode> = entry_nodes;
    for (signal, _) in &edges {
        all.insert(signal.clone());
    }
    let nodes: Vec<GraphNode> = all.into_iter().collect();
    let id = |n: &GraphNode| nodes.binary_search(n).expect("node was inserted");
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for (signal, entry) in &edges {
        let (s, e) = (id(signal), id(entry));
        adjacency[s].push(e);
        adjacency[e].push(s);
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    Ok(AttributionGraph {
        nodes,
        adjacency,
        edge_count: edges.len(),
        kinds: kinds.clone(),
        scope: scope.cloned(),
    })
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Node-id sets of the connected components, largest first, ties broken by
/// smallest node id. Each set is sorted.
pub fn component_sets(graph: &AttributionGraph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut uf = UnionFind::new(n);
    for (s, e) in graph.edges() {
        uf.union(s, e);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Consistency {
    FullyConsistent,
    /// A non-exempt kind takes more than one value.
    Inconsistent {
        kinds: Vec<SignalKind>,
    },
    /// Fewer than two entries.
    Isolated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub entry_nodes: Vec<usize>,
    pub signal_nodes: Vec<usize>,
    pub consistency: Consistency,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.entry_nodes.len() + self.signal_nodes.len()
    }

    pub fn fully_consistent(&self) -> bool {
        self.consistency == Consistency::FullyConsistent
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub clusters: Vec<Cluster>,
    /// Clusters holding exactly one entry.
    pub isolated_entries: usize,
}

/// Decides whether every non-exempt kind takes a single value across the
/// entries of a cluster.
pub fn classify_cluster(entry_nodes: &[usize], graph: &AttributionGraph) -> Consistency {
    if entry_nodes.len() < 2 {
        return Consistency::Isolated;
    }
    let mut values: BTreeMap<SignalKind, BTreeSet<usize>> = BTreeMap::new();
    for &e in entry_nodes {
        for &s in graph.neighbors(e) {
            let kind = graph.node(s).kind().expect("entries only touch signals");
            if !CONSISTENCY_EXEMPT.contains(&kind) {
                values.entry(kind).or_default().insert(s);
            }
        }
    }
    let kinds: Vec<SignalKind> = values
        .into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(k, _)| k)
        .collect();
    if kinds.is_empty() {
        Consistency::FullyConsistent
    } else {
        Consistency::Inconsistent { kinds }
    }
}

pub fn connected_components(graph: &AttributionGraph) -> Components {
    let mut clusters = Vec::new();
    let mut isolated_entries = 0;
    for (id, set) in component_sets(graph).into_iter().enumerate() {
        let (entry_nodes, signal_nodes): (Vec<usize>, Vec<usize>) =
            set.into_iter().partition(|&i| graph.node(i).is_entry());
        if entry_nodes.len() == 1 {
            isolated_entries += 1;
        }
        let consistency = classify_cluster(&entry_nodes, graph);
        clusters.push(Cluster {
            id,
            entry_nodes,
            signal_nodes,
            consistency,
        });
    }
    Components {
        clusters,
        isolated_entries,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BetweennessOptions {
    /// Divide each score by `(n-1)(n-2)/2` of its own component.
    pub normalized: bool,
    /// Skip components with more nodes than this.
    pub max_component_size: Option<usize>,
}

/// Exact betweenness of every node, over unweighted shortest paths. Each
/// unordered pair of endpoints is counted once. Nodes in skipped components
/// score `None`.
pub fn betweenness(graph: &AttributionGraph, options: BetweennessOptions) -> Vec<Option<f64>> {
    let comps = component_sets(graph);
    let per_component: Vec<Option<Vec<(usize, f64)>>> = comps
        .par_iter()
        .map(|comp| {
            if options
                .max_component_size
                .is_some_and(|max| comp.len() > max)
            {
                return None;
            }
            Some(component_betweenness(graph, comp, options.normalized))
        })
        .collect();
    let mut scores = vec![None; graph.node_count()];
    for (comp, result) in comps.iter().zip(per_component) {
        match result {
            Some(values) => {
                for (node, v) in values {
                    scores[node] = Some(v);
                }
            }
            None => {
                for &node in comp {
                    scores[node] = None;
                }
            }
        }
    }
    scores
}

/// Betweenness without a size cutoff.
pub fn betweenness_centrality(graph: &AttributionGraph, normalized: bool) -> Vec<f64> {
    betweenness(
        graph,
        BetweennessOptions {
            normalized,
            max_component_size: None,
        },
    )
    .into_iter()
    .map(|v| v.expect("no cutoff"))
    .collect()
}

fn component_betweenness(
    graph: &AttributionGraph,
    comp: &[usize],
    normalized: bool,
) -> Vec<(usize, f64)> {
    let n = comp.len();
    let local: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let adj: Vec<Vec<usize>> = comp
        .iter()
        .map(|&g| graph.neighbors(g).iter().map(|nb| local[nb]).collect())
        .collect();

    let mut cb = vec![0.0f64; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut stack = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        for i in 0..n {
            sigma[i] = 0.0;
            dist[i] = usize::MAX;
            delta[i] = 0.0;
            preds[i].clear();
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    let scale = if normalized && n > 2 {
        ((n - 1) * (n - 2)) as f64 / 2.0
    } else {
        1.0
    };
    let zero_small = normalized && n <= 2;
    comp.iter()
        .zip(cb)
        .map(|(&g, v)| (g, if zero_small { 0.0 } else { v / 2.0 / scale }))
        .collect()
}

/// Highest-scoring nodes first; ties go to the smaller node id.
pub fn rank_nodes(scores: &[Option<f64>], filter: impl Fn(usize) -> bool) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|v| (i, v)))
        .filter(|(i, _)| filter(*i))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub value: String,
    /// Distinct `to_kind` values sharing an entry with this node.
    pub count: usize,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub from_kind: SignalKind,
    pub to_kind: SignalKind,
    pub rows: Vec<DegreeRow>,
    /// count -> number of `from_kind` nodes with that count.
    pub distribution: BTreeMap<usize, usize>,
    /// `from_kind` nodes linked to more than one `to_kind` value.
    pub multi_valued: Ratio,
    /// Entries carrying a multi-valued `from_kind` node, over all entries.
    pub entries_touched: Ratio,
    pub ccdf: Vec<CcdfPoint>,
}

impl DegreeStats {
    pub fn count_of(&self, value: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.value == value).map(|r| r.count)
    }
}

/// For each `from_kind` node, the number of distinct `to_kind` values one
/// entry hop away.
pub fn signal_degree_stats(
    graph: &AttributionGraph,
    from_kind: SignalKind,
    to_kind: SignalKind,
) -> Result<DegreeStats, GraphError> {
    for kind in [from_kind, to_kind] {
        if !graph.kinds().contains(&kind) {
            return Err(GraphError::KindNotInGraph(kind));
        }
    }
    let mut rows = Vec::new();
    let mut distribution: BTreeMap<usize, usize> = BTreeMap::new();
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    let mut multi = 0;
    for (id, node) in graph.nodes().iter().enumerate() {
        let GraphNode::Signal { kind, value } = node else {
            continue;
        };
        if *kind != from_kind {
            continue;
        }
        let entries = graph.neighbors(id);
        let reached: BTreeSet<usize> = entries
            .iter()
            .flat_map(|&e| graph.neighbors(e))
            .copied()
            .filter(|&s| graph.node(s).kind() == Some(to_kind))
            .collect();
        let count = reached.len();
        if count > 1 {
            multi += 1;
            touched.extend(entries.iter().copied());
        }
        *distribution.entry(count).or_default() += 1;
        rows.push(DegreeRow {
            value: value.clone(),
            count,
            entries: entries.len(),
        });
    }
    let counts: Vec<u64> = rows.iter().map(|r| r.count as u64).collect();
    Ok(DegreeStats {
        from_kind,
        to_kind,
        multi_valued: Ratio::from_usize(multi, rows.len()),
        entries_touched: Ratio::from_usize(touched.len(), graph.entry_count()),
        ccdf: ccdf(&counts),
        rows,
        distribution,
    })
}

pub fn value_hash(node: &GraphNode) -> String {
    crate::apk::sha256_hex(node.label().as_bytes())
}

/// Writes `node_id,node_type,kind,value_hash` rows.
pub fn write_nodes_csv<W: Write>(graph: &AttributionGraph, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node_id", "node_type", "kind", "value_hash"])?;
    for (id, node) in graph.nodes().iter().enumerate() {
        let (node_type, kind) = match node {
            GraphNode::Entry { .. } => ("entry", String::new()),
            GraphNode::Signal { kind, .. } => ("signal", kind.to_string()),
        };
        w.write_record([id.to_string(), node_type.into(), kind, value_hash(node)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `signal_id,entry_id` rows.
pub fn write_edges_csv<W: Write>(graph: &AttributionGraph, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["signal_id", "entry_id"])?;
    for (s, e) in graph.edges() {
        w.write_record([s.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedNode {
    pub node_id: usize,
    pub label: String,
    pub betweenness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub entries: usize,
    pub signals: usize,
    pub fully_consistent: bool,
    pub consistency: Consistency,
    pub top_centrality: Vec<RankedNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub entries: usize,
    pub kinds: Vec<SignalKind>,
    pub scope: Option<Vec<String>>,
    pub clusters: usize,
    pub isolated_entries: usize,
    pub fully_consistent_clusters: usize,
    pub cluster_summaries: Vec<ClusterSummary>,
}

/// JSON-ready cluster overview. `scores` are raw betweenness values; each
/// cluster lists up to `top` of its signal nodes.
pub fn summarize(
    graph: &AttributionGraph,
    components: &Components,
    scores: &[Option<f64>],
    top: usize,
) -> GraphSummary {
    let cluster_summaries = components
        .clusters
        .iter()
        .map(|c| {
            let members: BTreeSet<usize> = c.signal_nodes.iter().copied().collect();
            let top_centrality = rank_nodes(scores, |i| members.contains(&i))
                .into_iter()
                .take(top)
                .map(|(i, v)| RankedNode {
                    node_id: i,
                    label: graph.node(i).label(),
                    betweenness: v,
                })
                .collect();
            ClusterSummary {
                id: c.id,
                entries: c.entry_nodes.len(),
                signals: c.signal_nodes.len(),
                fully_consistent: c.fully_consistent(),
                consistency: c.consistency.clone(),
                top_centrality,
            }
        })
        .collect();
    GraphSummary {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        entries: graph.entry_count(),
        kinds: graph.kinds().iter().copied().collect(),
        scope: graph.scope().map(|s| s.iter().cloned().collect()),
        clusters: components.clusters.len(),
        isolated_entries: components.isolated_entries,
        fully_consistent_clusters: components
            .clusters
            .iter()
            .filter(|c| c.fully_consistent())
            .count(),
        cluster_summaries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apk::{CertificateInfo, RdnSet};
    use crate::ingest::MarketEntry;
    use crate::signal::normalize_signal;
    use std::collections::BTreeMap;

    fn entry(pkg: &str, signals: &[(SignalKind, &str)], certs: &[&str]) -> MarketEntry {
        let mut map = BTreeMap::new();
        for (k, v) in signals
            .iter()
            .chain([(SignalKind::PackageName, pkg)].iter())
        {
            map.insert(*k, normalize_signal(*k, v).unwrap().unwrap());
        }
        MarketEntry {
            market: "m".into(),
            package_name: pkg.into(),
            crawl_id: 1,
            fetched_at: chrono::DateTime::UNIX_EPOCH,
            apk_sha256: None,
            signals: map,
            certificates: certs
                .iter()
                .map(|c| CertificateInfo {
                    fingerprint_sha256: c.repeat(64),
                    subject: RdnSet::default(),
                    issuer: RdnSet::default(),
                    self_signed: true,
                    schemes: Default::default(),
                })
                .collect(),
            flags: Default::default(),
        }
    }

    fn graph(entries: &[MarketEntry]) -> AttributionGraph {
        build_graph(entries, &default_kinds(), None).unwrap()
    }

    #[test]
    fn shared_certificate_connects() {
        let g = graph(&[entry("a", &[], &["1"]), entry("b", &[], &["1"])]);
        let comps = connected_components(&g);
        assert_eq!(comps.clusters.len(), 1);
        assert_eq!(comps.clusters[0].entry_nodes.len(), 2);
        assert_eq!(comps.isolated_entries, 0);
    }

    #[test]
    fn package_only_entry() {
        let g = graph(&[entry("a", &[], &[])]);
        let comps = connected_components(&g);
        assert_eq!(comps.clusters.len(), 1);
        assert_eq!(comps.clusters[0].size(), 2);
        assert_eq!(comps.isolated_entries, 1);
        assert_eq!(comps.clusters[0].consistency, Consistency::Isolated);
    }

    #[test]
    fn transitive_chain() {
        let dev = SignalKind::DeveloperName;
        let g = graph(&[
            entry("a", &[(dev, "X")], &[]),
            entry("b", &[(dev, "x")], &["2"]),
            entry("c", &[], &["2"]),
        ]);
        assert_eq!(connected_components(&g).clusters.len(), 1);
    }

    #[test]
    fn empty_graph() {
        let g = graph(&[]);
        assert!(connected_components(&g).clusters.is_empty());
        assert!(betweenness_centrality(&g, true).is_empty());
    }

    #[test]
    fn manifest_label_cannot_be_a_node() {
        let kinds: BTreeSet<_> = [SignalKind::AppNameManifest].into();
        assert_eq!(
            build_graph(&[], &kinds, None),
            Err(GraphError::NotAGraphKind(SignalKind::AppNameManifest))
        );
    }

    #[test]
    fn consistency_ignores_app_name() {
        use SignalKind::*;
        let common = [
            (DeveloperName, "D"),
            (DeveloperEmail, "d@x.io"),
            (DeveloperWebsite, "https://x.io"),
            (PrivacyPolicyUrl, "https://x.io/p"),
        ];
        let mut a_sig = common.to_vec();
        a_sig.push((AppNameMarket, "Alpha"));
        let mut b_sig = common.to_vec();
        b_sig.push((AppNameMarket, "Beta"));
        let g = graph(&[entry("a", &a_sig, &["1"]), entry("b", &b_sig, &["1"])]);
        assert!(connected_components(&g).clusters[0].fully_consistent());

        let g = graph(&[
            entry(
                "a",
                &[(DeveloperName, "D"), (DeveloperEmail, "one@x.io")],
                &[],
            ),
            entry(
                "b",
                &[(DeveloperName, "D"), (DeveloperEmail, "two@x.io")],
                &[],
            ),
        ]);
        assert_eq!(
            connected_components(&g).clusters[0].consistency,
            Consistency::Inconsistent {
                kinds: vec![DeveloperEmail]
            }
        );
    }

    #[test]
    fn star_centrality() {
        let star: Vec<MarketEntry> = ["a", "b", "c", "d"]
            .iter()
            .map(|p| entry(p, &[], &["9"]))
            .collect();
        let kinds: BTreeSet<_> = [SignalKind::CertFingerprint].into();
        let g = build_graph(&star, &kinds, None).unwrap();
        let bc = betweenness_centrality(&g, true);
        let center = g.nodes().iter().position(|n| !n.is_entry()).unwrap();
        for (i, v) in bc.iter().enumerate() {
            assert_eq!(*v, if i == center { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn removing_a_node() {
        let g = graph(&[entry("a", &[], &["1"]), entry("b", &[], &["1"])]);
        let cert = g
            .nodes()
            .iter()
            .position(|n| n.kind() == Some(SignalKind::CertFingerprint))
            .unwrap();
        let split = g.without_node(cert);
        assert_eq!(split.node_count(), g.node_count() - 1);
        assert_eq!(split.edge_count(), g.edge_count() - 2);
        assert_eq!(connected_components(&split).clusters.len(), 2);
    }

    #[test]
    fn three_node_path() {
        let kinds: BTreeSet<_> = [SignalKind::DeveloperName].into();
        let dev = SignalKind::DeveloperName;
        let g = build_graph(
            &[
                entry("a", &[(dev, "s")], &[]),
                entry("b", &[(dev, "s")], &[]),
            ],
            &kinds,
            None,
        )
        .unwrap();
        assert_eq!(g.node_count(), 3);
        let bc = betweenness_centrality(&g, true);
        let mid = g
            .index_of(&GraphNode::Signal {
                kind: dev,
                value: "s".into(),
            })
            .unwrap();
        for (i, v) in bc.iter().enumerate() {
            assert_eq!(*v, if i == mid { 1.0 } else { 0.0 });
        }
        assert_eq!(betweenness_centrality(&g, false)[mid], 1.0);
    }

    #[test]
    fn cutoff_skips_large_components() {
        let g = graph(&[
            entry("a", &[], &["1"]),
            entry("b", &[], &["1"]),
            entry("c", &[], &[]),
        ]);
        let scores = betweenness(
            &g,
            BetweennessOptions {
                normalized: false,
                max_component_size: Some(2),
            },
        );
        let c = g
            .index_of(&GraphNode::Entry {
                market: "m".into(),
                package_name: "c".into(),
            })
            .unwrap();
        assert_eq!(scores[c], Some(0.0));
        assert_eq!(scores.iter().filter(|s| s.is_none()).count(), 5);
    }

    #[test]
    fn degree_counts() {
        use SignalKind::*;
        let g = graph(&[
            entry("a", &[(DeveloperName, "one")], &["1"]),
            entry("b", &[(DeveloperName, "two")], &["1"]),
            entry("c", &[(DeveloperName, "three")], &["1", "2"]),
            entry("d", &[(DeveloperName, "three")], &["3"]),
        ]);
        let stats = signal_degree_stats(&g, CertFingerprint, DeveloperName).unwrap();
        assert_eq!(stats.count_of(&"1".repeat(64)), Some(3));
        assert_eq!(stats.multi_valued, Ratio::new(1, 3));
        assert_eq!(stats.entries_touched, Ratio::new(3, 4));
        let back = signal_degree_stats(&g, DeveloperName, CertFingerprint).unwrap();
        assert_eq!(back.count_of("three"), Some(3));
        assert_eq!(back.count_of("one"), Some(1));

        let narrow = build_graph(&[entry("a", &[], &[])], &[PackageName].into(), None).unwrap();
        assert_eq!(
            signal_degree_stats(&narrow, CertFingerprint, PackageName),
            Err(GraphError::KindNotInGraph(CertFingerprint))
        );
    }

    #[test]
    fn csv_export_shape() {
        let g = graph(&[entry("a", &[], &["1"])]);
        let mut nodes = Vec::new();
        write_nodes_csv(&g, &mut nodes).unwrap();
        let text = String::from_utf8(nodes).unwrap();
        assert!(text.starts_with("node_id,node_type,kind,value_hash\n"));
        assert_eq!(text.lines().count(), 1 + g.node_count());
        let mut edges = Vec::new();
        write_edges_csv(&g, &mut edges).unwrap();
        assert_eq!(
            String::from_utf8(edges).unwrap().lines().count(),
            1 + g.edge_count()
        );
    }
}
