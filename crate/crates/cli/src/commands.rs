use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use attrigraph_core::apk::{extract_apk, ApkSignals, ExtractOptions};
use attrigraph_core::config::PipelineConfig;
use attrigraph_core::graph::{
    betweenness, build_graph, connected_components, default_kinds, rank_nodes, signal_degree_stats,
    summarize, value_hash, write_edges_csv, write_nodes_csv, AttributionGraph, BetweennessOptions,
    Consistency, RankedNode,
};
use attrigraph_core::ingest::{
    join_apk_signals, latest_entries, load_dataset, read_apk_signals, Dataset, MarketRegistry,
    RecordError,
};
use attrigraph_core::metrics::{
    availability, consistency, cross_market, org_report, volatility, AvailabilityOptions,
    CrossMarketOptions, VolatilityOptions, REPORT_FORMAT_VERSION,
};
use attrigraph_core::signal::SignalKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::Output;
use crate::{
    AllArgs, CentralityArgs, Cli, Command, GraphArgs, GraphCommand, ReportCommand, Selection,
};

/// A flag that must be given for this subcommand.
#[derive(Debug)]
pub struct MissingFlag(pub &'static str);

impl fmt::Display for MissingFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing required flag {}", self.0)
    }
}

impl std::error::Error for MissingFlag {}

fn required<'a, T>(value: &'a Option<T>, flag: &'static str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| MissingFlag(flag).into())
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let mut out = Output::new(&cli.out_dir, cli.formats())?;
    let mut code = ExitCode::SUCCESS;
    let name = match &cli.command {
        Command::Extract(args) => {
            let paths = find_apks(&args.paths)?;
            let (signals, failures) = extract_all(&paths, args.resources);
            match &args.out {
                Some(path) => write_jsonl(path, &signals)?,
                None => out.lines("apk_signals.jsonl", &signals)?,
            }
            for f in &failures {
                eprintln!("{}", serde_json::to_string(f)?);
            }
            if !failures.is_empty() {
                code = ExitCode::from(1);
            }
            "extract"
        }
        Command::Ingest(args) => {
            let entries = required(&args.entries, "--entries")?;
            let registry = load_registry(args.markets.as_deref())?;
            let (dataset, errors) = ingest(entries, args.apk_signals.as_deref(), None, registry)?;
            out.data("dataset.json", &dataset)?;
            out.lines("record_errors.jsonl", &errors)?;
            "ingest"
        }
        Command::Graph(cmd) => {
            graph_command(cmd, &mut out)?;
            "graph"
        }
        Command::Report(cmd) => {
            report_command(cmd, &mut out)?;
            "report"
        }
        Command::All(args) => {
            run_all(cli, args, &mut out)?;
            "all"
        }
    };
    let summary = serde_json::json!({
        "command": name,
        "out_dir": cli.out_dir,
        "written": out.written(),
    });
    println!("{summary}");
    Ok(code)
}

fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut text = String::new();
    for v in values {
        text.push_str(&serde_json::to_string(v)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Expands directories into the `.apk` files below them, sorted by path.
fn find_apks(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = walkdir::WalkDir::new(path)
                .into_iter()
                .filter_map(|e| e.ok())
                .filter(|e| e.file_type().is_file())
                .map(|e| e.into_path())
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("apk")))
                .collect();
            found.sort();
            out.extend(found);
        } else if path.is_file() {
            out.push(path.clone());
        } else {
            bail!("no such file or directory: {}", path.display());
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ExtractFailure {
    path: PathBuf,
    error: String,
}

fn extract_all(
    paths: &[PathBuf],
    resolve_resources: bool,
) -> (Vec<ApkSignals>, Vec<ExtractFailure>) {
    let options = ExtractOptions { resolve_resources };
    let results: Vec<Result<ApkSignals, String>> = paths
        .par_iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| e.to_string())?;
            extract_apk(&bytes, &options).map_err(|e| e.to_string())
        })
        .collect();
    let mut signals = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in paths.iter().zip(results) {
        match r {
            Ok(s) => {
                log::info!("{}: {}", path.display(), s.package_name);
                signals.push(s);
            }
            Err(error) => failures.push(ExtractFailure {
                path: path.clone(),
                error,
            }),
        }
    }
    (signals, failures)
}

fn load_registry(path: Option<&Path>) -> Result<MarketRegistry> {
    match path {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(MarketRegistry::from_reader(BufReader::new(file))?)
        }
        None => Ok(MarketRegistry::default()),
    }
}

fn ingest(
    entries: &Path,
    apk_signals: Option<&Path>,
    extracted: Option<&[ApkSignals]>,
    registry: MarketRegistry,
) -> Result<(Dataset, Vec<RecordError>)> {
    let file = File::open(entries).with_context(|| format!("opening {}", entries.display()))?;
    let loaded = load_dataset(BufReader::new(file), &registry)?;
    for e in &loaded.errors {
        log::warn!("{}:{}: {}", entries.display(), e.line, e.message);
    }
    let mut signals = extracted.map(<[ApkSignals]>::to_vec).unwrap_or_default();
    if let Some(p) = apk_signals {
        let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
        signals.extend(read_apk_signals(BufReader::new(file))?);
    }
    let dataset = if signals.is_empty() && apk_signals.is_none() && extracted.is_none() {
        loaded.dataset
    } else {
        join_apk_signals(loaded.dataset, &signals)
    };
    Ok((dataset, loaded.errors))
}

fn load_dataset_file(path: &Option<PathBuf>) -> Result<Dataset> {
    let path = required(path, "--dataset")?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_json(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Keeps only entries from `markets`; all of them when empty.
fn restrict(dataset: Dataset, markets: &[String]) -> Result<Dataset> {
    if markets.is_empty() {
        return Ok(dataset);
    }
    for m in markets {
        if !dataset.registry.contains(m) {
            bail!("unknown market `{m}`");
        }
    }
    let registry = dataset.registry.clone();
    let kept = dataset
        .into_entries()
        .into_iter()
        .filter(|e| markets.contains(&e.market))
        .collect();
    Ok(Dataset::new(kept, registry)?)
}

fn selected(selection: &Selection) -> Result<Dataset> {
    restrict(load_dataset_file(&selection.dataset)?, &selection.market)
}

fn kinds_or_default(kinds: &[SignalKind]) -> BTreeSet<SignalKind> {
    if kinds.is_empty() {
        default_kinds()
    } else {
        kinds.iter().copied().collect()
    }
}

/// Graph over the latest entry of each (market, package).
fn graph_of(
    dataset: &Dataset,
    kinds: &[SignalKind],
    markets: &[String],
) -> Result<AttributionGraph> {
    let latest = latest_entries(dataset.entries());
    let scope: Option<BTreeSet<String>> =
        (!markets.is_empty()).then(|| markets.iter().cloned().collect());
    let graph = build_graph(latest.values(), &kinds_or_default(kinds), scope.as_ref())?;
    log::info!(
        "graph: {} nodes, {} edges",
        graph.node_count(),
        graph.edge_count()
    );
    Ok(graph)
}

fn load_graph(args: &GraphArgs) -> Result<AttributionGraph> {
    let dataset = load_dataset_file(&args.selection.dataset)?;
    graph_of(&dataset, &args.kinds, &args.selection.market)
}

fn graph_command(cmd: &GraphCommand, out: &mut Output) -> Result<()> {
    match cmd {
        GraphCommand::Build { graph, top } => write_graph(&load_graph(graph)?, *top, out),
        GraphCommand::Components { graph } => write_components(&load_graph(graph)?, out),
        GraphCommand::Centrality { graph, centrality } => {
            write_centrality(&load_graph(graph)?, centrality, out)
        }
        GraphCommand::Degrees { graph, from, to } => {
            write_degrees(&load_graph(graph)?, *from, *to, out)
        }
    }
}

fn write_graph(graph: &AttributionGraph, top: usize, out: &mut Output) -> Result<()> {
    out.csv("graph_nodes.csv", |w| write_nodes_csv(graph, w))?;
    out.csv("graph_edges.csv", |w| write_edges_csv(graph, w))?;
    let comps = connected_components(graph);
    let scores = betweenness(graph, BetweennessOptions::default());
    out.json(
        "graph_summary.json",
        &summarize(graph, &comps, &scores, top),
    )
}

#[derive(Serialize)]
struct ClusterRow {
    id: usize,
    size: usize,
    signals: usize,
    consistency: Consistency,
    entries: Vec<String>,
}

#[derive(Serialize)]
struct ClusterFile {
    format_version: u32,
    clusters: usize,
    isolated_entries: usize,
    fully_consistent: usize,
    rows: Vec<ClusterRow>,
}

fn write_components(graph: &AttributionGraph, out: &mut Output) -> Result<()> {
    let comps = connected_components(graph);
    let rows: Vec<ClusterRow> = comps
        .clusters
        .iter()
        .map(|c| ClusterRow {
            id: c.id,
            size: c.size(),
            signals: c.signal_nodes.len(),
            consistency: c.consistency.clone(),
            entries: c
                .entry_nodes
                .iter()
                .map(|&i| graph.node(i).label())
                .collect(),
        })
        .collect();
    let file = ClusterFile {
        format_version: REPORT_FORMAT_VERSION,
        clusters: rows.len(),
        isolated_entries: comps.isolated_entries,
        fully_consistent: comps
            .clusters
            .iter()
            .filter(|c| c.fully_consistent())
            .count(),
        rows,
    };
    out.json("clusters.json", &file)?;
    out.csv("clusters.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "cluster_id",
            "entries",
            "signals",
            "status",
            "inconsistent_kinds",
        ])?;
        for r in &file.rows {
            let (status, kinds) = match &r.consistency {
                Consistency::FullyConsistent => ("fully_consistent", String::new()),
                Consistency::Isolated => ("isolated", String::new()),
                Consistency::Inconsistent { kinds } => (
                    "inconsistent",
                    kinds
                        .iter()
                        .map(|k| k.as_str())
                        .collect::<Vec<_>>()
                        .join(";"),
                ),
            };
            w.write_record([
                r.id.to_string(),
                r.entries.len().to_string(),
                r.signals.to_string(),
                status.to_string(),
                kinds,
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct CentralityFile {
    format_version: u32,
    normalized: bool,
    max_component_size: Option<usize>,
    skipped_nodes: usize,
    top: Vec<RankedNode>,
}

fn write_centrality(
    graph: &AttributionGraph,
    args: &CentralityArgs,
    out: &mut Output,
) -> Result<()> {
    let scores = betweenness(
        graph,
        BetweennessOptions {
            normalized: args.normalized,
            max_component_size: args.max_component,
        },
    );
    let top = rank_nodes(&scores, |_| true)
        .into_iter()
        .take(args.top)
        .map(|(i, v)| RankedNode {
            node_id: i,
            label: graph.node(i).label(),
            betweenness: v,
        })
        .collect();
    out.json(
        "centrality.json",
        &CentralityFile {
            format_version: REPORT_FORMAT_VERSION,
            normalized: args.normalized,
            max_component_size: args.max_component,
            skipped_nodes: scores.iter().filter(|s| s.is_none()).count(),
            top,
        },
    )?;
    out.csv("centrality.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["node_id", "node_type", "kind", "value_hash", "betweenness"])?;
        for (i, score) in scores.iter().enumerate() {
            let node = graph.node(i);
            w.write_record([
                i.to_string(),
                if node.is_entry() { "entry" } else { "signal" }.to_string(),
                node.kind()
                    .map(|k| k.as_str().to_string())
                    .unwrap_or_default(),
                value_hash(node),
                score.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

fn write_degrees(
    graph: &AttributionGraph,
    from: SignalKind,
    to: SignalKind,
    out: &mut Output,
) -> Result<()> {
    let stats = signal_degree_stats(graph, from, to)?;
    let stem = format!("degrees_{}_{}", from.as_str(), to.as_str());
    out.json(&format!("{stem}.json"), &stats)?;
    out.csv(&format!("{stem}_ccdf.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["x", "at_least", "total", "probability"])?;
        for p in &stats.ccdf {
            w.write_record([
                p.x.to_string(),
                p.at_least.to_string(),
                p.total.to_string(),
                p.probability.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

fn read_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn report_command(cmd: &ReportCommand, out: &mut Output) -> Result<()> {
    match cmd {
        ReportCommand::Availability {
            selection,
            cutoff,
            all_signers,
        } => {
            let options = AvailabilityOptions {
                cutoff: *cutoff,
                all_signers: *all_signers,
                markets: selection.market.clone(),
            };
            write_availability(&load_dataset_file(&selection.dataset)?, &options, out)
        }
        ReportCommand::Volatility {
            selection,
            scan_intermediate,
        } => write_volatility(
            &selected(selection)?,
            VolatilityOptions {
                scan_intermediate: *scan_intermediate,
            },
            out,
        ),
        ReportCommand::Consistency {
            selection,
            cert_equality,
        } => write_consistency(
            &selected(selection)?,
            CrossMarketOptions {
                cert_equality: *cert_equality,
            },
            out,
        ),
        ReportCommand::CrossMarket {
            selection,
            cert_equality,
        } => {
            let report = cross_market(
                &selected(selection)?,
                CrossMarketOptions {
                    cert_equality: *cert_equality,
                },
            );
            out.json("cross_market.json", &report)?;
            out.csv("cross_market.csv", |w| report.write_csv(w))
        }
        ReportCommand::Org {
            dataset,
            market,
            names,
        } => {
            let names = read_names(required(names, "--names")?)?;
            write_org(&load_dataset_file(dataset)?, market, &names, out)
        }
    }
}

fn write_availability(
    dataset: &Dataset,
    options: &AvailabilityOptions,
    out: &mut Output,
) -> Result<()> {
    for m in &options.markets {
        if !dataset.registry.contains(m) {
            bail!("unknown market `{m}`");
        }
    }
    let report = availability(dataset, options);
    out.json("availability.json", &report)?;
    out.csv("availability.csv", |w| report.write_csv(w))
}

fn write_volatility(dataset: &Dataset, options: VolatilityOptions, out: &mut Output) -> Result<()> {
    let report = volatility(dataset, options);
    out.json("volatility.json", &report)?;
    out.csv("volatility.csv", |w| report.write_csv(w))
}

fn write_consistency(
    dataset: &Dataset,
    options: CrossMarketOptions,
    out: &mut Output,
) -> Result<()> {
    let report = consistency(dataset, options);
    out.json("consistency.json", &report)?;
    out.csv("within_app.csv", |w| report.write_within_app_csv(w))?;
    out.csv("cross_market.csv", |w| report.cross_market.write_csv(w))
}

fn write_org(dataset: &Dataset, market: &str, names: &[String], out: &mut Output) -> Result<()> {
    if !dataset.registry.contains(market) {
        bail!("unknown market `{market}`");
    }
    let report = org_report(dataset, market, names);
    out.json("org.json", &report)?;
    out.csv("org.csv", |w| report.write_csv(w))
}

fn run_all(cli: &Cli, args: &AllArgs, out: &mut Output) -> Result<()> {
    let entries = required(&args.entries, "--entries")?;
    let org_names = match &args.names {
        Some(p) => read_names(p)?,
        None => Vec::new(),
    };
    let config = PipelineConfig {
        apk_paths: args.apks.clone(),
        entries_path: Some(entries.clone()),
        apk_signals_path: None,
        market_registry: args.markets.clone(),
        kinds: kinds_or_default(&args.kinds),
        markets: args.market.iter().cloned().collect(),
        cutoff: args.cutoff,
        output_dir: cli.out_dir.clone(),
        formats: cli.formats(),
        seed: args.seed,
        resolve_resources: args.resources,
        all_signers: args.all_signers,
        scan_intermediate: args.scan_intermediate,
        cert_equality: args.cert_equality,
        top: args.top,
        org_names: org_names.clone(),
    };
    out.data("config.json", &config)?;

    let paths = find_apks(&args.apks)?;
    let (signals, failures) = extract_all(&paths, args.resources);
    for f in &failures {
        log::warn!("{}: {}", f.path.display(), f.error);
    }
    out.lines("apk_signals.jsonl", &signals)?;
    out.lines("apk_errors.jsonl", &failures)?;

    let registry = load_registry(args.markets.as_deref())?;
    let (dataset, errors) = ingest(entries, None, Some(&signals), registry)?;
    out.data("dataset.json", &dataset)?;
    out.lines("record_errors.jsonl", &errors)?;

    let dataset = restrict(dataset, &args.market)?;
    let graph = graph_of(&dataset, &args.kinds, &[])?;
    write_graph(&graph, args.top, out)?;
    write_components(&graph, out)?;
    write_centrality(
        &graph,
        &CentralityArgs {
            top: args.top,
            normalized: false,
            max_component: None,
        },
        out,
    )?;
    let kinds = graph.kinds();
    if kinds.contains(&SignalKind::CertFingerprint) && kinds.contains(&SignalKind::DeveloperName) {
        write_degrees(
            &graph,
            SignalKind::CertFingerprint,
            SignalKind::DeveloperName,
            out,
        )?;
    }

    write_availability(
        &dataset,
        &AvailabilityOptions {
            cutoff: args.cutoff,
            all_signers: args.all_signers,
            markets: Vec::new(),
        },
        out,
    )?;
    write_volatility(
        &dataset,
        VolatilityOptions {
            scan_intermediate: args.scan_intermediate,
        },
        out,
    )?;
    write_consistency(
        &dataset,
        CrossMarketOptions {
            cert_equality: args.cert_equality,
        },
        out,
    )?;
    if !org_names.is_empty() && dataset.markets.contains(&args.org_market) {
        write_org(&dataset, &args.org_market, &org_names, out)?;
    }
    Ok(())
}
