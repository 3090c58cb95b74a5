mod commands;
mod output;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use attrigraph_core::config::OutputFormat;
use attrigraph_core::signal::SignalKind;
use chrono::{DateTime, Utc};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (dataset format 1, report format 1)"
);

#[derive(Debug, Parser)]
#[command(name = "attrigraph", version = VERSION, about = "Developer attribution signals across app markets")]
pub struct Cli {
    /// Directory for result files.
    #[arg(long, global = true, env = "ATTRIGRAPH_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Report formats to write.
    #[arg(long, global = true, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<Format>,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Cli {
    fn formats(&self) -> BTreeSet<OutputFormat> {
        self.format
            .iter()
            .map(|f| match f {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            })
            .collect()
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pull package name, label and signing certificates out of APK files.
    Extract(ExtractArgs),
    /// Load market records, join APK signals and write dataset.json.
    Ingest(IngestArgs),
    /// Build the attribution graph and analyse it.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Signal availability, volatility and consistency reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Run extraction, ingestion, graph analysis and every report.
    All(AllArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// APK files or directories searched for *.apk.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Output file; `apk_signals.jsonl` in the output directory by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Resolve `@string/` labels through resources.arsc.
    #[arg(long)]
    pub resources: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Market records, one JSON object per line.
    #[arg(long)]
    pub entries: Option<PathBuf>,
    /// Output of `extract`.
    #[arg(long)]
    pub apk_signals: Option<PathBuf>,
    /// Market registry JSON replacing the built-in one.
    #[arg(long)]
    pub markets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Selection {
    /// dataset.json written by `ingest`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Only these markets.
    #[arg(long, value_delimiter = ',')]
    pub market: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub selection: Selection,
    /// Signal kinds that become graph nodes.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub kinds: Vec<SignalKind>,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    /// How many nodes to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Scale by (n-1)(n-2)/2 of each component.
    #[arg(long)]
    pub normalized: bool,
    /// Skip components larger than this.
    #[arg(long)]
    pub max_component: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum GraphCommand {
    /// Node and edge lists plus a cluster summary.
    Build {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Connected components and their consistency.
    Components {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Betweenness centrality.
    Centrality {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        centrality: CentralityArgs,
    },
    /// Distinct values of one kind reachable from each node of another.
    Degrees {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "cert", value_parser = parse_kind)]
        from: SignalKind,
        #[arg(long, default_value = "developer_name", value_parser = parse_kind)]
        to: SignalKind,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    Availability {
        #[command(flatten)]
        selection: Selection,
        /// Partially collected kinds count only entries fetched from here on.
        #[arg(long, value_parser = parse_cutoff)]
        cutoff: Option<DateTime<Utc>>,
        /// Check every signer certificate, not just the first.
        #[arg(long)]
        all_signers: bool,
    },
    Volatility {
        #[command(flatten)]
        selection: Selection,
        /// Also look at entries fetched between the two crawls.
        #[arg(long)]
        scan_intermediate: bool,
    },
    Consistency {
        #[command(flatten)]
        selection: Selection,
        /// Require identical certificate sets instead of any shared one.
        #[arg(long)]
        cert_equality: bool,
    },
    CrossMarket {
        #[command(flatten)]
        selection: Selection,
        #[arg(long)]
        cert_equality: bool,
    },
    /// Per-organization rows for a list of developer names.
    Org {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = attrigraph_core::ingest::GOOGLE_PLAY)]
        market: String,
        /// One developer name per line.
        #[arg(long)]
        names: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AllArgs {
    /// APK files or directories.
    #[arg(long, value_delimiter = ',')]
    pub apks: Vec<PathBuf>,
    #[arg(long)]
    pub entries: Option<PathBuf>,
    #[arg(long)]
    pub markets: Option<PathBuf>,
    /// Developer names for the organization report.
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long, default_value = attrigraph_core::ingest::GOOGLE_PLAY)]
    pub org_market: String,
    #[arg(long, value_parser = parse_cutoff)]
    pub cutoff: Option<DateTime<Utc>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub kinds: Vec<SignalKind>,
    #[arg(long, value_delimiter = ',')]
    pub market: Vec<String>,
    #[arg(long)]
    pub resources: bool,
    /// Recorded in config.json; the pipeline itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long)]
    pub all_signers: bool,
    #[arg(long)]
    pub scan_intermediate: bool,
    #[arg(long)]
    pub cert_equality: bool,
}

fn parse_kind(s: &str) -> Result<SignalKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_cutoff(s: &str) -> Result<DateTime<Utc>, String> {
    attrigraph_core::ingest::parse_timestamp(s).map(|(t, _)| t)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(code) => code,
        Err(err) => {
            let body = match err.downcast_ref::<commands::MissingFlag>() {
                Some(m) => serde_json::json!({ "error": "missing required flag", "flag": m.0 }),
                None => serde_json::json!({ "error": format!("{err:#}") }),
            };
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn version_names_the_format_versions() {
        let want = format!(
            "dataset format {}, report format {}",
            attrigraph_core::ingest::DATASET_FORMAT_VERSION,
            attrigraph_core::metrics::REPORT_FORMAT_VERSION
        );
        assert!(VERSION.contains(&want));
    }

    #[test]
    fn arguments_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn kind_aliases() {
        let cli = Cli::parse_from(["attrigraph", "graph", "components", "--kinds", "cert,email"]);
        let Command::Graph(GraphCommand::Components { graph }) = cli.command else {
            panic!()
        };
        assert_eq!(
            graph.kinds,
            [SignalKind::CertFingerprint, SignalKind::DeveloperEmail]
        );
        assert!(
            Cli::try_parse_from(["attrigraph", "graph", "components", "--kinds", "shoe"]).is_err()
        );
    }
}
