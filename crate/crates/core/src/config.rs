//! Resolved settings for one pipeline run. Written next to the outputs so a
//! run can be repeated from its config and inputs.

use std::collections::BTreeSet;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::graph::DEFAULT_GRAPH_KINDS;
use crate::signal::SignalKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub apk_paths: Vec<PathBuf>,
    pub entries_path: Option<PathBuf>,
    pub apk_signals_path: Option<PathBuf>,
    pub market_registry: Option<PathBuf>,
    pub kinds: BTreeSet<SignalKind>,
    /// Empty means every market.
    pub markets: BTreeSet<String>,
    pub cutoff: Option<DateTime<Utc>>,
    pub output_dir: PathBuf,
    pub formats: BTreeSet<OutputFormat>,
    pub seed: u64,
    pub resolve_resources: bool,
    pub all_signers: bool,
    pub scan_intermediate: bool,
    pub cert_equality: bool,
    pub top: usize,
    pub org_names: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            apk_paths: Vec::new(),
            entries_path: None,
            apk_signals_path: None,
            market_registry: None,
            kinds: DEFAULT_GRAPH_KINDS.into_iter().collect(),
            markets: BTreeSet::new(),
            cutoff: None,
            output_dir: PathBuf::from("."),
            formats: [OutputFormat::Json, OutputFormat::Csv].into(),
            seed: 0,
            resolve_resources: false,
            all_signers: false,
            scan_intermediate: false,
            cert_equality: false,
            top: 10,
            org_names: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
