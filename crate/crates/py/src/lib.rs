//! Python bindings. Structured results cross the boundary as JSON strings.

use std::collections::BTreeSet;
use std::io::Cursor;

use attrigraph_core::apk::{self, ExtractOptions};
use attrigraph_core::graph::{self, AttributionGraph, BetweennessOptions};
use attrigraph_core::ingest::{self, MarketRegistry};
use attrigraph_core::metrics::{self, AvailabilityOptions, CrossMarketOptions, VolatilityOptions};
use attrigraph_core::signal::{self, SignalKind};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(value_error)
}

fn kind(name: &str) -> PyResult<SignalKind> {
    name.parse().map_err(value_error)
}

/// Canonical form of a raw value, or None when it normalizes to nothing.
#[pyfunction]
fn normalize_signal(kind_name: &str, raw: &str) -> PyResult<Option<String>> {
    let s = signal::normalize_signal(kind(kind_name)?, raw).map_err(value_error)?;
    Ok(s.map(|s| s.canonical_value))
}

#[pyfunction]
fn detect_script(text: &str) -> PyResult<String> {
    let v = serde_json::to_value(signal::detect_script(text)).map_err(value_error)?;
    Ok(v.as_str().unwrap_or_default().to_string())
}

#[pyfunction]
fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    signal::levenshtein_similarity(a, b)
}

/// Signals of one APK as a JSON object.
#[pyfunction]
#[pyo3(signature = (data, resolve_resources = false))]
fn extract_apk(data: &[u8], resolve_resources: bool) -> PyResult<String> {
    let s = apk::extract_apk(data, &ExtractOptions { resolve_resources }).map_err(value_error)?;
    to_json(&s)
}

#[pyclass(frozen)]
struct Dataset {
    inner: ingest::Dataset,
    record_errors: Vec<ingest::RecordError>,
}

#[pymethods]
impl Dataset {
    /// Loads market records (JSON lines). `registry` replaces the built-in
    /// market table when given.
    #[staticmethod]
    #[pyo3(signature = (records, registry = None))]
    fn from_records(records: &str, registry: Option<&str>) -> PyResult<Self> {
        let registry = match registry {
            Some(text) => MarketRegistry::from_reader(text.as_bytes()).map_err(value_error)?,
            None => MarketRegistry::default(),
        };
        let out = ingest::load_dataset(Cursor::new(records), &registry).map_err(value_error)?;
        Ok(Dataset {
            inner: out.dataset,
            record_errors: out.errors,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Dataset {
            inner: ingest::Dataset::read_json(text.as_bytes()).map_err(value_error)?,
            record_errors: Vec::new(),
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    /// Attaches extracted APK signals (JSON lines) to the entries.
    fn join(&self, apk_signals: &str) -> PyResult<Self> {
        let signals = ingest::read_apk_signals(Cursor::new(apk_signals)).map_err(value_error)?;
        Ok(Dataset {
            inner: ingest::join_apk_signals(self.inner.clone(), &signals),
            record_errors: self.record_errors.clone(),
        })
    }

    fn record_errors(&self) -> PyResult<String> {
        to_json(&self.record_errors)
    }

    #[getter]
    fn markets(&self) -> Vec<String> {
        self.inner.markets.iter().cloned().collect()
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }

    #[pyo3(signature = (cutoff = None, all_signers = false))]
    fn availability(&self, cutoff: Option<&str>, all_signers: bool) -> PyResult<String> {
        let cutoff = cutoff
            .map(|c| ingest::parse_timestamp(c).map(|(t, _)| t))
            .transpose()
            .map_err(value_error)?;
        let options = AvailabilityOptions {
            cutoff,
            all_signers,
            markets: Vec::new(),
        };
        to_json(&metrics::availability(&self.inner, &options))
    }

    #[pyo3(signature = (scan_intermediate = false))]
    fn volatility(&self, scan_intermediate: bool) -> PyResult<String> {
        to_json(&metrics::volatility(
            &self.inner,
            VolatilityOptions { scan_intermediate },
        ))
    }

    #[pyo3(signature = (cert_equality = false))]
    fn consistency(&self, cert_equality: bool) -> PyResult<String> {
        to_json(&metrics::consistency(
            &self.inner,
            CrossMarketOptions { cert_equality },
        ))
    }

    #[pyo3(signature = (cert_equality = false))]
    fn cross_market(&self, cert_equality: bool) -> PyResult<String> {
        to_json(&metrics::cross_market(
            &self.inner,
            CrossMarketOptions { cert_equality },
        ))
    }

    fn org(&self, market: &str, names: Vec<String>) -> PyResult<String> {
        to_json(&metrics::org_report(&self.inner, market, &names))
    }

    /// Graph over the latest entry of each (market, package).
    #[pyo3(signature = (kinds = None, markets = None))]
    fn graph(&self, kinds: Option<Vec<String>>, markets: Option<Vec<String>>) -> PyResult<Graph> {
        let kinds: BTreeSet<SignalKind> = match kinds {
            Some(names) => names.iter().map(|n| kind(n)).collect::<PyResult<_>>()?,
            None => graph::default_kinds(),
        };
        let scope: Option<BTreeSet<String>> = markets.map(|m| m.into_iter().collect());
        let latest = ingest::latest_entries(self.inner.entries());
        let inner =
            graph::build_graph(latest.values(), &kinds, scope.as_ref()).map_err(value_error)?;
        Ok(Graph { inner })
    }
}

#[pyclass(frozen)]
struct Graph {
    inner: AttributionGraph,
}

#[pymethods]
impl Graph {
    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// Node labels, indexed by node id.
    fn labels(&self) -> Vec<String> {
        self.inner.nodes().iter().map(|n| n.label()).collect()
    }

    /// (signal id, entry id) pairs.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn components(&self) -> PyResult<String> {
        to_json(&graph::connected_components(&self.inner))
    }

    /// Scores indexed by node id; None for nodes in skipped components.
    #[pyo3(signature = (normalized = false, max_component_size = None))]
    fn betweenness(&self, normalized: bool, max_component_size: Option<usize>) -> Vec<Option<f64>> {
        graph::betweenness(
            &self.inner,
            BetweennessOptions {
                normalized,
                max_component_size,
            },
        )
    }

    fn degrees(&self, from_kind: &str, to_kind: &str) -> PyResult<String> {
        let stats = graph::signal_degree_stats(&self.inner, kind(from_kind)?, kind(to_kind)?)
            .map_err(value_error)?;
        to_json(&stats)
    }

    #[pyo3(signature = (top = 10))]
    fn summary(&self, top: usize) -> PyResult<String> {
        let comps = graph::connected_components(&self.inner);
        let scores = graph::betweenness(&self.inner, BetweennessOptions::default());
        to_json(&graph::summarize(&self.inner, &comps, &scores, top))
    }
}

#[pymodule]
fn attrigraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DATASET_FORMAT_VERSION", ingest::DATASET_FORMAT_VERSION)?;
    m.add("REPORT_FORMAT_VERSION", metrics::REPORT_FORMAT_VERSION)?;
    m.add_function(wrap_pyfunction!(normalize_signal, m)?)?;
    m.add_function(wrap_pyfunction!(detect_script, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(extract_apk, m)?)?;
    m.add_class::<Dataset>()?;
    m.add_class::<Graph>()?;
    Ok(())
}
