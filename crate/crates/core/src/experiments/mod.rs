//! Manifest-driven experiment runs.
//!
//! A run is two steps: [`translate`] sends every query of the manifest's
//! dataset through a backend with both prompt templates and keeps the parsed
//! outputs, then one of [`score_mhb`], [`score_bias`] or [`score_flores`]
//! turns those outputs into an [`ExperimentReport`].

mod bias;
mod flores;
mod manifest;
mod mhb;
mod outputs;
mod report;

use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::backends::{
    BackendError, EndpointConfig, HttpBackend, ReplayBackend, ReplayMode, ReplayStore,
};
use crate::corpus::{self, CorpusError, MhbEntry};
use crate::genderbias::BiasError;
use crate::metrics::MetricError;
use crate::prompting::PromptError;

pub use bias::{score_bias, score_bias_rows, BiasRow};
pub use flores::score_flores;
pub use manifest::{
    default_language_name, BackendSection, DataSection, Experiment, Manifest, MetricsSection,
    PromptSection, SamplingSection,
};
pub use mhb::score_mhb;
pub use outputs::{translate, OutputKind, OutputRecord, TranslationRun};
pub use report::{
    Better, CellFormat, Column, DatasetDigest, ExperimentReport, Layout, ReportFormat,
    ReportHeader, ReportRow, ReportTable, TableKind,
};

pub const SYSTEM_NMT: &str = "ingested-nmt";
pub const SYSTEM_STANDARD: &str = "llm-standard";
pub const SYSTEM_GENDERED: &str = "llm-gendered";
/// Language label of the cross-language mean rows.
pub const AVERAGE_LANG: &str = "avg";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("query {query}: {source}")]
    Query {
        query: String,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error("{path}: {message}")]
    Outputs { path: String, message: String },
    #[error("report: {0}")]
    Report(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn read_file(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// The manifest's backend: a replay store, wrapped around the HTTP endpoint
/// when the store is recording.
pub fn open_backend(manifest: &Manifest) -> Result<ReplayBackend, ExperimentError> {
    let section = &manifest.backend;
    let store = Arc::new(ReplayStore::open(
        manifest.resolve(&section.replay_store),
        section.mode,
    )?);
    let backend = ReplayBackend::new(section.id.clone(), store);
    if section.mode == ReplayMode::Replay {
        return Ok(backend);
    }
    let endpoint = section
        .endpoint
        .as_ref()
        .ok_or_else(|| ExperimentError::Manifest("recording modes need backend.endpoint".into()))?;
    let inner = HttpBackend::new(EndpointConfig::load(manifest.resolve(endpoint))?)?;
    Ok(backend.with_inner(Arc::new(inner)))
}

/// MHB entries of one language; rejected rows are reported, not fatal.
pub(crate) fn load_pool(
    manifest: &Manifest,
    lang: &str,
) -> Result<(Vec<MhbEntry>, usize), ExperimentError> {
    let loaded = corpus::load_mhb(manifest.resolve(&manifest.data.mhb), lang)?;
    Ok((loaded.items, loaded.rejected.len()))
}

/// One precomputed output per line, aligned with `expected` queries.
pub(crate) fn load_nmt(
    manifest: &Manifest,
    lang: &str,
    expected: usize,
) -> Result<Option<Vec<String>>, ExperimentError> {
    let Some(path) = manifest.data.nmt_outputs.get(lang) else {
        return Ok(None);
    };
    let path = manifest.resolve(path);
    let text = read_file(&path)?;
    let lines: Vec<String> = corpus::split_lines(&text)
        .into_iter()
        .map(|l| l.trim().to_string())
        .collect();
    if lines.len() != expected {
        return Err(ExperimentError::Outputs {
            path: path.display().to_string(),
            message: format!("{} lines for {expected} segments", lines.len()),
        });
    }
    Ok(Some(lines))
}

pub(crate) fn digest_file(
    manifest: &Manifest,
    name: &str,
    path: &Path,
) -> Result<DatasetDigest, ExperimentError> {
    let resolved = manifest.resolve(path);
    let bytes = std::fs::read(&resolved).map_err(|source| ExperimentError::Io {
        path: resolved.display().to_string(),
        source,
    })?;
    Ok(DatasetDigest {
        name: name.to_string(),
        path: path.display().to_string(),
        sha256: crate::sha256_hex(bytes),
    })
}

/// Header shared by all reports: the manifest, the backend and a digest of
/// every file the numbers depend on.
pub(crate) fn report_header(manifest: &Manifest) -> Result<ReportHeader, ExperimentError> {
    let data = &manifest.data;
    let mut datasets = vec![digest_file(manifest, "mhb", &data.mhb)?];
    match manifest.experiment {
        Experiment::MhbPanel => {}
        Experiment::BugBias => {
            if let Some(bug) = &data.bug {
                datasets.push(digest_file(manifest, "bug", bug)?);
            }
            if let Some(lexicon) = &data.lexicon {
                datasets.push(digest_file(manifest, "lexicon", lexicon)?);
            }
        }
        Experiment::FloresDelta => {
            if let Some(source) = &data.flores_source {
                datasets.push(digest_file(manifest, "flores-source", source)?);
            }
            for lang in &manifest.languages {
                if let Some(path) = data.flores_references.get(lang) {
                    datasets.push(digest_file(
                        manifest,
                        &format!("flores-reference:{lang}"),
                        path,
                    )?);
                }
            }
        }
    }
    for lang in &manifest.languages {
        if let Some(path) = data.nmt_outputs.get(lang) {
            datasets.push(digest_file(manifest, &format!("nmt-outputs:{lang}"), path)?);
        }
    }
    if let Some(templates) = &manifest.prompt.templates {
        datasets.push(digest_file(manifest, "templates", templates)?);
    }
    let store = &manifest.backend.replay_store;
    if manifest.resolve(store).exists() {
        datasets.push(digest_file(manifest, "replay-store", store)?);
    }
    Ok(ReportHeader {
        experiment: manifest.experiment.as_str().to_string(),
        manifest_digest: manifest.digest(),
        backend_id: manifest.backend.id.clone(),
        tokenization: manifest.metrics.tokenization.as_str().to_string(),
        datasets,
    })
}

/// Mean of the values that are present; `None` when none are.
pub(crate) fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Appends one `avg` row per (system, output kind) that occurs, averaging
/// each column over the languages where it is present.
pub(crate) fn push_average_rows(table: &mut ReportTable) {
    let mut keys: Vec<(String, String)> = Vec::new();
    for row in &table.rows {
        let key = (row.system.clone(), row.output_kind.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let width = table.kind.columns().len();
    for (system, kind) in keys {
        let group: Vec<&ReportRow> = table
            .rows
            .iter()
            .filter(|r| r.system == system && r.output_kind == kind)
            .collect();
        let cells = (0..width)
            .map(|j| mean(group.iter().map(|r| r.cells[j])))
            .collect();
        let mut row = ReportRow::new(AVERAGE_LANG, &system, &kind, cells);
        row.swapped = (0..width)
            .map(|j| group.iter().any(|r| r.swapped[j]))
            .collect();
        table.rows.push(row);
    }
}

fn check_experiment(manifest: &Manifest, expected: Experiment) -> Result<(), ExperimentError> {
    if manifest.experiment != expected {
        return Err(ExperimentError::Manifest(format!(
            "manifest describes `{}`, not `{}`",
            manifest.experiment, expected
        )));
    }
    Ok(())
}

/// Translation and scoring in one go, against the manifest's own backend.
pub fn run_mhb_panel(manifest: &Manifest) -> Result<ExperimentReport, ExperimentError> {
    check_experiment(manifest, Experiment::MhbPanel)?;
    let run = translate(manifest, &open_backend(manifest)?)?;
    score_mhb(manifest, &run)
}

pub fn run_bug_bias(manifest: &Manifest) -> Result<ExperimentReport, ExperimentError> {
    check_experiment(manifest, Experiment::BugBias)?;
    let run = translate(manifest, &open_backend(manifest)?)?;
    score_bias(manifest, &run, None)
}

pub fn run_flores_delta(manifest: &Manifest) -> Result<ExperimentReport, ExperimentError> {
    check_experiment(manifest, Experiment::FloresDelta)?;
    let run = translate(manifest, &open_backend(manifest)?)?;
    score_flores(manifest, &run)
}
