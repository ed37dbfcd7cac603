use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_pool, read_file, Experiment, ExperimentError, Manifest};
use crate::backends::{complete_all, CompletionBackend, CompletionRequest};
use crate::corpus::{self, BugRecord, MhbEntry};
use crate::prompting::{
    parse_gendered_output, parse_standard_output, render_gender_specific, render_standard,
    select_ices, GenderedTranslation, GenerationStatus, PromptConfig, PromptQuery, TemplateKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    /// Standard template, gender left to the model.
    Unsp,
    Masc,
    Fem,
}

impl OutputKind {
    pub const ALL: [OutputKind; 3] = [OutputKind::Unsp, OutputKind::Masc, OutputKind::Fem];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::Unsp => "unsp",
            OutputKind::Masc => "masc",
            OutputKind::Fem => "fem",
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of `outputs/{lang}.jsonl`. Masculine and feminine records carry
/// the status of the generation they were parsed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub id: String,
    pub kind: OutputKind,
    pub text: String,
    pub status: GenerationStatus,
}

/// Parsed outputs per language, in query order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TranslationRun {
    pub outputs: BTreeMap<String, Vec<OutputRecord>>,
}

impl TranslationRun {
    pub fn path_for(dir: &Path, lang: &str) -> PathBuf {
        dir.join("outputs").join(format!("{lang}.jsonl"))
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| ExperimentError::Io { path, source }
        };
        let outputs_dir = dir.join("outputs");
        std::fs::create_dir_all(&outputs_dir).map_err(io(&outputs_dir))?;
        let mut written = Vec::new();
        for (lang, records) in &self.outputs {
            let path = TranslationRun::path_for(dir, lang);
            let mut text = String::new();
            for record in records {
                text.push_str(&serde_json::to_string(record).expect("output record serializes"));
                text.push('\n');
            }
            std::fs::write(&path, text).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn parse(text: &str, path: &str) -> Result<Vec<OutputRecord>, ExperimentError> {
        let mut records = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| ExperimentError::Outputs {
                path: path.to_string(),
                message,
            };
            let record: OutputRecord =
                serde_json::from_str(line).map_err(|e| bad(format!("line {}: {e}", i + 1)))?;
            if !seen.insert((record.id.clone(), record.kind)) {
                return Err(bad(format!(
                    "line {}: repeated {} output for `{}`",
                    i + 1,
                    record.kind,
                    record.id
                )));
            }
            records.push(record);
        }
        Ok(records)
    }

    pub fn read(dir: &Path, langs: &[String]) -> Result<TranslationRun, ExperimentError> {
        let mut run = TranslationRun::default();
        for lang in langs {
            let path = TranslationRun::path_for(dir, lang);
            let records = TranslationRun::parse(&read_file(&path)?, &path.display().to_string())?;
            run.outputs.insert(lang.clone(), records);
        }
        Ok(run)
    }

    /// Reads the outputs that `translate` wrote for this manifest.
    pub fn read_for(manifest: &Manifest) -> Result<TranslationRun, ExperimentError> {
        TranslationRun::read(&manifest.output_dir(), &manifest.languages)
    }

    fn records(&self, lang: &str, kind: OutputKind) -> impl Iterator<Item = &OutputRecord> {
        self.outputs
            .get(lang)
            .into_iter()
            .flatten()
            .filter(move |r| r.kind == kind)
    }

    /// Standard-template outputs; blank means no output.
    pub fn unspecified(&self, lang: &str) -> BTreeMap<String, Option<String>> {
        self.records(lang, OutputKind::Unsp)
            .map(|r| {
                (
                    r.id.clone(),
                    Some(r.text.clone()).filter(|t| !t.trim().is_empty()),
                )
            })
            .collect()
    }

    pub fn gendered(&self, lang: &str) -> BTreeMap<String, GenderedTranslation> {
        let mut sides: BTreeMap<String, (Option<String>, Option<String>)> = BTreeMap::new();
        for r in self.records(lang, OutputKind::Masc) {
            sides.entry(r.id.clone()).or_default().0 = Some(r.text.clone());
        }
        for r in self.records(lang, OutputKind::Fem) {
            sides.entry(r.id.clone()).or_default().1 = Some(r.text.clone());
        }
        sides
            .into_iter()
            .map(|(id, (m, f))| (id, GenderedTranslation::new(m, f)))
            .collect()
    }
}

/// All loaded records, the ones picked for the bias experiment (file
/// order), and the number of rejected rows.
pub(crate) fn bug_sample(
    manifest: &Manifest,
) -> Result<(Vec<BugRecord>, Vec<BugRecord>, usize), ExperimentError> {
    let path = manifest
        .data
        .bug
        .as_ref()
        .ok_or_else(|| ExperimentError::Manifest("bug-bias needs data.bug".into()))?;
    let sampling = manifest
        .sampling
        .as_ref()
        .ok_or_else(|| ExperimentError::Manifest("bug-bias needs a [sampling] section".into()))?;
    let loaded = corpus::load_bug(manifest.resolve(path))?;
    let sample = corpus::sample_balanced_subsets_sized(
        &loaded.items,
        sampling.seed,
        sampling.n_per_stratum,
    )?;
    let picked: std::collections::BTreeSet<&str> = sample.ids().collect();
    let records = loaded
        .items
        .iter()
        .filter(|r| picked.contains(r.id.as_str()))
        .cloned()
        .collect();
    Ok((loaded.items.clone(), records, loaded.rejected.len()))
}

pub(crate) fn flores_pairs(
    manifest: &Manifest,
    lang: &str,
) -> Result<Vec<corpus::ParallelPair>, ExperimentError> {
    let source =
        manifest.data.flores_source.as_ref().ok_or_else(|| {
            ExperimentError::Manifest("flores-delta needs data.flores_source".into())
        })?;
    let reference = manifest.data.flores_references.get(lang).ok_or_else(|| {
        ExperimentError::Manifest(format!("no data.flores_references entry for `{lang}`"))
    })?;
    Ok(corpus::load_parallel(
        manifest.resolve(source),
        manifest.resolve(reference),
        lang,
    )?)
}

/// The sentences sent to the backend for `lang`, as (output id, prompt query).
/// Queries from outside the reference set get a namespaced prompt id so they
/// can never collide with an example's id.
pub(crate) fn queries(
    manifest: &Manifest,
    lang: &str,
    pool: &[MhbEntry],
) -> Result<Vec<(String, PromptQuery)>, ExperimentError> {
    Ok(match manifest.experiment {
        Experiment::MhbPanel => pool
            .iter()
            .filter(|e| e.has_both_genders())
            .map(|e| (e.id.clone(), PromptQuery::from(e)))
            .collect(),
        Experiment::BugBias => bug_sample(manifest)?
            .1
            .into_iter()
            .map(|r| {
                let query = PromptQuery {
                    id: format!("bug:{}", r.id),
                    source: r.source,
                    template_key: None,
                };
                (r.id, query)
            })
            .collect(),
        Experiment::FloresDelta => flores_pairs(manifest, lang)?
            .into_iter()
            .map(|p| {
                let query = PromptQuery {
                    id: format!("flores:{}", p.id),
                    source: p.source,
                    template_key: None,
                };
                (p.id, query)
            })
            .collect(),
    })
}

fn request_key(lang: &str, id: &str, kind: TemplateKind) -> String {
    let kind = match kind {
        TemplateKind::Standard => "standard",
        TemplateKind::GenderSpecific => "gendered",
    };
    format!("{lang}\u{1f}{id}\u{1f}{kind}")
}

/// Prompts every query of the manifest with both templates and parses the
/// completions. Any backend failure aborts the run, naming the query.
pub fn translate<B: CompletionBackend + ?Sized>(
    manifest: &Manifest,
    backend: &B,
) -> Result<TranslationRun, ExperimentError> {
    let templates = manifest.templates()?;
    let prompt = &manifest.prompt;
    let mut requests = Vec::new();
    let mut plan: Vec<(String, Vec<String>, PromptConfig, PromptConfig)> = Vec::new();

    for lang in &manifest.languages {
        let (pool, _) = load_pool(manifest, lang)?;
        let standard = manifest.prompt_config(lang, &templates, TemplateKind::Standard);
        let gendered = manifest.prompt_config(lang, &templates, TemplateKind::GenderSpecific);
        let mut ids = Vec::new();
        for (id, query) in queries(manifest, lang, &pool)? {
            for config in [&standard, &gendered] {
                let ices = select_ices(&pool, &query, config)?;
                let rendered = match config.template_kind {
                    TemplateKind::Standard => render_standard(&ices, &query, config)?,
                    TemplateKind::GenderSpecific => render_gender_specific(&ices, &query, config)?,
                };
                let request = CompletionRequest {
                    prompt: rendered.text,
                    max_tokens: prompt.max_tokens,
                    temperature: prompt.temperature,
                    stop: prompt.stop.clone(),
                };
                requests.push((request_key(lang, &id, config.template_kind), request));
            }
            ids.push(id);
        }
        plan.push((lang.clone(), ids, standard, gendered));
    }

    let mut results = complete_all(backend, &requests, manifest.backend.parallelism);
    let mut take = |lang: &str, id: &str, kind: TemplateKind| {
        let outcome = results
            .remove(&request_key(lang, id, kind))
            .expect("every planned request has a result");
        outcome
            .map(|r| r.text)
            .map_err(|source| ExperimentError::Query {
                query: format!(
                    "{lang}/{id} ({})",
                    if kind == TemplateKind::Standard {
                        "standard"
                    } else {
                        "gendered"
                    }
                ),
                source,
            })
    };

    let mut run = TranslationRun::default();
    for (lang, ids, standard, gendered) in plan {
        let mut records = Vec::with_capacity(ids.len() * 3);
        for id in ids {
            let unsp = parse_standard_output(&take(&lang, &id, TemplateKind::Standard)?, &standard);
            let pair =
                parse_gendered_output(&take(&lang, &id, TemplateKind::GenderSpecific)?, &gendered);
            records.push(OutputRecord {
                id: id.clone(),
                kind: OutputKind::Unsp,
                status: if unsp.is_some() {
                    GenerationStatus::Complete
                } else {
                    GenerationStatus::Empty
                },
                text: unsp.unwrap_or_default(),
            });
            for (kind, text) in [(OutputKind::Masc, pair.masc), (OutputKind::Fem, pair.fem)] {
                records.push(OutputRecord {
                    id: id.clone(),
                    kind,
                    text: text.unwrap_or_default(),
                    status: pair.status,
                });
            }
        }
        run.outputs.insert(lang, records);
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_and_views() {
        let records = vec![
            OutputRecord {
                id: "a".into(),
                kind: OutputKind::Unsp,
                text: "x".into(),
                status: GenerationStatus::Complete,
            },
            OutputRecord {
                id: "a".into(),
                kind: OutputKind::Masc,
                text: "m".into(),
                status: GenerationStatus::Partial,
            },
            OutputRecord {
                id: "a".into(),
                kind: OutputKind::Fem,
                text: "".into(),
                status: GenerationStatus::Partial,
            },
        ];
        let run = TranslationRun {
            outputs: [("spa".to_string(), records.clone())].into(),
        };
        let dir = tempfile::tempdir().unwrap();
        run.write(dir.path()).unwrap();
        let back = TranslationRun::read(dir.path(), &["spa".into()]).unwrap();
        assert_eq!(back, run);
        let g = &back.gendered("spa")["a"];
        assert_eq!(g.status, GenerationStatus::Partial);
        assert_eq!(back.unspecified("spa")["a"].as_deref(), Some("x"));
    }

    #[test]
    fn repeated_outputs_rejected() {
        let line = r#"{"id":"a","kind":"unsp","text":"x","status":"complete"}"#;
        assert!(TranslationRun::parse(&format!("{line}\n{line}\n"), "f").is_err());
        assert!(TranslationRun::parse(
            r#"{"id":"a","kind":"other","text":"x","status":"complete"}"#,
            "f"
        )
        .is_err());
    }
}
