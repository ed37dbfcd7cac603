use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::outputs::bug_sample;
use super::{
    digest_file, load_nmt, report_header, ExperimentError, ExperimentReport, Manifest, ReportRow,
    ReportTable, TableKind, TranslationRun, SYSTEM_GENDERED, SYSTEM_NMT, SYSTEM_STANDARD,
};
use crate::corpus::BugRecord;
use crate::genderbias::{bias_stats, evaluable_subset, predict_gender, BiasStats, GenderLexicon};

/// Accuracy figures for one (language, system, output kind).
#[derive(Debug, Clone, PartialEq)]
pub struct BiasRow {
    pub lang: String,
    pub system: String,
    pub output_kind: String,
    pub stats: BiasStats,
}

fn lexicon_path<'a>(
    manifest: &'a Manifest,
    lexicon: Option<&'a Path>,
) -> Result<&'a Path, ExperimentError> {
    lexicon.or(manifest.data.lexicon.as_deref()).ok_or_else(|| {
        ExperimentError::Manifest("no lexicon given (data.lexicon or --lexicon)".into())
    })
}

/// Scores every system on the same evaluable subset per language: the
/// balanced sample, minus defective generations, minus records whose
/// entity the lexicon does not cover. Returns the rows and the footnotes
/// explaining what was left out.
pub fn score_bias_rows(
    manifest: &Manifest,
    run: &TranslationRun,
    lexicon: Option<&Path>,
) -> Result<(Vec<BiasRow>, Vec<String>), ExperimentError> {
    let lexicon = GenderLexicon::load(manifest.resolve(lexicon_path(manifest, lexicon)?))?;
    let (all, sample, rejected) = bug_sample(manifest)?;
    let mut notes = Vec::new();
    if rejected > 0 {
        notes.push(format!(
            "{rejected} coreference rows rejected while loading"
        ));
    }
    let per_stratum = sample.len() / 4;
    notes.push(format!(
        "balanced sample: {per_stratum} records per (gender, stereotype) stratum, {} in total",
        sample.len()
    ));
    let mut rows = Vec::new();

    for lang in &manifest.languages {
        let nmt: Option<BTreeMap<String, String>> = load_nmt(manifest, lang, all.len())?
            .map(|lines| all.iter().map(|r| r.id.clone()).zip(lines).collect());
        let ids: BTreeSet<&str> = sample.iter().map(|r| r.id.as_str()).collect();
        let mut unsp = run.unspecified(lang);
        let mut gendered = run.gendered(lang);
        unsp.retain(|id, _| ids.contains(id.as_str()));
        gendered.retain(|id, _| ids.contains(id.as_str()));
        let complete = evaluable_subset(&unsp, &gendered);

        let defective = sample.len() - complete.len();
        if defective > 0 {
            notes.push(format!(
                "{lang}: {defective} of {} records excluded for defective generations",
                sample.len()
            ));
        }
        let missing: BTreeSet<&str> = sample
            .iter()
            .filter(|r| complete.contains(&r.id) && !lexicon.contains(lang, &r.entity))
            .map(|r| r.entity.as_str())
            .collect();
        let kept: Vec<BugRecord> = sample
            .iter()
            .filter(|r| complete.contains(&r.id) && lexicon.contains(lang, &r.entity))
            .cloned()
            .collect();
        let not_covered = complete.len() - kept.len();
        if not_covered > 0 {
            let names: Vec<&str> = missing.into_iter().collect();
            notes.push(format!(
                "{lang}: {not_covered} records excluded, entity not in lexicon: {}",
                names.join(", ")
            ));
        }
        if kept.is_empty() {
            notes.push(format!("{lang}: no evaluable records"));
            continue;
        }

        let mut score = |system: &str,
                         kind: &str,
                         text: &dyn Fn(&str) -> String|
         -> Result<(), ExperimentError> {
            let predictions = kept
                .iter()
                .map(|r| predict_gender(&r.id, &text(&r.id), &r.entity, &lexicon, lang))
                .collect::<Result<Vec<_>, _>>()?;
            let stats = bias_stats(&predictions, &kept)?;
            rows.push(BiasRow {
                lang: lang.clone(),
                system: system.into(),
                output_kind: kind.into(),
                stats,
            });
            Ok(())
        };
        if let Some(nmt) = &nmt {
            score(SYSTEM_NMT, "unsp", &|id| nmt[id].clone())?;
        }
        score(SYSTEM_STANDARD, "unsp", &|id| {
            unsp[id].clone().unwrap_or_default()
        })?;
        score(SYSTEM_GENDERED, "masc", &|id| {
            gendered[id].masc.clone().unwrap_or_default()
        })?;
        score(SYSTEM_GENDERED, "fem", &|id| {
            gendered[id].fem.clone().unwrap_or_default()
        })?;
    }
    Ok((rows, notes))
}

/// Accuracy, ΔB and unknown rate per language and system; accuracy and
/// unknown rate are reported in percent.
pub fn score_bias(
    manifest: &Manifest,
    run: &TranslationRun,
    lexicon: Option<&Path>,
) -> Result<ExperimentReport, ExperimentError> {
    let mut header = report_header(manifest)?;
    let path = lexicon_path(manifest, lexicon)?;
    let digest = digest_file(manifest, "lexicon", path)?;
    match header.datasets.iter_mut().find(|d| d.name == "lexicon") {
        Some(slot) => *slot = digest,
        None => {
            let at = header
                .datasets
                .iter()
                .position(|d| d.name == "bug")
                .map_or(header.datasets.len(), |i| i + 1);
            header.datasets.insert(at, digest);
        }
    }

    let (rows, notes) = score_bias_rows(manifest, run, lexicon)?;
    let mut table = ReportTable::new(TableKind::Bias);
    for row in rows {
        let s = row.stats;
        table.push(ReportRow::new(
            &row.lang,
            &row.system,
            &row.output_kind,
            vec![
                Some(s.overall.n as f64),
                Some(100.0 * s.overall.accuracy),
                Some(s.delta_b),
                Some(100.0 * s.overall.unknown_rate),
            ],
        ));
    }
    let mut report = ExperimentReport {
        header,
        tables: vec![table],
        footnotes: Vec::new(),
    };
    for note in notes {
        report.add_footnote(note);
    }
    report.add_footnote("accuracy and unknown_rate in percent; delta_b is male-gold minus female-gold accuracy in points");
    Ok(report)
}
