use std::collections::BTreeMap;

use super::{
    load_nmt, load_pool, push_average_rows, report_header, ExperimentError, ExperimentReport,
    Manifest, ReportRow, ReportTable, TableKind, TranslationRun, SYSTEM_GENDERED, SYSTEM_NMT,
    SYSTEM_STANDARD,
};
use crate::genderbias::evaluable_subset;
use crate::metrics::{bleu_panel, chrf_panel, Panel, PanelInputs, PanelRow};
use crate::prompting::GenerationStatus;

fn row<S>(
    lang: &str,
    system: &str,
    kind: &str,
    cells: &PanelRow<S>,
    value: impl Fn(&S) -> f64,
) -> ReportRow {
    ReportRow::new(
        lang,
        system,
        kind,
        vec![
            Some(value(&cells.masc)),
            Some(value(&cells.fem)),
            Some(value(&cells.both)),
        ],
    )
}

fn push_panel<S>(
    table: &mut ReportTable,
    lang: &str,
    nmt: Option<&Panel<S>>,
    llm: &Panel<S>,
    value: impl Fn(&S) -> f64,
) {
    if let Some(cells) = nmt.and_then(|p| p.unspec.as_ref()) {
        table.push(row(lang, SYSTEM_NMT, "unsp", cells, &value));
    }
    if let Some(cells) = &llm.unspec {
        table.push(row(lang, SYSTEM_STANDARD, "unsp", cells, &value));
    }
    if let Some(cells) = &llm.masc {
        table.push(row(lang, SYSTEM_GENDERED, "masc", cells, &value).with_swapped(1));
    }
    if let Some(cells) = &llm.fem {
        table.push(row(lang, SYSTEM_GENDERED, "fem", cells, &value).with_swapped(0));
    }
}

/// BLEU and chrF panels per language over the evaluable subset, with the
/// swapped-reference cells flagged and a mean row per system.
pub fn score_mhb(
    manifest: &Manifest,
    run: &TranslationRun,
) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport {
        header: report_header(manifest)?,
        ..Default::default()
    };
    let mut bleu = ReportTable::new(TableKind::MhbBleu);
    let mut chrf = ReportTable::new(TableKind::MhbChrf);
    let tokenization = manifest.metrics.tokenization;
    let (bleu_cfg, chrf_cfg) = (manifest.metrics.bleu(), manifest.metrics.chrf());

    for lang in &manifest.languages {
        let (pool, rejected) = load_pool(manifest, lang)?;
        if rejected > 0 {
            report.add_footnote(format!(
                "{lang}: {rejected} reference rows rejected while loading"
            ));
        }
        let nmt_lines = load_nmt(manifest, lang, pool.len())?;
        let nmt: Option<BTreeMap<&str, &str>> = nmt_lines.as_ref().map(|lines| {
            pool.iter()
                .map(|e| e.id.as_str())
                .zip(lines.iter().map(String::as_str))
                .collect()
        });

        let entries: Vec<_> = pool.iter().filter(|e| e.has_both_genders()).collect();
        let mut unsp = run.unspecified(lang);
        let mut gendered = run.gendered(lang);
        unsp.retain(|id, _| entries.iter().any(|e| &e.id == id));
        gendered.retain(|id, _| entries.iter().any(|e| &e.id == id));
        let evaluable = evaluable_subset(&unsp, &gendered);

        let excluded = entries.len() - evaluable.len();
        if excluded > 0 {
            let no_unsp = entries
                .iter()
                .filter(|e| unsp.get(&e.id).map_or(true, Option::is_none))
                .count();
            let status = |s: GenerationStatus| {
                entries
                    .iter()
                    .filter(|e| {
                        gendered
                            .get(&e.id)
                            .map_or(s == GenerationStatus::Empty, |g| g.status == s)
                    })
                    .count()
            };
            report.add_footnote(format!(
                "{lang}: {excluded} of {} segments excluded (no unspecified output: {no_unsp}; partial gendered output: {}; empty gendered output: {})",
                entries.len(),
                status(GenerationStatus::Partial),
                status(GenerationStatus::Empty),
            ));
        }
        if evaluable.is_empty() {
            report.add_footnote(format!("{lang}: no evaluable segments"));
            continue;
        }

        let kept: Vec<_> = entries
            .iter()
            .filter(|e| evaluable.contains(&e.id))
            .collect();
        let column =
            |f: &dyn Fn(&str) -> String| -> Vec<String> { kept.iter().map(|e| f(&e.id)).collect() };
        let masc_ref = column(&|id| {
            pool.iter()
                .find(|e| e.id == id)
                .and_then(|e| e.masc.clone())
                .unwrap_or_default()
        });
        let fem_ref = column(&|id| {
            pool.iter()
                .find(|e| e.id == id)
                .and_then(|e| e.fem.clone())
                .unwrap_or_default()
        });
        let unsp_out = column(&|id| unsp[id].clone().unwrap_or_default());
        let masc_out = column(&|id| gendered[id].masc.clone().unwrap_or_default());
        let fem_out = column(&|id| gendered[id].fem.clone().unwrap_or_default());

        let llm = PanelInputs {
            unspec: Some(&unsp_out),
            masc_out: Some(&masc_out),
            fem_out: Some(&fem_out),
            masc_ref: &masc_ref,
            fem_ref: &fem_ref,
        };
        let nmt_out = nmt.as_ref().map(|m| column(&|id| m[id].to_string()));
        let nmt_inputs = nmt_out.as_ref().map(|out| PanelInputs {
            unspec: Some(out),
            masc_out: None,
            fem_out: None,
            masc_ref: &masc_ref,
            fem_ref: &fem_ref,
        });

        let nmt_bleu = nmt_inputs
            .as_ref()
            .map(|i| bleu_panel(i, tokenization, &bleu_cfg))
            .transpose()?;
        push_panel(
            &mut bleu,
            lang,
            nmt_bleu.as_ref(),
            &bleu_panel(&llm, tokenization, &bleu_cfg)?,
            |s| s.score,
        );
        let nmt_chrf = nmt_inputs
            .as_ref()
            .map(|i| chrf_panel(i, &chrf_cfg))
            .transpose()?;
        push_panel(
            &mut chrf,
            lang,
            nmt_chrf.as_ref(),
            &chrf_panel(&llm, &chrf_cfg)?,
            |s| *s,
        );
    }

    if !bleu.rows.is_empty() {
        push_average_rows(&mut bleu);
        push_average_rows(&mut chrf);
        report.add_footnote(
            "Parenthesized cells score a gendered output against the opposite-gender reference; avg rows are unweighted means over languages.",
        );
    }
    report.tables = vec![bleu, chrf];
    Ok(report)
}
