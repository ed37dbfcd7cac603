use super::outputs::flores_pairs;
use super::{
    load_nmt, push_average_rows, report_header, ExperimentError, ExperimentReport, Manifest,
    ReportRow, ReportTable, TableKind, TranslationRun, AVERAGE_LANG, SYSTEM_GENDERED, SYSTEM_NMT,
    SYSTEM_STANDARD,
};
use crate::genderbias::evaluable_subset;
use crate::metrics::{bleu_text, delta_f};

/// BLEU of each output against the single reference, the masculine minus
/// feminine difference per language, and mean rows. The avg `delta_f` is
/// the mean of the per-language differences; the difference of the mean
/// scores is given in a footnote since the two can disagree in the last
/// printed digit.
pub fn score_flores(
    manifest: &Manifest,
    run: &TranslationRun,
) -> Result<ExperimentReport, ExperimentError> {
    let mut report = ExperimentReport {
        header: report_header(manifest)?,
        ..Default::default()
    };
    let mut table = ReportTable::new(TableKind::FloresBleu);
    let tokenization = manifest.metrics.tokenization;
    let cfg = manifest.metrics.bleu();

    for lang in &manifest.languages {
        let pairs = flores_pairs(manifest, lang)?;
        let nmt = load_nmt(manifest, lang, pairs.len())?;
        let unsp = run.unspecified(lang);
        let gendered = run.gendered(lang);
        let evaluable = evaluable_subset(&unsp, &gendered);
        let kept: Vec<usize> = (0..pairs.len())
            .filter(|&i| evaluable.contains(&pairs[i].id))
            .collect();
        if kept.len() < pairs.len() {
            report.add_footnote(format!(
                "{lang}: {} of {} segments excluded for defective generations",
                pairs.len() - kept.len(),
                pairs.len()
            ));
        }
        if kept.is_empty() {
            report.add_footnote(format!("{lang}: no evaluable segments"));
            continue;
        }
        let refs: Vec<&str> = kept.iter().map(|&i| pairs[i].reference.as_str()).collect();
        let column = |f: &dyn Fn(&str) -> String| -> Vec<String> {
            kept.iter().map(|&i| f(&pairs[i].id)).collect()
        };
        let score = |hyps: &[String]| {
            bleu_text(hyps, &[refs.as_slice()], tokenization, &cfg).map(|b| b.score)
        };

        if let Some(lines) = &nmt {
            let hyps: Vec<String> = kept.iter().map(|&i| lines[i].clone()).collect();
            table.push(ReportRow::new(
                lang,
                SYSTEM_NMT,
                "unsp",
                vec![Some(score(&hyps)?)],
            ));
        }
        let unsp_score = score(&column(&|id| unsp[id].clone().unwrap_or_default()))?;
        let masc = score(&column(&|id| gendered[id].masc.clone().unwrap_or_default()))?;
        let fem = score(&column(&|id| gendered[id].fem.clone().unwrap_or_default()))?;
        table.push(ReportRow::new(
            lang,
            SYSTEM_STANDARD,
            "unsp",
            vec![Some(unsp_score)],
        ));
        table.push(ReportRow::new(
            lang,
            SYSTEM_GENDERED,
            "masc",
            vec![Some(masc)],
        ));
        table.push(ReportRow::new(
            lang,
            SYSTEM_GENDERED,
            "fem",
            vec![Some(fem)],
        ));
        table.push(ReportRow::new(
            lang,
            SYSTEM_GENDERED,
            "delta_f",
            vec![Some(delta_f(masc, fem))],
        ));
    }

    if !table.rows.is_empty() {
        push_average_rows(&mut table);
        let avg = |kind: &str| {
            table
                .find(AVERAGE_LANG, SYSTEM_GENDERED, kind)
                .and_then(|r| r.cells[0])
        };
        if let (Some(m), Some(f), Some(d)) = (avg("masc"), avg("fem"), avg("delta_f")) {
            report.add_footnote(format!(
                "avg delta_f is the mean of the per-language differences ({d:.2}); the difference of the averaged masc and fem scores is {:.2}",
                delta_f(m, f)
            ));
        }
    }
    report.tables = vec![table];
    Ok(report)
}
