use serde::{Deserialize, Serialize};

use super::{bleu_text, chrf_multi, BleuConfig, BleuScore, ChrfConfig, MetricError, Tokenization};

/// Segment-aligned corpora for one language.
#[derive(Debug, Clone, Copy)]
pub struct PanelInputs<'a> {
    /// Single-target output; absent when only gendered outputs exist.
    pub unspec: Option<&'a [String]>,
    pub masc_out: Option<&'a [String]>,
    pub fem_out: Option<&'a [String]>,
    pub masc_ref: &'a [String],
    pub fem_ref: &'a [String],
}

/// One output scored against the masculine, the feminine and both
/// references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow<S> {
    pub masc: S,
    pub fem: S,
    pub both: S,
}

/// The reference grid. For the masculine output the `fem` cell is the
/// swapped-reference control, and the other way around for the feminine
/// output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel<S> {
    pub unspec: Option<PanelRow<S>>,
    pub masc: Option<PanelRow<S>>,
    pub fem: Option<PanelRow<S>>,
}

fn grid<S>(
    inputs: &PanelInputs<'_>,
    mut score: impl FnMut(&[String], &[&[String]]) -> Result<S, MetricError>,
) -> Result<Panel<S>, MetricError> {
    let mut row = |out: Option<&[String]>| -> Result<Option<PanelRow<S>>, MetricError> {
        out.map(|hyps| {
            Ok(PanelRow {
                masc: score(hyps, &[inputs.masc_ref])?,
                fem: score(hyps, &[inputs.fem_ref])?,
                both: score(hyps, &[inputs.masc_ref, inputs.fem_ref])?,
            })
        })
        .transpose()
    };
    Ok(Panel {
        unspec: row(inputs.unspec)?,
        masc: row(inputs.masc_out)?,
        fem: row(inputs.fem_out)?,
    })
}

pub fn bleu_panel(
    inputs: &PanelInputs<'_>,
    tokenization: Tokenization,
    cfg: &BleuConfig,
) -> Result<Panel<BleuScore>, MetricError> {
    grid(inputs, |hyps, refs| {
        bleu_text(hyps, refs, tokenization, cfg)
    })
}

pub fn chrf_panel(inputs: &PanelInputs<'_>, cfg: &ChrfConfig) -> Result<Panel<f64>, MetricError> {
    grid(inputs, |hyps, refs| {
        for set in refs {
            if set.len() != hyps.len() {
                return Err(MetricError::LengthMismatch {
                    hyps: hyps.len(),
                    refs: set.len(),
                });
            }
        }
        let per_segment: Vec<Vec<&str>> = (0..hyps.len())
            .map(|i| refs.iter().map(|set| set[i].as_str()).collect())
            .collect();
        chrf_multi(hyps, &per_segment, cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn matched_masculine_is_perfect_and_swap_is_bounded() {
        let masc_ref = strings(&["los niños altos", "estos médicos ricos"]);
        let fem_ref = strings(&["las niñas altas", "estas médicas ricas"]);
        let inputs = PanelInputs {
            unspec: None,
            masc_out: Some(&masc_ref),
            fem_out: Some(&fem_ref),
            masc_ref: &masc_ref,
            fem_ref: &fem_ref,
        };
        let p = bleu_panel(&inputs, Tokenization::Whitespace, &BleuConfig::default()).unwrap();
        assert!(p.unspec.is_none());
        let masc = p.masc.unwrap();
        assert_eq!(masc.masc.score, 100.0);
        assert!(masc.fem.score < 100.0);
        assert_eq!(p.fem.unwrap().fem.score, 100.0);
    }

    #[test]
    fn both_references_dominate_each_single_one() {
        let masc_ref = strings(&["a b c d", "e f g"]);
        let fem_ref = strings(&["a x c d", "e f h"]);
        let hyp = strings(&["a x c q", "e f g h"]);
        let inputs = PanelInputs {
            unspec: Some(&hyp),
            masc_out: None,
            fem_out: None,
            masc_ref: &masc_ref,
            fem_ref: &fem_ref,
        };
        let row = bleu_panel(&inputs, Tokenization::Whitespace, &BleuConfig::default())
            .unwrap()
            .unspec
            .unwrap();
        for n in 0..4 {
            assert!(row.both.matches[n] >= row.masc.matches[n]);
            assert!(row.both.matches[n] >= row.fem.matches[n]);
        }
        let chrf = chrf_panel(&inputs, &ChrfConfig::default())
            .unwrap()
            .unspec
            .unwrap();
        assert!(chrf.both >= chrf.masc.min(chrf.fem));
    }
}
