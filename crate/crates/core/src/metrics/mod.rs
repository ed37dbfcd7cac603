//! Corpus-level translation metrics.
//!
//! Everything here is pure: identical inputs give bit-identical outputs, and
//! segment order only matters for alignment between hypotheses and
//! references. Scores are kept at full precision; rounding happens when a
//! report is emitted.

mod bleu;
mod chrf;
mod panel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bleu::{corpus_bleu, ngram_counts, BleuConfig, BleuScore};
pub use chrf::{chrf, chrf_multi, ChrfConfig};
pub use panel::{bleu_panel, chrf_panel, Panel, PanelInputs, PanelRow};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("{hyps} hypotheses but {refs} reference sets")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("segment {segment} has no reference")]
    EmptyReference { segment: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// How sentences are split into BLEU tokens.
///
/// `Whitespace` splits on any Unicode whitespace. `Char` makes every
/// non-whitespace character a token. `Pretokenized` splits on ASCII spaces
/// only, for text already segmented by an external subword model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenization {
    #[default]
    Whitespace,
    Char,
    Pretokenized,
}

impl Tokenization {
    pub fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        match self {
            Tokenization::Whitespace => text.split_whitespace().collect(),
            Tokenization::Pretokenized => text.split(' ').filter(|t| !t.is_empty()).collect(),
            Tokenization::Char => text
                .char_indices()
                .filter(|(_, c)| !c.is_whitespace())
                .map(|(i, c)| &text[i..i + c.len_utf8()])
                .collect(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Tokenization::Whitespace => "whitespace",
            Tokenization::Char => "char",
            Tokenization::Pretokenized => "pretokenized",
        }
    }
}

impl fmt::Display for Tokenization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tokenization {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" => Ok(Tokenization::Whitespace),
            "char" => Ok(Tokenization::Char),
            "pretokenized" => Ok(Tokenization::Pretokenized),
            other => Err(MetricError::InvalidConfig(format!(
                "unknown tokenization `{other}`"
            ))),
        }
    }
}

/// Tokenizes a corpus of hypotheses against one or more parallel reference
/// corpora and scores it with [`corpus_bleu`].
pub fn bleu_text<S: AsRef<str>, R: AsRef<str>>(
    hyps: &[S],
    ref_sets: &[&[R]],
    tokenization: Tokenization,
    cfg: &BleuConfig,
) -> Result<BleuScore, MetricError> {
    for set in ref_sets {
        if set.len() != hyps.len() {
            return Err(MetricError::LengthMismatch {
                hyps: hyps.len(),
                refs: set.len(),
            });
        }
    }
    let hyp_tokens: Vec<Vec<&str>> = hyps
        .iter()
        .map(|h| tokenization.tokenize(h.as_ref()))
        .collect();
    let ref_tokens: Vec<Vec<Vec<&str>>> = (0..hyps.len())
        .map(|i| {
            ref_sets
                .iter()
                .map(|set| tokenization.tokenize(set[i].as_ref()))
                .collect()
        })
        .collect();
    corpus_bleu(&hyp_tokens, &ref_tokens, cfg)
}

/// Signed gap between masculine-output and feminine-output scores.
pub fn delta_f(masc_score: f64, fem_score: f64) -> f64 {
    masc_score - fem_score
}
