use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    /// Added to matches and totals of orders 2 and up.
    pub smoothing_k: f64,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            smoothing_k: 1.0,
        }
    }
}

impl BleuConfig {
    fn validate(&self) -> Result<(), MetricError> {
        if self.max_order == 0 {
            return Err(MetricError::InvalidConfig(
                "max_order must be at least 1".into(),
            ));
        }
        if !(self.smoothing_k >= 0.0 && self.smoothing_k.is_finite()) {
            return Err(MetricError::InvalidConfig(
                "smoothing_k must be a finite non-negative number".into(),
            ));
        }
        Ok(())
    }
}

/// Corpus BLEU with its sufficient statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// In `[0, 100]`.
    pub score: f64,
    pub precisions: Vec<f64>,
    /// 1 when the hypotheses are at least as long as the effective reference
    /// length; 0 for an all-empty hypothesis corpus.
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    /// Clipped n-gram matches per order, before smoothing.
    pub matches: Vec<u64>,
    /// Hypothesis n-gram counts per order, before smoothing.
    pub totals: Vec<u64>,
}

/// Sliding-window n-gram multiset.
pub fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Reference length closest to `hyp_len`; ties go to the shorter one.
fn closest_ref_len<T>(hyp_len: usize, refs: &[Vec<T>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

/// Multi-reference corpus BLEU.
///
/// Each hypothesis n-gram is clipped by its largest count in any of the
/// segment's references; matches and totals are summed over the corpus.
/// Order 1 precision is `m/l`, higher orders use `(m + k)/(l + k)`. The
/// brevity penalty compares the hypothesis length with the sum of the
/// per-segment closest reference lengths.
pub fn corpus_bleu<T: Eq + Hash>(
    hyps: &[Vec<T>],
    refs: &[Vec<Vec<T>>],
    cfg: &BleuConfig,
) -> Result<BleuScore, MetricError> {
    cfg.validate()?;
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let orders = cfg.max_order;
    let mut matches = vec![0u64; orders];
    let mut totals = vec![0u64; orders];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;

    for (segment, (hyp, seg_refs)) in hyps.iter().zip(refs).enumerate() {
        if seg_refs.is_empty() {
            return Err(MetricError::EmptyReference { segment });
        }
        hyp_len += hyp.len();
        ref_len += closest_ref_len(hyp.len(), seg_refs);
        for n in 1..=orders {
            let hyp_counts = ngram_counts(hyp, n);
            if hyp_counts.is_empty() {
                continue;
            }
            let mut max_ref: HashMap<&[T], usize> = HashMap::new();
            for r in seg_refs {
                for (gram, count) in ngram_counts(r, n) {
                    let slot = max_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in &hyp_counts {
                let clip = max_ref.get(gram).copied().unwrap_or(0);
                matches[n - 1] += (*count).min(clip) as u64;
            }
            totals[n - 1] += (hyp.len() + 1 - n) as u64;
        }
    }
    Ok(score_from_stats(matches, totals, hyp_len, ref_len, cfg))
}

fn score_from_stats(
    matches: Vec<u64>,
    totals: Vec<u64>,
    hyp_len: usize,
    ref_len: usize,
    cfg: &BleuConfig,
) -> BleuScore {
    let k = cfg.smoothing_k;
    let precisions: Vec<f64> = matches
        .iter()
        .zip(&totals)
        .enumerate()
        .map(|(i, (&m, &l))| {
            let (m, l) = if i == 0 {
                (m as f64, l as f64)
            } else {
                (m as f64 + k, l as f64 + k)
            };
            if l > 0.0 {
                m / l
            } else {
                0.0
            }
        })
        .collect();

    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };

    let score = if hyp_len == 0 || precisions.iter().any(|&p| p <= 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };

    BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
        matches,
        totals,
    }
}
