use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub char_order: usize,
    /// Recall weight; 2 weighs recall twice as much as precision.
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            char_order: 6,
            beta: 2.0,
        }
    }
}

impl ChrfConfig {
    fn validate(&self) -> Result<(), MetricError> {
        if self.char_order == 0 {
            return Err(MetricError::InvalidConfig(
                "char_order must be at least 1".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(MetricError::InvalidConfig("beta must be positive".into()));
        }
        Ok(())
    }
}

/// Per-order (hypothesis total, reference total, matches).
type OrderStats = Vec<[u64; 3]>;

fn stripped(s: &str) -> Vec<char> {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

fn counts(chars: &[char], n: usize) -> HashMap<&[char], u64> {
    let mut out = HashMap::new();
    for gram in chars.windows(n) {
        *out.entry(gram).or_insert(0) += 1;
    }
    out
}

fn segment_stats(hyp: &[char], reference: &[char], orders: usize) -> OrderStats {
    (1..=orders)
        .map(|n| {
            let h = counts(hyp, n);
            let r = counts(reference, n);
            let matched = h
                .iter()
                .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
                .sum();
            [h.values().sum(), r.values().sum(), matched]
        })
        .collect()
}

fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom > 0.0 {
        (1.0 + b2) * precision * recall / denom
    } else {
        0.0
    }
}

/// Macro average of per-order F-scores, scaled to `[0, 100]`. Orders with
/// no n-grams on either side carry no evidence and are left out; an order
/// with n-grams on one side only scores 0.
fn score(stats: &OrderStats, beta: f64) -> f64 {
    let mut sum = 0.0;
    let mut counted = 0usize;
    for &[hyp, reference, matched] in stats {
        if hyp == 0 && reference == 0 {
            continue;
        }
        counted += 1;
        let precision = if hyp > 0 {
            matched as f64 / hyp as f64
        } else {
            0.0
        };
        let recall = if reference > 0 {
            matched as f64 / reference as f64
        } else {
            0.0
        };
        sum += f_beta(precision, recall, beta);
    }
    if counted == 0 {
        0.0
    } else {
        100.0 * sum / counted as f64
    }
}

/// Corpus chrF against a single reference per segment.
pub fn chrf<H: AsRef<str>, R: AsRef<str>>(
    hyps: &[H],
    refs: &[R],
    cfg: &ChrfConfig,
) -> Result<f64, MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    let sets: Vec<Vec<&str>> = refs.iter().map(|r| vec![r.as_ref()]).collect();
    chrf_multi(hyps, &sets, cfg)
}

/// Corpus chrF with several references per segment. Each segment
/// contributes the statistics of the reference it scores best against
/// (first one on ties).
pub fn chrf_multi<H: AsRef<str>, R: AsRef<str>>(
    hyps: &[H],
    refs: &[Vec<R>],
    cfg: &ChrfConfig,
) -> Result<f64, MetricError> {
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
    let mut total: OrderStats = vec![[0; 3]; cfg.char_order];
    for (segment, (hyp, seg_refs)) in hyps.iter().zip(refs).enumerate() {
        let hyp = stripped(hyp.as_ref());
        let mut best: Option<(f64, OrderStats)> = None;
        for r in seg_refs {
            let stats = segment_stats(&hyp, &stripped(r.as_ref()), cfg.char_order);
            let s = score(&stats, cfg.beta);
            if best.as_ref().map_or(true, |(b, _)| s > *b) {
                best = Some((s, stats));
            }
        }
        let (_, stats) = best.ok_or(MetricError::EmptyReference { segment })?;
        for (acc, s) in total.iter_mut().zip(stats) {
            for k in 0..3 {
                acc[k] += s[k];
            }
        }
    }
    Ok(score(&total, cfg.beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_disjoint() {
        let cfg = ChrfConfig::default();
        assert_eq!(
            chrf(&["ab", "hola a todos"], &["ab", "hola a todos"], &cfg).unwrap(),
            100.0
        );
        assert_eq!(chrf(&["abcd"], &["wxyz"], &cfg).unwrap(), 0.0);
    }

    #[test]
    fn whitespace_is_ignored() {
        let cfg = ChrfConfig::default();
        assert_eq!(chrf(&["a b c"], &["abc"], &cfg).unwrap(), 100.0);
    }

    #[test]
    fn empty_hypothesis_scores_zero() {
        let cfg = ChrfConfig::default();
        assert_eq!(chrf(&[""], &["abc"], &cfg).unwrap(), 0.0);
        assert_eq!(chrf(&[""], &[""], &cfg).unwrap(), 0.0);
    }

    #[test]
    fn multi_reference_picks_best() {
        let cfg = ChrfConfig::default();
        let single = chrf(&["niñas altas"], &["niñas altas"], &cfg).unwrap();
        let multi = chrf_multi(
            &["niñas altas"],
            &[vec!["niños altos", "niñas altas"]],
            &cfg,
        )
        .unwrap();
        assert_eq!(single, multi);
    }

    #[test]
    fn errors() {
        let cfg = ChrfConfig::default();
        assert_eq!(
            chrf(&["a"], &["a", "b"], &cfg).unwrap_err(),
            MetricError::LengthMismatch { hyps: 1, refs: 2 }
        );
        let none: [&str; 0] = [];
        assert_eq!(
            chrf(&none, &none, &cfg).unwrap_err(),
            MetricError::EmptyCorpus
        );
        let bad = ChrfConfig { beta: 0.0, ..cfg };
        assert!(chrf(&["a"], &["a"], &bad).is_err());
    }
}
