//! Brute-force metric oracles and random corpus generators shared by the
//! integration tests. The oracles follow the textbook formulas with plain
//! linear scans, so they share no counting code with the library.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct OracleBleu {
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: usize,
    pub ref_len: usize,
}

fn windows(tokens: &[String], n: usize) -> Vec<&[String]> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= tokens.len() {
        out.push(&tokens[i..i + n]);
        i += 1;
    }
    out
}

fn occurrences(grams: &[&[String]], gram: &[String]) -> u64 {
    let mut c = 0;
    for g in grams {
        if *g == gram {
            c += 1;
        }
    }
    c
}

pub fn bleu_oracle(
    hyps: &[Vec<String>],
    refs: &[Vec<Vec<String>>],
    max_order: usize,
    k: f64,
) -> OracleBleu {
    let mut matches = Vec::new();
    let mut totals = Vec::new();
    for n in 1..=max_order {
        let mut m = 0u64;
        let mut l = 0u64;
        for (hyp, seg_refs) in hyps.iter().zip(refs) {
            let grams = windows(hyp, n);
            l += grams.len() as u64;
            for (i, gram) in grams.iter().enumerate() {
                if grams[..i].contains(gram) {
                    continue;
                }
                let in_hyp = occurrences(&grams, gram);
                let mut in_ref = 0;
                for r in seg_refs {
                    in_ref = in_ref.max(occurrences(&windows(r, n), gram));
                }
                m += in_hyp.min(in_ref);
            }
        }
        matches.push(m);
        totals.push(l);
    }
    let mut precisions = Vec::new();
    for i in 0..max_order {
        let (num, den) = if i == 0 {
            (matches[i] as f64, totals[i] as f64)
        } else {
            (matches[i] as f64 + k, totals[i] as f64 + k)
        };
        precisions.push(if den == 0.0 { 0.0 } else { num / den });
    }
    let mut h = 0usize;
    let mut r = 0usize;
    for (hyp, seg_refs) in hyps.iter().zip(refs) {
        h += hyp.len();
        let mut best = seg_refs[0].len();
        for reference in seg_refs {
            let d = reference.len().abs_diff(hyp.len());
            let bd = best.abs_diff(hyp.len());
            if d < bd || (d == bd && reference.len() < best) {
                best = reference.len();
            }
        }
        r += best;
    }
    let brevity_penalty = if h == 0 {
        0.0
    } else if h < r {
        (1.0 - r as f64 / h as f64).exp()
    } else {
        1.0
    };
    let mut product = 1.0;
    for p in &precisions {
        product *= p;
    }
    let score = if h == 0 || product == 0.0 {
        0.0
    } else {
        100.0 * brevity_penalty * product.powf(1.0 / max_order as f64)
    };
    OracleBleu {
        score,
        precisions,
        brevity_penalty,
        matches,
        totals,
        hyp_len: h,
        ref_len: r,
    }
}

fn char_grams(s: &str, n: usize) -> Vec<String> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= chars.len() {
        out.push(chars[i..i + n].iter().collect());
        i += 1;
    }
    out
}

/// Corpus chrF: per-order totals summed over segments, F-beta per order,
/// mean over the orders that have at least one n-gram on either side.
pub fn chrf_oracle(hyps: &[&str], refs: &[&str], order: usize, beta: f64) -> f64 {
    let mut f_sum = 0.0;
    let mut counted = 0;
    for n in 1..=order {
        let (mut th, mut tr, mut tm) = (0u64, 0u64, 0u64);
        for (h, r) in hyps.iter().zip(refs) {
            let hg = char_grams(h, n);
            let rg = char_grams(r, n);
            th += hg.len() as u64;
            tr += rg.len() as u64;
            for (i, g) in hg.iter().enumerate() {
                if hg[..i].contains(g) {
                    continue;
                }
                let a = hg.iter().filter(|x| *x == g).count() as u64;
                let b = rg.iter().filter(|x| *x == g).count() as u64;
                tm += a.min(b);
            }
        }
        if th == 0 && tr == 0 {
            continue;
        }
        counted += 1;
        let p = if th == 0 { 0.0 } else { tm as f64 / th as f64 };
        let r = if tr == 0 { 0.0 } else { tm as f64 / tr as f64 };
        let b2 = beta * beta;
        if p + r > 0.0 {
            f_sum += (1.0 + b2) * p * r / (b2 * p + r);
        }
    }
    if counted == 0 {
        0.0
    } else {
        100.0 * f_sum / counted as f64
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const VOCAB: [&str; 5] = ["a", "b", "c", "d", "e"];

pub fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| VOCAB[rng.gen_range(0..VOCAB.len())].to_string())
        .collect()
}

/// A corpus of up to 5 segments with 1 to 3 references each, at most 8
/// tokens per sentence over a 5-word vocabulary.
pub fn random_corpus(rng: &mut ChaCha8Rng) -> (Vec<Vec<String>>, Vec<Vec<Vec<String>>>) {
    let segments = rng.gen_range(1..=5);
    let mut hyps = Vec::new();
    let mut refs = Vec::new();
    for _ in 0..segments {
        hyps.push(random_tokens(rng, 8));
        let n_refs = rng.gen_range(1..=3);
        refs.push((0..n_refs).map(|_| random_tokens(rng, 8)).collect());
    }
    (hyps, refs)
}

pub fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    const CHARS: [char; 8] = ['a', 'b', 'c', 'd', 'é', 'ñ', ' ', ' '];
    let len = rng.gen_range(0..=20);
    (0..len)
        .map(|_| CHARS[rng.gen_range(0..CHARS.len())])
        .collect()
}

pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Backend that answers from a function of (language name, English source,
/// gendered prompt?). Prompts must end on the query's target label.
pub struct FnBackend<F>(pub F);

impl<F> gendertx::backends::CompletionBackend for FnBackend<F>
where
    F: Fn(&str, &str, bool) -> String + Send + Sync,
{
    fn id(&self) -> &str {
        "fn"
    }

    fn complete(
        &self,
        request: &gendertx::backends::CompletionRequest,
    ) -> Result<gendertx::backends::CompletionResult, gendertx::backends::BackendError> {
        let mut lines = request.prompt.lines().rev();
        let label = lines.next().unwrap_or_default();
        let source = lines
            .next()
            .and_then(|l| l.strip_prefix("English: "))
            .unwrap_or_default();
        let (name, gendered) = match label.strip_suffix(" (masculine):") {
            Some(name) => (name, true),
            None => (label.trim_end_matches(':'), false),
        };
        Ok(gendertx::backends::CompletionResult {
            text: request
                .truncate_at_stop(&(self.0)(name, source, gendered))
                .to_string(),
            backend_id: "fn".into(),
            latency: Default::default(),
            attempt_count: 1,
        })
    }
}

/// Completion text for a gender-specific prompt.
pub fn gendered_completion(lang_name: &str, masc: &str, fem: &str) -> String {
    format!(" {masc}\n{lang_name} (feminine): {fem}\n\nEnglish:")
}
