//! Reference-free gender accuracy for coreference bias records.
//!
//! The gender an output assigns to the focus entity is read off with a
//! per-language lexicon of masculine and feminine target forms. A form
//! matches when it starts at a word boundary of the normalized translation
//! (NFC, lowercase); overlapping matches are resolved longest-first, so
//! `doctora` shadows the `doctor` inside it. A prediction is made only when
//! the surviving matches all belong to one gender.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{BugRecord, Gender};
use crate::prompting::{GenderedTranslation, GenerationStatus};
use crate::tsv::{Table, TsvError};

#[derive(Debug, thiserror::Error)]
pub enum BiasError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon: missing column `{0}`")]
    MissingColumn(String),
    #[error("lexicon: {0}")]
    Malformed(String),
    #[error("lexicon line {line}: empty {side} form list")]
    EmptyForms { line: u64, side: &'static str },
    #[error("lexicon line {line}: `{form}` is listed as both masculine and feminine")]
    OverlappingForms { line: u64, form: String },
    #[error("lexicon line {line}: duplicate entry for ({lang}, {entity})")]
    DuplicateEntry {
        line: u64,
        lang: String,
        entity: String,
    },
    #[error("no lexicon entry for `{entity}` in `{lang}`")]
    EntityNotInLexicon { lang: String, entity: String },
    #[error("prediction/record mismatch: {0}")]
    IdMismatch(String),
}

impl From<TsvError> for BiasError {
    fn from(e: TsvError) -> Self {
        match e {
            TsvError::MissingColumn(c) => BiasError::MissingColumn(c),
            other => BiasError::Malformed(other.to_string()),
        }
    }
}

fn fold(s: &str) -> String {
    let lowered: String = s.nfc().collect::<String>().to_lowercase();
    lowered.nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityForms {
    pub masculine: Vec<String>,
    pub feminine: Vec<String>,
}

/// Gendered target-language forms per (language, English entity).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenderLexicon {
    entries: HashMap<(String, String), EntityForms>,
}

impl GenderLexicon {
    /// Parses the TSV form `lang, entity, masc_forms, fem_forms` where form
    /// lists are `|`-separated.
    pub fn parse(text: &str) -> Result<Self, BiasError> {
        let table = Table::parse(text, &["lang", "entity", "masc_forms", "fem_forms"])?;
        let mut lexicon = GenderLexicon::default();
        for row in table.rows() {
            let line = row.line;
            let lang = table.cell(row, "lang").trim().to_ascii_lowercase();
            let entity = fold(table.cell(row, "entity").trim());
            let forms = |column: &str| -> Vec<String> {
                table
                    .cell(row, column)
                    .split('|')
                    .map(str::trim)
                    .filter(|f| !f.is_empty())
                    .map(str::to_string)
                    .collect()
            };
            let masculine = forms("masc_forms");
            let feminine = forms("fem_forms");
            lexicon.insert_checked(
                line,
                lang,
                entity,
                EntityForms {
                    masculine,
                    feminine,
                },
            )?;
        }
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BiasError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BiasError::Io {
            path: path.display().to_string(),
            source,
        })?;
        GenderLexicon::parse(&text)
    }

    /// Adds one entry, enforcing non-empty, disjoint form lists.
    pub fn insert(
        &mut self,
        lang: &str,
        entity: &str,
        forms: EntityForms,
    ) -> Result<(), BiasError> {
        self.insert_checked(0, lang.to_ascii_lowercase(), fold(entity), forms)
    }

    fn insert_checked(
        &mut self,
        line: u64,
        lang: String,
        entity: String,
        forms: EntityForms,
    ) -> Result<(), BiasError> {
        if forms.masculine.is_empty() {
            return Err(BiasError::EmptyForms {
                line,
                side: "masculine",
            });
        }
        if forms.feminine.is_empty() {
            return Err(BiasError::EmptyForms {
                line,
                side: "feminine",
            });
        }
        let masc: BTreeSet<String> = forms.masculine.iter().map(|f| fold(f)).collect();
        if let Some(form) = forms.feminine.iter().find(|f| masc.contains(&fold(f))) {
            return Err(BiasError::OverlappingForms {
                line,
                form: form.clone(),
            });
        }
        if self.entries.contains_key(&(lang.clone(), entity.clone())) {
            return Err(BiasError::DuplicateEntry { line, lang, entity });
        }
        self.entries.insert((lang, entity), forms);
        Ok(())
    }

    pub fn get(&self, lang: &str, entity: &str) -> Option<&EntityForms> {
        self.entries.get(&(lang.to_ascii_lowercase(), fold(entity)))
    }

    pub fn contains(&self, lang: &str, entity: &str) -> bool {
        self.get(lang, entity).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedGender {
    Male,
    Female,
    Unknown,
}

impl PredictedGender {
    pub fn matches(self, gold: Gender) -> bool {
        matches!(
            (self, gold),
            (PredictedGender::Male, Gender::Male) | (PredictedGender::Female, Gender::Female)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderPrediction {
    pub record_id: String,
    pub predicted: PredictedGender,
    /// Lexicon form that decided the prediction; set iff it is not Unknown.
    pub matched_form: Option<String>,
}

struct Occurrence {
    start: usize,
    end: usize,
    gender: Gender,
    form: usize,
}

fn at_word_start(text: &str, at: usize) -> bool {
    text[..at]
        .chars()
        .next_back()
        .map_or(true, |c| !c.is_alphanumeric())
}

/// Reads the entity's gender off `translation`.
pub fn predict_gender(
    record_id: &str,
    translation: &str,
    entity: &str,
    lexicon: &GenderLexicon,
    lang: &str,
) -> Result<GenderPrediction, BiasError> {
    let forms = lexicon
        .get(lang, entity)
        .ok_or_else(|| BiasError::EntityNotInLexicon {
            lang: lang.to_string(),
            entity: entity.to_string(),
        })?;
    let text = fold(translation);
    let candidates: Vec<(Gender, &str)> = forms
        .masculine
        .iter()
        .map(|f| (Gender::Male, f.as_str()))
        .chain(forms.feminine.iter().map(|f| (Gender::Female, f.as_str())))
        .collect();

    let mut occurrences = Vec::new();
    for (form, (gender, raw)) in candidates.iter().enumerate() {
        let needle = fold(raw);
        if needle.is_empty() {
            continue;
        }
        for (start, _) in text.match_indices(needle.as_str()) {
            if at_word_start(&text, start) {
                occurrences.push(Occurrence {
                    start,
                    end: start + needle.len(),
                    gender: *gender,
                    form,
                });
            }
        }
    }
    // longest first, then leftmost; a match survives if it overlaps no
    // longer survivor
    occurrences.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<&Occurrence> = Vec::new();
    for occ in &occurrences {
        if kept
            .iter()
            .all(|k| occ.end <= k.start || occ.start >= k.end)
        {
            kept.push(occ);
        }
    }

    let genders: BTreeSet<Gender> = kept.iter().map(|o| o.gender).collect();
    let (predicted, matched_form) = match (genders.len(), kept.first()) {
        (1, Some(best)) => {
            let predicted = match best.gender {
                Gender::Male => PredictedGender::Male,
                Gender::Female => PredictedGender::Female,
            };
            (predicted, Some(candidates[best.form].1.to_string()))
        }
        _ => (PredictedGender::Unknown, None),
    };
    Ok(GenderPrediction {
        record_id: record_id.to_string(),
        predicted,
        matched_form,
    })
}

/// Accuracy over a record set. Unknown predictions count as errors and are
/// also tallied separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStats {
    pub n: usize,
    pub correct: usize,
    pub unknown: usize,
    /// In `[0, 1]`; 0 for an empty set.
    pub accuracy: f64,
    pub unknown_rate: f64,
}

pub fn gender_accuracy(
    predictions: &[GenderPrediction],
    records: &[BugRecord],
) -> Result<AccuracyStats, BiasError> {
    if predictions.len() != records.len() {
        return Err(BiasError::IdMismatch(format!(
            "{} predictions for {} records",
            predictions.len(),
            records.len()
        )));
    }
    let by_id: HashMap<&str, &GenderPrediction> = predictions
        .iter()
        .map(|p| (p.record_id.as_str(), p))
        .collect();
    if by_id.len() != predictions.len() {
        return Err(BiasError::IdMismatch("duplicate prediction ids".into()));
    }
    let mut correct = 0;
    let mut unknown = 0;
    for record in records {
        let p = by_id
            .get(record.id.as_str())
            .ok_or_else(|| BiasError::IdMismatch(format!("no prediction for `{}`", record.id)))?;
        if p.predicted == PredictedGender::Unknown {
            unknown += 1;
        } else if p.predicted.matches(record.gold_gender) {
            correct += 1;
        }
    }
    let n = records.len();
    let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(AccuracyStats {
        n,
        correct,
        unknown,
        accuracy: rate(correct),
        unknown_rate: rate(unknown),
    })
}

/// Male-gold minus female-gold accuracy, in percentage points.
pub fn delta_b(acc_male_gold: f64, acc_female_gold: f64) -> f64 {
    100.0 * (acc_male_gold - acc_female_gold)
}

/// Accuracy on all records plus the male/female gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasStats {
    pub overall: AccuracyStats,
    pub male: AccuracyStats,
    pub female: AccuracyStats,
    /// Signed, percentage points.
    pub delta_b: f64,
}

pub fn bias_stats(
    predictions: &[GenderPrediction],
    records: &[BugRecord],
) -> Result<BiasStats, BiasError> {
    let overall = gender_accuracy(predictions, records)?;
    let by_id: HashMap<&str, &GenderPrediction> = predictions
        .iter()
        .map(|p| (p.record_id.as_str(), p))
        .collect();
    let split = |gender: Gender| -> Result<AccuracyStats, BiasError> {
        let recs: Vec<BugRecord> = records
            .iter()
            .filter(|r| r.gold_gender == gender)
            .cloned()
            .collect();
        let preds: Vec<GenderPrediction> = recs
            .iter()
            .map(|r| (*by_id[r.id.as_str()]).clone())
            .collect();
        gender_accuracy(&preds, &recs)
    };
    let male = split(Gender::Male)?;
    let female = split(Gender::Female)?;
    Ok(BiasStats {
        overall,
        male,
        female,
        delta_b: delta_b(male.accuracy, female.accuracy),
    })
}

/// Ids with a non-blank single-target output and a complete gendered pair.
pub fn evaluable_subset(
    unspec_run: &BTreeMap<String, Option<String>>,
    gendered_run: &BTreeMap<String, GenderedTranslation>,
) -> BTreeSet<String> {
    unspec_run
        .iter()
        .filter(|(_, out)| out.as_deref().is_some_and(|s| !s.trim().is_empty()))
        .filter(|(id, _)| {
            gendered_run
                .get(*id)
                .is_some_and(|g| g.status == GenerationStatus::Complete)
        })
        .map(|(id, _)| id.clone())
        .collect()
}
