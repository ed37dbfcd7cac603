//! Dataset loading and stratified sampling.
//!
//! Three families of data are supported, all as UTF-8 TSV (LF or CRLF) with
//! a header row, except parallel text which is one sentence per line:
//!
//! * gendered reference sets (`id, lang, source, masc, fem, neutral, generic,
//!   template_key`), loaded with [`load_mhb`];
//! * coreference bias records (`id, source, entity, gold_gender,
//!   stereotype`), loaded with [`load_bug`];
//! * aligned source/reference files, loaded with [`load_parallel`].
//!
//! Row-level problems never abort a load and are never dropped silently:
//! they come back in [`Loaded::rejected`] with their line number.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::seeded::rng_for;
use crate::tsv::{Table, TsvError};

/// Placeholder substituted for the descriptor span in template keys.
pub const DESCRIPTOR_PLACEHOLDER: &str = "⟨D⟩";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error("line {line}: empty source sentence")]
    EmptySource { line: u64 },
    #[error("line {line}: row has no reference translation")]
    NoReference { line: u64 },
    #[error("line {line}: empty template key")]
    MissingTemplateKey { line: u64 },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: bad value `{value}` for `{column}`")]
    BadEnum {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: entity `{entity}` does not occur in the sentence")]
    EntityNotInSentence { line: u64, entity: String },
    #[error("descriptor `{descriptor}` not found in `{source_text}`")]
    DescriptorNotFound {
        descriptor: String,
        source_text: String,
    },
    #[error("stratum ({gender}, {stereotype}) is empty")]
    EmptyStratum {
        gender: Gender,
        stereotype: Stereotype,
    },
    #[error("requested {requested} records per stratum but the smallest stratum has {available}")]
    StratumTooSmall { requested: usize, available: usize },
    #[error(
        "line count mismatch: source has {source_lines} lines, reference has {reference_lines}"
    )]
    LineCountMismatch {
        source_lines: usize,
        reference_lines: usize,
    },
    #[error("empty line at index {index} in the {side} file")]
    EmptyLine { index: usize, side: &'static str },
}

impl From<TsvError> for CorpusError {
    fn from(e: TsvError) -> Self {
        match e {
            TsvError::MissingColumn(c) => CorpusError::MissingColumn(c),
            TsvError::NoHeader => CorpusError::Malformed("missing header row".into()),
            other => CorpusError::Malformed(other.to_string()),
        }
    }
}

/// A row that failed validation.
#[derive(Debug)]
pub struct Rejected {
    pub line: u64,
    pub error: CorpusError,
}

/// Accepted items plus every rejected row, in file order.
#[derive(Debug)]
pub struct Loaded<T> {
    pub items: Vec<T>,
    pub rejected: Vec<Rejected>,
}

impl<T> Loaded<T> {
    /// Fails on the first rejected row.
    pub fn strict(self) -> Result<Vec<T>, CorpusError> {
        match self.rejected.into_iter().next() {
            Some(r) => Err(r.error),
            None => Ok(self.items),
        }
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One gender-neutral English source with its per-gender references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MhbEntry {
    pub id: String,
    pub lang: String,
    pub source: String,
    pub masc: Option<String>,
    pub fem: Option<String>,
    pub neutral: Option<String>,
    pub generic: Option<String>,
    pub template_key: String,
}

impl MhbEntry {
    /// Usable by the gendered experiments.
    pub fn has_both_genders(&self) -> bool {
        self.masc.is_some() && self.fem.is_some()
    }

    /// Available references in a fixed order: masc, fem, neutral, generic.
    pub fn references(&self) -> Vec<&str> {
        [&self.masc, &self.fem, &self.neutral, &self.generic]
            .into_iter()
            .filter_map(|r| r.as_deref())
            .collect()
    }
}

const MHB_COLUMNS: [&str; 8] = [
    "id",
    "lang",
    "source",
    "masc",
    "fem",
    "neutral",
    "generic",
    "template_key",
];

/// Parses gendered reference rows for one language from TSV text.
pub fn parse_mhb(text: &str, lang: &str) -> Result<Loaded<MhbEntry>, CorpusError> {
    let table = Table::parse(text, &MHB_COLUMNS)?;
    let lang = lang.trim().to_ascii_lowercase();
    let mut seen = HashSet::new();
    let mut loaded = Loaded {
        items: Vec::new(),
        rejected: Vec::new(),
    };

    for row in table.rows() {
        let line = row.line;
        if table.cell(row, "lang").trim().to_ascii_lowercase() != lang {
            continue;
        }
        let id = table.cell(row, "id").trim().to_string();
        let source = table.cell(row, "source").trim().to_string();
        let entry = MhbEntry {
            id: id.clone(),
            lang: lang.clone(),
            source,
            masc: table.optional(row, "masc"),
            fem: table.optional(row, "fem"),
            neutral: table.optional(row, "neutral"),
            generic: table.optional(row, "generic"),
            template_key: table.cell(row, "template_key").trim().to_string(),
        };
        let error = if entry.source.is_empty() {
            Some(CorpusError::EmptySource { line })
        } else if entry.references().is_empty() {
            Some(CorpusError::NoReference { line })
        } else if entry.template_key.is_empty() {
            Some(CorpusError::MissingTemplateKey { line })
        } else if !seen.insert(id.clone()) {
            Some(CorpusError::DuplicateId { line, id })
        } else {
            None
        };
        match error {
            Some(error) => loaded.rejected.push(Rejected { line, error }),
            None => loaded.items.push(entry),
        }
    }
    Ok(loaded)
}

/// Loads the rows of `path` whose `lang` column equals `lang`.
pub fn load_mhb(path: impl AsRef<Path>, lang: &str) -> Result<Loaded<MhbEntry>, CorpusError> {
    parse_mhb(&read(path.as_ref())?, lang)
}

/// Template identity of a source sentence: the descriptor span is replaced
/// by [`DESCRIPTOR_PLACEHOLDER`], the rest is lowercased and runs of
/// whitespace collapse to one space.
pub fn derive_template_key(source: &str, descriptor: &str) -> Result<String, CorpusError> {
    let not_found = || CorpusError::DescriptorNotFound {
        descriptor: descriptor.to_string(),
        source_text: source.to_string(),
    };
    if descriptor.trim().is_empty() {
        return Err(not_found());
    }
    let (start, end) = match source.find(descriptor) {
        Some(start) => (start, start + descriptor.len()),
        None => find_caseless(source, descriptor).ok_or_else(not_found)?,
    };
    // the placeholder is space-separated only where the source had
    // whitespace around the descriptor
    let mut key = String::with_capacity(source.len());
    let before = source[..start]
        .chars()
        .last()
        .map_or(true, char::is_whitespace);
    let after = source[end..]
        .chars()
        .next()
        .map_or(true, char::is_whitespace);
    key.push_str(&collapse_ws(&source[..start].to_lowercase()));
    if before && !key.is_empty() {
        key.push(' ');
    }
    key.push_str(DESCRIPTOR_PLACEHOLDER);
    let tail = collapse_ws(&source[end..].to_lowercase());
    if after && !tail.is_empty() {
        key.push(' ');
    }
    key.push_str(&tail);
    Ok(key)
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn find_caseless(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let needle = needle.to_lowercase();
    for (start, _) in haystack.char_indices() {
        let rest = &haystack[start..];
        let mut folded = String::new();
        for (offset, c) in rest.char_indices() {
            folded.extend(c.to_lowercase());
            if folded == needle {
                return Some((start, start + offset + c.len_utf8()));
            }
            if !needle.starts_with(folded.as_str()) {
                break;
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether the gold gender agrees with the occupational stereotype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stereotype {
    Pro,
    Anti,
}

impl Stereotype {
    pub const ALL: [Stereotype; 2] = [Stereotype::Pro, Stereotype::Anti];

    pub fn as_str(self) -> &'static str {
        match self {
            Stereotype::Pro => "pro",
            Stereotype::Anti => "anti",
        }
    }
}

impl fmt::Display for Stereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An English sentence with one focus entity whose gender is fixed by
/// coreference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugRecord {
    pub id: String,
    pub source: String,
    pub entity: String,
    pub gold_gender: Gender,
    pub stereotype: Stereotype,
}

fn word_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Case-insensitive token (or token sequence) occurrence.
pub fn entity_occurs(source: &str, entity: &str) -> bool {
    let needle = word_tokens(entity);
    if needle.is_empty() {
        return false;
    }
    word_tokens(source)
        .windows(needle.len())
        .any(|w| w == needle.as_slice())
}

const BUG_COLUMNS: [&str; 5] = ["id", "source", "entity", "gold_gender", "stereotype"];

pub fn parse_bug(text: &str) -> Result<Loaded<BugRecord>, CorpusError> {
    let table = Table::parse(text, &BUG_COLUMNS)?;
    let mut seen = HashSet::new();
    let mut loaded = Loaded {
        items: Vec::new(),
        rejected: Vec::new(),
    };

    for row in table.rows() {
        let line = row.line;
        let result = (|| {
            let id = table.cell(row, "id").trim().to_string();
            let source = table.cell(row, "source").trim().to_string();
            let entity = table.cell(row, "entity").trim().to_string();
            if source.is_empty() {
                return Err(CorpusError::EmptySource { line });
            }
            let bad = |column: &str, value: &str| CorpusError::BadEnum {
                line,
                column: column.to_string(),
                value: value.to_string(),
            };
            let gender_cell = table.cell(row, "gold_gender").trim();
            let gold_gender = match gender_cell.to_ascii_lowercase().as_str() {
                "male" => Gender::Male,
                "female" => Gender::Female,
                _ => return Err(bad("gold_gender", gender_cell)),
            };
            let stereo_cell = table.cell(row, "stereotype").trim();
            let stereotype = match stereo_cell.to_ascii_lowercase().as_str() {
                "pro" => Stereotype::Pro,
                "anti" => Stereotype::Anti,
                _ => return Err(bad("stereotype", stereo_cell)),
            };
            if !entity_occurs(&source, &entity) {
                return Err(CorpusError::EntityNotInSentence { line, entity });
            }
            if !seen.insert(id.clone()) {
                return Err(CorpusError::DuplicateId { line, id });
            }
            Ok(BugRecord {
                id,
                source,
                entity,
                gold_gender,
                stereotype,
            })
        })();
        match result {
            Ok(record) => loaded.items.push(record),
            Err(error) => loaded.rejected.push(Rejected { line, error }),
        }
    }
    Ok(loaded)
}

/// Loads bias records. Columns beyond the five used here are ignored.
pub fn load_bug(path: impl AsRef<Path>) -> Result<Loaded<BugRecord>, CorpusError> {
    parse_bug(&read(path.as_ref())?)
}

/// Equal-sized, disjoint id lists for each (gender, stereotype) stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedSample {
    pub strata: BTreeMap<(Gender, Stereotype), Vec<String>>,
    pub n_per_stratum: usize,
}

impl BalancedSample {
    /// All sampled ids, stratum by stratum.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.strata.values().flatten().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.n_per_stratum * self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_per_stratum == 0
    }
}

/// Samples every stratum down to the size of the smallest one.
pub fn sample_balanced_subsets(
    records: &[BugRecord],
    seed: u64,
) -> Result<BalancedSample, CorpusError> {
    sample_balanced_subsets_sized(records, seed, None)
}

/// As [`sample_balanced_subsets`], optionally with an explicit per-stratum
/// size no larger than the smallest stratum.
pub fn sample_balanced_subsets_sized(
    records: &[BugRecord],
    seed: u64,
    n_per_stratum: Option<usize>,
) -> Result<BalancedSample, CorpusError> {
    let mut raw: BTreeMap<(Gender, Stereotype), Vec<&BugRecord>> = BTreeMap::new();
    for gender in Gender::ALL {
        for stereotype in Stereotype::ALL {
            raw.insert((gender, stereotype), Vec::new());
        }
    }
    for record in records {
        raw.get_mut(&(record.gold_gender, record.stereotype))
            .expect("all strata pre-seeded")
            .push(record);
    }
    for (&(gender, stereotype), members) in &raw {
        if members.is_empty() {
            return Err(CorpusError::EmptyStratum { gender, stereotype });
        }
    }
    let smallest = raw.values().map(Vec::len).min().unwrap_or(0);
    let n = match n_per_stratum {
        Some(n) if n > smallest => {
            return Err(CorpusError::StratumTooSmall {
                requested: n,
                available: smallest,
            })
        }
        Some(n) => n,
        None => smallest,
    };

    let strata = raw
        .into_iter()
        .map(|((gender, stereotype), members)| {
            let mut rng = rng_for(
                seed,
                &["balanced-sample", gender.as_str(), stereotype.as_str()],
            );
            let mut picked = index::sample(&mut rng, members.len(), n).into_vec();
            // file order reads better in outputs; membership is what is random
            picked.sort_unstable();
            let ids = picked.into_iter().map(|i| members[i].id.clone()).collect();
            ((gender, stereotype), ids)
        })
        .collect();
    Ok(BalancedSample {
        strata,
        n_per_stratum: n,
    })
}

/// A source sentence aligned with its reference translation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: String,
    pub source: String,
    pub reference: String,
    pub lang: String,
}

/// Splits text into lines, accepting LF and CRLF and ignoring one final
/// terminator.
pub fn split_lines(text: &str) -> Vec<&str> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .collect()
}

pub fn parse_parallel(
    source: &str,
    reference: &str,
    lang: &str,
) -> Result<Vec<ParallelPair>, CorpusError> {
    let src_lines = split_lines(source);
    let ref_lines = split_lines(reference);
    if src_lines.len() != ref_lines.len() {
        return Err(CorpusError::LineCountMismatch {
            source_lines: src_lines.len(),
            reference_lines: ref_lines.len(),
        });
    }
    src_lines
        .into_iter()
        .zip(ref_lines)
        .enumerate()
        .map(|(index, (s, r))| {
            if s.trim().is_empty() {
                return Err(CorpusError::EmptyLine {
                    index,
                    side: "source",
                });
            }
            if r.trim().is_empty() {
                return Err(CorpusError::EmptyLine {
                    index,
                    side: "reference",
                });
            }
            Ok(ParallelPair {
                id: format!("{}", index + 1),
                source: s.trim().to_string(),
                reference: r.trim().to_string(),
                lang: lang.to_ascii_lowercase(),
            })
        })
        .collect()
}

/// Joins line `i` of both files into pair `i` (ids are 1-based line numbers).
pub fn load_parallel(
    src_path: impl AsRef<Path>,
    ref_path: impl AsRef<Path>,
    lang: &str,
) -> Result<Vec<ParallelPair>, CorpusError> {
    parse_parallel(&read(src_path.as_ref())?, &read(ref_path.as_ref())?, lang)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id\tlang\tsource\tmasc\tfem\tneutral\tgeneric\ttemplate_key\n";

    #[test]
    fn mhb_spanish_row_has_both_genders() {
        let text = format!(
            "{HEADER}x1\tspa\tWhat do you think about Hasidic children?\t¿Qué piensas de los niños judíos jasídicos?\t¿Qué piensas de las niñas judías jasídicas?\t\t\tt1\n"
        );
        let loaded = parse_mhb(&text, "spa").unwrap();
        assert!(loaded.rejected.is_empty());
        let e = &loaded.items[0];
        assert_eq!(
            e.masc.as_deref(),
            Some("¿Qué piensas de los niños judíos jasídicos?")
        );
        assert_eq!(
            e.fem.as_deref(),
            Some("¿Qué piensas de las niñas judías jasídicas?")
        );
        assert!(e.neutral.is_none() && e.generic.is_none());
        assert!(e.has_both_genders());
    }

    #[test]
    fn mhb_generic_only_row_is_loaded_but_not_gendered() {
        let text = format!(
            "{HEADER}x2\test\tWhat do you think about Hasidic children?\t\t\t\tMida arvate lastest, kes on hassiidid?\tt1\n"
        );
        let items = parse_mhb(&text, "est").unwrap().strict().unwrap();
        assert_eq!(items.len(), 1);
        assert!(items[0].generic.is_some());
        assert!(!items[0].has_both_genders());
    }

    #[test]
    fn mhb_filters_language_and_keeps_order() {
        let text = format!(
            "{HEADER}a\tspa\tOne.\tUno.\tUna.\t\t\tk\nb\tita\tTwo.\tDue.\t\t\t\tk\nc\tspa\tThree.\tTres.\t\t\t\tk\n"
        );
        let items = parse_mhb(&text, "spa").unwrap().strict().unwrap();
        let ids: Vec<_> = items.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
    }

    #[test]
    fn mhb_empty_file_with_header() {
        assert!(parse_mhb(HEADER, "spa").unwrap().items.is_empty());
    }

    #[test]
    fn mhb_rejects_rows_with_line_numbers() {
        let text = format!("{HEADER}a\tspa\t\tUno.\t\t\t\tk\nb\tspa\tTwo.\t\t\t\t\tk\nc\tspa\tOk.\tVale.\t\t\t\tk\n");
        let loaded = parse_mhb(&text, "spa").unwrap();
        assert_eq!(loaded.items.len(), 1);
        assert!(matches!(
            loaded.rejected[0].error,
            CorpusError::EmptySource { line: 2 }
        ));
        assert!(matches!(
            loaded.rejected[1].error,
            CorpusError::NoReference { line: 3 }
        ));
    }

    #[test]
    fn mhb_missing_column() {
        let err = parse_mhb("id\tlang\tsource\n", "spa").unwrap_err();
        assert!(matches!(err, CorpusError::MissingColumn(c) if c == "masc"));
    }

    #[test]
    fn mhb_crlf_matches_lf() {
        let lf = format!("{HEADER}a\tspa\tOne.\tUno.\tUna.\t\t\tk\n");
        let crlf = lf.replace('\n', "\r\n");
        assert_eq!(
            parse_mhb(&lf, "spa").unwrap().items,
            parse_mhb(&crlf, "spa").unwrap().items
        );
    }

    #[test]
    fn template_keys() {
        assert_eq!(
            derive_template_key(
                "What do you think about Hasidic children?",
                "Hasidic children"
            )
            .unwrap(),
            "what do you think about ⟨D⟩?"
        );
        assert_eq!(
            derive_template_key("I have friends who are deaf.", "deaf").unwrap(),
            "i have friends who are ⟨D⟩."
        );
        assert_eq!(
            derive_template_key("I have friends who are deaf.", "deaf").unwrap(),
            derive_template_key("I have  friends who are blind.", "blind").unwrap()
        );
        assert_eq!(
            derive_template_key("Deaf people   are here", "deaf people").unwrap(),
            "⟨D⟩ are here"
        );
        assert!(matches!(
            derive_template_key("I have friends.", "deaf"),
            Err(CorpusError::DescriptorNotFound { .. })
        ));
    }

    const BUG_HEADER: &str = "id\tsource\tentity\tgold_gender\tstereotype\n";

    #[test]
    fn bug_valid_record() {
        let text = format!(
            "{BUG_HEADER}b1\tThe doctor asked the nurse to help her.\tdoctor\tfemale\tanti\n"
        );
        let items = parse_bug(&text).unwrap().strict().unwrap();
        assert_eq!(
            items[0],
            BugRecord {
                id: "b1".into(),
                source: "The doctor asked the nurse to help her.".into(),
                entity: "doctor".into(),
                gold_gender: Gender::Female,
                stereotype: Stereotype::Anti,
            }
        );
    }

    #[test]
    fn bug_entity_must_occur() {
        let text = format!("{BUG_HEADER}b1\tThe doctor asked the nurse.\tpilot\tmale\tpro\n");
        let loaded = parse_bug(&text).unwrap();
        assert!(loaded.items.is_empty());
        assert!(
            matches!(&loaded.rejected[0].error, CorpusError::EntityNotInSentence { line: 2, entity } if entity == "pilot")
        );
    }

    #[test]
    fn bug_entity_is_token_not_substring() {
        assert!(entity_occurs("The Doctor left.", "doctor"));
        assert!(!entity_occurs("The doctors left.", "doctor"));
        assert!(entity_occurs(
            "A flight attendant came.",
            "flight attendant"
        ));
    }

    #[test]
    fn bug_bad_enum_and_extra_columns() {
        let text = "id\tsource\tentity\tgold_gender\tstereotype\textra\nb1\tThe nurse.\tnurse\tneutral\tpro\tx\nb2\tThe nurse.\tnurse\tMale\tPro\tx\n";
        let loaded = parse_bug(text).unwrap();
        assert!(
            matches!(&loaded.rejected[0].error, CorpusError::BadEnum { column, .. } if column == "gold_gender")
        );
        assert_eq!(loaded.items.len(), 1);
    }

    #[test]
    fn bug_empty_file() {
        assert!(parse_bug(BUG_HEADER).unwrap().items.is_empty());
    }

    fn strata(sizes: [usize; 4]) -> Vec<BugRecord> {
        let combos = [
            (Gender::Male, Stereotype::Pro),
            (Gender::Male, Stereotype::Anti),
            (Gender::Female, Stereotype::Pro),
            (Gender::Female, Stereotype::Anti),
        ];
        let mut out = Vec::new();
        for ((g, s), n) in combos.into_iter().zip(sizes) {
            for i in 0..n {
                out.push(BugRecord {
                    id: format!("{g}-{s}-{i}"),
                    source: "The cook.".into(),
                    entity: "cook".into(),
                    gold_gender: g,
                    stereotype: s,
                });
            }
        }
        out
    }

    #[test]
    fn balanced_sampling_sizes() {
        let all = sample_balanced_subsets(&strata([10, 10, 10, 10]), 3).unwrap();
        assert_eq!(all.n_per_stratum, 10);
        assert_eq!(all.len(), 40);
        let min = sample_balanced_subsets(&strata([8, 5, 9, 7]), 3).unwrap();
        assert_eq!(min.n_per_stratum, 5);
        assert!(min.strata.values().all(|ids| ids.len() == 5));
        assert_eq!(
            min,
            sample_balanced_subsets(&strata([8, 5, 9, 7]), 3).unwrap()
        );
    }

    #[test]
    fn balanced_sampling_errors() {
        let err = sample_balanced_subsets(&strata([3, 0, 2, 2]), 1).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::EmptyStratum {
                gender: Gender::Male,
                stereotype: Stereotype::Anti
            }
        ));
        let err = sample_balanced_subsets_sized(&strata([3, 3, 2, 2]), 1, Some(3)).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::StratumTooSmall {
                requested: 3,
                available: 2
            }
        ));
        let two = sample_balanced_subsets_sized(&strata([3, 3, 2, 2]), 1, Some(1)).unwrap();
        assert_eq!(two.n_per_stratum, 1);
    }

    #[test]
    fn parallel_alignment() {
        let src: String = (0..1012).map(|i| format!("s{i}\n")).collect();
        let reference: String = (0..1012).map(|i| format!("r{i}\n")).collect();
        let pairs = parse_parallel(&src, &reference, "spa").unwrap();
        assert_eq!(pairs.len(), 1012);
        assert_eq!(pairs[1011].source, "s1011");
        assert_eq!(pairs[1011].reference, "r1011");

        let short: String = (0..9).map(|i| format!("r{i}\n")).collect();
        let ten: String = (0..10).map(|i| format!("s{i}\n")).collect();
        assert!(matches!(
            parse_parallel(&ten, &short, "spa"),
            Err(CorpusError::LineCountMismatch {
                source_lines: 10,
                reference_lines: 9
            })
        ));
    }

    #[test]
    fn parallel_crlf_and_empty_lines() {
        let lf = parse_parallel("a\nb\n", "x\ny\n", "spa").unwrap();
        let crlf = parse_parallel("a\r\nb\r\n", "x\r\ny", "spa").unwrap();
        assert_eq!(lf, crlf);
        assert!(matches!(
            parse_parallel("a\n\n", "x\ny\n", "spa"),
            Err(CorpusError::EmptyLine {
                index: 1,
                side: "source"
            })
        ));
    }
}
