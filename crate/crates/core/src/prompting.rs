//! Few-shot prompt construction and completion parsing.
//!
//! Two templates are supported. The standard one asks for a single
//! translation:
//!
//! ```text
//! English: {src}
//! {lang_name}: {tgt}
//! ```
//!
//! and the gender-specific one asks for a masculine and a feminine
//! rendering of the same source:
//!
//! ```text
//! English: {src}
//! {lang_name} (masculine): {masc}
//! {lang_name} (feminine): {fem}
//! ```
//!
//! Each in-context example is rendered as a filled block followed by a blank
//! line; the query block is cut right before its first target slot so the
//! model continues from there. Both templates can be replaced through a
//! template file, see [`PromptTemplates::parse`].

use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::MhbEntry;
use crate::seeded::rng_for;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("only {available} eligible in-context examples, {required} required")]
    InsufficientPool { available: usize, required: usize },
    #[error("in-context example `{0}` has no reference translation")]
    NoReference(String),
    #[error("in-context example `{0}` lacks a masculine or feminine reference")]
    MissingGenderReference(String),
    #[error("query `{0}` is also one of the in-context examples")]
    QueryAmongExamples(String),
    #[error("target language name is empty")]
    EmptyLanguageName,
    #[error("template: {0}")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateKind {
    Standard,
    GenderSpecific,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Src,
    Tgt,
    Masc,
    Fem,
    LangName,
}

impl Slot {
    fn from_name(name: &str) -> Option<Slot> {
        Some(match name {
            "src" => Slot::Src,
            "tgt" => Slot::Tgt,
            "masc" => Slot::Masc,
            "fem" => Slot::Fem,
            "lang_name" => Slot::LangName,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(Slot),
}

/// One example block, as a sequence of literal text and slots.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Block {
    pieces: Vec<Piece>,
}

impl Block {
    fn parse(body: &str) -> Result<Block, PromptError> {
        let mut pieces = Vec::new();
        let mut text = String::new();
        let mut chars = body.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    text.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    text.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some(ch) => name.push(ch),
                            None => {
                                return Err(PromptError::Template(format!(
                                    "unterminated placeholder `{{{name}`"
                                )))
                            }
                        }
                    }
                    let slot = Slot::from_name(&name).ok_or_else(|| {
                        PromptError::Template(format!("unknown placeholder `{{{name}}}`"))
                    })?;
                    if !text.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut text)));
                    }
                    pieces.push(Piece::Slot(slot));
                }
                '}' => return Err(PromptError::Template("unmatched `}`".into())),
                _ => text.push(c),
            }
        }
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Ok(Block { pieces })
    }

    fn position(&self, slot: Slot) -> Result<usize, PromptError> {
        let mut found = self
            .pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| **p == Piece::Slot(slot));
        let first = found.next().map(|(i, _)| i);
        if found.next().is_some() {
            return Err(PromptError::Template(format!(
                "placeholder {slot:?} appears more than once"
            )));
        }
        first.ok_or_else(|| PromptError::Template(format!("placeholder {slot:?} is required")))
    }

    fn render<'v>(
        &self,
        out: &mut String,
        lang_name: &str,
        values: &dyn Fn(Slot) -> Option<&'v str>,
    ) {
        for piece in &self.pieces {
            match piece {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(Slot::LangName) => out.push_str(lang_name),
                Piece::Slot(slot) => out.push_str(values(*slot).unwrap_or("")),
            }
        }
    }

    /// Literal text of the line holding `slot`, up to the slot, with
    /// `{lang_name}` expanded and whitespace trimmed.
    fn line_label(&self, slot: Slot, lang_name: &str) -> String {
        let at = self
            .pieces
            .iter()
            .position(|p| *p == Piece::Slot(slot))
            .unwrap_or(0);
        let mut label = String::new();
        for piece in self.pieces[..at].iter().rev() {
            match piece {
                Piece::Text(t) => match t.rfind('\n') {
                    Some(nl) => {
                        label.insert_str(0, &t[nl + 1..]);
                        break;
                    }
                    None => label.insert_str(0, t),
                },
                Piece::Slot(Slot::LangName) => label.insert_str(0, lang_name),
                Piece::Slot(_) => break,
            }
        }
        label.trim().to_string()
    }

    fn prefix_before(&self, slot: Slot) -> Block {
        let at = self
            .pieces
            .iter()
            .position(|p| *p == Piece::Slot(slot))
            .unwrap_or(self.pieces.len());
        let mut pieces = self.pieces[..at].to_vec();
        if let Some(Piece::Text(t)) = pieces.last_mut() {
            let trimmed = t.trim_end_matches([' ', '\t']).len();
            t.truncate(trimmed);
            if t.is_empty() {
                pieces.pop();
            }
        }
        Block { pieces }
    }

    fn text_between(&self, from: usize, to: usize) -> String {
        self.pieces[from + 1..to]
            .iter()
            .map(|p| match p {
                Piece::Text(t) => t.as_str(),
                Piece::Slot(_) => "\u{0}",
            })
            .collect()
    }
}

/// The standard and gender-specific example blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    standard: Block,
    gendered: Block,
}

pub const DEFAULT_STANDARD_BLOCK: &str = "English: {src}\n{lang_name}: {tgt}";
pub const DEFAULT_GENDERED_BLOCK: &str =
    "English: {src}\n{lang_name} (masculine): {masc}\n{lang_name} (feminine): {fem}";

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates::from_blocks(DEFAULT_STANDARD_BLOCK, DEFAULT_GENDERED_BLOCK)
            .expect("built-in templates are valid")
    }
}

impl PromptTemplates {
    /// Builds templates from the two block bodies (without the trailing
    /// blank line, which is always added between blocks).
    pub fn from_blocks(standard: &str, gendered: &str) -> Result<Self, PromptError> {
        let standard = Block::parse(standard)?;
        let gendered = Block::parse(gendered)?;

        for (block, forbidden) in [
            (&standard, [Slot::Masc, Slot::Fem]),
            (&gendered, [Slot::Tgt, Slot::Tgt]),
        ] {
            if forbidden
                .iter()
                .any(|s| block.pieces.contains(&Piece::Slot(*s)))
            {
                return Err(PromptError::Template(
                    "placeholder used in the wrong template".into(),
                ));
            }
        }
        let src = standard.position(Slot::Src)?;
        let tgt = standard.position(Slot::Tgt)?;
        if src > tgt || standard.text_between(src, tgt).find('\n').is_none() {
            return Err(PromptError::Template(
                "standard: {src} must be on a line before {tgt}".into(),
            ));
        }
        if tgt + 1 != standard.pieces.len() {
            return Err(PromptError::Template(
                "standard: {tgt} must end the block".into(),
            ));
        }

        let src = gendered.position(Slot::Src)?;
        let masc = gendered.position(Slot::Masc)?;
        let fem = gendered.position(Slot::Fem)?;
        if !(src < masc && masc < fem) {
            return Err(PromptError::Template(
                "gendered: order must be {src}, {masc}, {fem}".into(),
            ));
        }
        if gendered.text_between(src, masc).find('\n').is_none() {
            return Err(PromptError::Template(
                "gendered: {masc} must be on a line after {src}".into(),
            ));
        }
        let between = gendered.text_between(masc, fem);
        if !between.starts_with('\n') || between[1..].contains('\n') {
            return Err(PromptError::Template(
                "gendered: {masc} must end its line and {fem} sit on the next one".into(),
            ));
        }
        if fem + 1 != gendered.pieces.len() {
            return Err(PromptError::Template(
                "gendered: {fem} must end the block".into(),
            ));
        }
        let templates = PromptTemplates { standard, gendered };
        for (label, what) in [
            (templates.gendered.line_label(Slot::Fem, "X"), "feminine"),
            (templates.gendered.line_label(Slot::Src, "X"), "source"),
            (templates.standard.line_label(Slot::Src, "X"), "source"),
        ] {
            if label.is_empty() {
                return Err(PromptError::Template(format!(
                    "the {what} line needs a label before its placeholder"
                )));
            }
        }
        Ok(templates)
    }

    /// Parses a template file.
    ///
    /// The file holds two sections introduced by the header lines
    /// `[standard]` and `[gendered]`. A section body runs until the next
    /// header; trailing blank lines are dropped. Lines starting with `#`
    /// before the first header are comments. Placeholders are `{src}`,
    /// `{tgt}`, `{masc}`, `{fem}` and `{lang_name}`; `{{` and `}}` stand for
    /// literal braces. The standard body must contain `{src}` and end with
    /// `{tgt}` on a later line; the gendered body must contain `{src}`, then
    /// `{masc}` ending a line, then `{fem}` ending the block on the
    /// following line.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let text = text
            .strip_prefix('\u{feff}')
            .unwrap_or(text)
            .replace("\r\n", "\n");
        let mut standard: Option<Vec<&str>> = None;
        let mut gendered: Option<Vec<&str>> = None;
        let mut current: Option<&mut Vec<&str>> = None;
        for line in text.split('\n') {
            match line.trim_end() {
                "[standard]" => {
                    if standard.is_some() {
                        return Err(PromptError::Template("duplicate [standard] section".into()));
                    }
                    current = Some(standard.insert(Vec::new()));
                }
                "[gendered]" => {
                    if gendered.is_some() {
                        return Err(PromptError::Template("duplicate [gendered] section".into()));
                    }
                    current = Some(gendered.insert(Vec::new()));
                }
                _ => match current.as_mut() {
                    Some(body) => body.push(line),
                    None if line.trim().is_empty() || line.starts_with('#') => {}
                    None => {
                        return Err(PromptError::Template(
                            "text before the first section".into(),
                        ))
                    }
                },
            }
        }
        let join = |lines: Option<Vec<&str>>, name: &str| -> Result<String, PromptError> {
            let mut lines =
                lines.ok_or_else(|| PromptError::Template(format!("missing [{name}] section")))?;
            while lines.last().is_some_and(|l| l.trim().is_empty()) {
                lines.pop();
            }
            Ok(lines.join("\n"))
        };
        PromptTemplates::from_blocks(&join(standard, "standard")?, &join(gendered, "gendered")?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PromptError::Template(format!("{}: {e}", path.as_ref().display())))?;
        PromptTemplates::parse(&text)
    }

    /// Label that opens a source line, e.g. `English:`.
    pub fn source_marker(&self, kind: TemplateKind, lang_name: &str) -> String {
        match kind {
            TemplateKind::Standard => self.standard.line_label(Slot::Src, lang_name),
            TemplateKind::GenderSpecific => self.gendered.line_label(Slot::Src, lang_name),
        }
    }

    /// Label that opens the masculine line, e.g. `Spanish (masculine):`.
    pub fn masculine_marker(&self, lang_name: &str) -> String {
        self.gendered.line_label(Slot::Masc, lang_name)
    }

    /// Label that opens the feminine line, e.g. `Spanish (feminine):`.
    pub fn feminine_marker(&self, lang_name: &str) -> String {
        self.gendered.line_label(Slot::Fem, lang_name)
    }
}

/// Settings for one prompting run.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptConfig {
    pub n_ices: usize,
    pub seed: u64,
    pub target_lang: String,
    pub target_lang_name: String,
    pub template_kind: TemplateKind,
    pub templates: PromptTemplates,
}

impl PromptConfig {
    pub const DEFAULT_N_ICES: usize = 8;

    pub fn new(
        target_lang: &str,
        target_lang_name: &str,
        template_kind: TemplateKind,
        seed: u64,
    ) -> Self {
        PromptConfig {
            n_ices: Self::DEFAULT_N_ICES,
            seed,
            target_lang: target_lang.to_string(),
            target_lang_name: target_lang_name.to_string(),
            template_kind,
            templates: PromptTemplates::default(),
        }
    }

    pub fn with_kind(&self, template_kind: TemplateKind) -> Self {
        PromptConfig {
            template_kind,
            ..self.clone()
        }
    }
}

/// The sentence to translate. Queries from the reference set carry their
/// template key so that examples built on the same template are skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptQuery {
    pub id: String,
    pub source: String,
    pub template_key: Option<String>,
}

impl From<&MhbEntry> for PromptQuery {
    fn from(e: &MhbEntry) -> Self {
        PromptQuery {
            id: e.id.clone(),
            source: e.source.clone(),
            template_key: Some(e.template_key.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub query_id: String,
    pub ice_ids: Vec<String>,
}

/// Draws `config.n_ices` in-context examples for `query`.
///
/// Entries in another language, the query itself, entries sharing its
/// template key and, for the gender-specific template, entries without both
/// gendered references are not eligible. The draw is uniform without
/// replacement and depends only on `(config.seed, query.id)`.
pub fn select_ices<'a>(
    pool: &'a [MhbEntry],
    query: &PromptQuery,
    config: &PromptConfig,
) -> Result<Vec<&'a MhbEntry>, PromptError> {
    let eligible: Vec<&MhbEntry> = pool
        .iter()
        .filter(|e| e.lang.eq_ignore_ascii_case(&config.target_lang))
        .filter(|e| e.id != query.id)
        .filter(|e| query.template_key.as_deref() != Some(e.template_key.as_str()))
        .filter(|e| match config.template_kind {
            TemplateKind::GenderSpecific => e.has_both_genders(),
            TemplateKind::Standard => !e.references().is_empty(),
        })
        .collect();
    if eligible.len() < config.n_ices {
        return Err(PromptError::InsufficientPool {
            available: eligible.len(),
            required: config.n_ices,
        });
    }
    let kind = match config.template_kind {
        TemplateKind::Standard => "standard",
        TemplateKind::GenderSpecific => "gendered",
    };
    let mut rng = rng_for(config.seed, &["ices", kind, &query.id]);
    Ok(index::sample(&mut rng, eligible.len(), config.n_ices)
        .into_iter()
        .map(|i| eligible[i])
        .collect())
}

fn check_query(
    ices: &[&MhbEntry],
    query: &PromptQuery,
    config: &PromptConfig,
) -> Result<Vec<String>, PromptError> {
    if config.target_lang_name.trim().is_empty() {
        return Err(PromptError::EmptyLanguageName);
    }
    if ices.iter().any(|e| e.id == query.id) {
        return Err(PromptError::QueryAmongExamples(query.id.clone()));
    }
    Ok(ices.iter().map(|e| e.id.clone()).collect())
}

/// Renders the single-target template. When an example has several
/// references one is picked uniformly, seeded by `(seed, query id)`.
pub fn render_standard(
    ices: &[&MhbEntry],
    query: &PromptQuery,
    config: &PromptConfig,
) -> Result<RenderedPrompt, PromptError> {
    let ice_ids = check_query(ices, query, config)?;
    let block = &config.templates.standard;
    let lang_name = config.target_lang_name.as_str();
    let mut rng = rng_for(config.seed, &["standard-refs", &query.id]);
    let mut text = String::new();
    for ice in ices {
        let refs = ice.references();
        if refs.is_empty() {
            return Err(PromptError::NoReference(ice.id.clone()));
        }
        let target = refs[rng.gen_range(0..refs.len())];
        block.render(&mut text, lang_name, &|slot| match slot {
            Slot::Src => Some(ice.source.as_str()),
            Slot::Tgt => Some(target),
            _ => None,
        });
        text.push_str("\n\n");
    }
    block
        .prefix_before(Slot::Tgt)
        .render(&mut text, lang_name, &|slot| match slot {
            Slot::Src => Some(query.source.as_str()),
            _ => None,
        });
    Ok(RenderedPrompt {
        text,
        query_id: query.id.clone(),
        ice_ids,
    })
}

/// Renders the gender-specific template, ending on the masculine label.
pub fn render_gender_specific(
    ices: &[&MhbEntry],
    query: &PromptQuery,
    config: &PromptConfig,
) -> Result<RenderedPrompt, PromptError> {
    let ice_ids = check_query(ices, query, config)?;
    let block = &config.templates.gendered;
    let lang_name = config.target_lang_name.as_str();
    let mut text = String::new();
    for ice in ices {
        let (Some(masc), Some(fem)) = (ice.masc.as_deref(), ice.fem.as_deref()) else {
            return Err(PromptError::MissingGenderReference(ice.id.clone()));
        };
        block.render(&mut text, lang_name, &|slot| match slot {
            Slot::Src => Some(ice.source.as_str()),
            Slot::Masc => Some(masc),
            Slot::Fem => Some(fem),
            _ => None,
        });
        text.push_str("\n\n");
    }
    block
        .prefix_before(Slot::Masc)
        .render(&mut text, lang_name, &|slot| match slot {
            Slot::Src => Some(query.source.as_str()),
            _ => None,
        });
    Ok(RenderedPrompt {
        text,
        query_id: query.id.clone(),
        ice_ids,
    })
}

/// Renders whichever template `config.template_kind` names.
pub fn render(
    ices: &[&MhbEntry],
    query: &PromptQuery,
    config: &PromptConfig,
) -> Result<RenderedPrompt, PromptError> {
    match config.template_kind {
        TemplateKind::Standard => render_standard(ices, query, config),
        TemplateKind::GenderSpecific => render_gender_specific(ices, query, config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationStatus {
    Complete,
    Partial,
    Empty,
}

impl GenerationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            GenerationStatus::Complete => "complete",
            GenerationStatus::Partial => "partial",
            GenerationStatus::Empty => "empty",
        }
    }
}

impl fmt::Display for GenerationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Masculine and feminine outputs of one gender-specific generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderedTranslation {
    pub masc: Option<String>,
    pub fem: Option<String>,
    pub status: GenerationStatus,
}

impl GenderedTranslation {
    /// Derives the status from which sides are present; blank sides count
    /// as absent.
    pub fn new(masc: Option<String>, fem: Option<String>) -> Self {
        let keep = |s: Option<String>| s.filter(|s| !s.trim().is_empty());
        let (masc, fem) = (keep(masc), keep(fem));
        let status = match (masc.is_some(), fem.is_some()) {
            (true, true) => GenerationStatus::Complete,
            (false, false) => GenerationStatus::Empty,
            _ => GenerationStatus::Partial,
        };
        GenderedTranslation { masc, fem, status }
    }
}

fn starts_with_marker(line: &str, marker: &str) -> bool {
    !marker.is_empty() && line.trim_start().starts_with(marker)
}

fn join_capture(lines: &[&str]) -> Option<String> {
    let joined = lines
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    (!joined.is_empty()).then_some(joined)
}

/// Splits the continuation of a gender-specific prompt into its masculine
/// and feminine parts.
///
/// The masculine part runs from the start (leading whitespace skipped) to
/// the feminine label line; the feminine part runs from that label to the
/// first blank line, source label, repeated gender label, or end of text.
/// Multi-line captures are joined with single spaces. Never fails.
pub fn parse_gendered_output(completion: &str, config: &PromptConfig) -> GenderedTranslation {
    let lang_name = config.target_lang_name.as_str();
    let fem_marker = config.templates.feminine_marker(lang_name);
    let masc_marker = config.templates.masculine_marker(lang_name);
    let src_marker = config
        .templates
        .source_marker(TemplateKind::GenderSpecific, lang_name);

    let normalized = completion.replace("\r\n", "\n");
    let mut lines = normalized.trim_start().split('\n');

    let mut masc_lines = Vec::new();
    let mut fem_first: Option<&str> = None;
    for line in lines.by_ref() {
        if starts_with_marker(line, &fem_marker) {
            fem_first = Some(&line.trim_start()[fem_marker.len()..]);
            break;
        }
        if line.trim().is_empty()
            || starts_with_marker(line, &src_marker)
            || starts_with_marker(line, &masc_marker)
        {
            break;
        }
        masc_lines.push(line);
    }

    let fem = fem_first.and_then(|first| {
        let mut fem_lines = vec![first];
        for line in lines {
            if line.trim().is_empty()
                || starts_with_marker(line, &src_marker)
                || starts_with_marker(line, &fem_marker)
                || starts_with_marker(line, &masc_marker)
            {
                break;
            }
            fem_lines.push(line);
        }
        join_capture(&fem_lines)
    });
    GenderedTranslation::new(join_capture(&masc_lines), fem)
}

/// First line of a standard-template continuation, trimmed; blank means
/// no output.
pub fn parse_standard_output(completion: &str, _config: &PromptConfig) -> Option<String> {
    let first = completion.split('\n').next().unwrap_or("").trim();
    (!first.is_empty()).then(|| first.to_string())
}
