//! Gender-specific translation harness.
//!
//! The crate covers the whole loop of eliciting masculine and feminine
//! translations from a prompt-driven completion backend and scoring them:
//!
//! * [`corpus`] loads gendered reference sets, coreference bias records and
//!   parallel text, and draws stratum-balanced samples.
//! * [`prompting`] picks in-context examples, renders the standard and the
//!   gender-specific templates, and parses completions.
//! * [`backends`] defines the completion contract with an HTTP client and a
//!   digest-keyed replay store.
//! * [`metrics`] implements corpus BLEU (multi-reference, add-k smoothing)
//!   and chrF from scratch.
//! * [`genderbias`] predicts entity gender from translations with a form
//!   lexicon and aggregates accuracy and the male/female gap.
//! * [`experiments`] wires everything into manifest-driven runs that emit
//!   CSV and Markdown reports.

pub mod backends;
pub mod corpus;
pub mod experiments;
pub mod genderbias;
pub mod metrics;
pub mod prompting;

mod seeded;
mod tsv;

pub use corpus::{BugRecord, Gender, MhbEntry, ParallelPair, Stereotype};
pub use prompting::{GenderedTranslation, GenerationStatus, PromptConfig, TemplateKind};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes.as_ref()))
}
