use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::backends::{ReplayMode, DEFAULT_MAX_TOKENS, DEFAULT_PARALLELISM, DEFAULT_STOP};
use crate::metrics::{BleuConfig, ChrfConfig, Tokenization};
use crate::prompting::{PromptConfig, PromptTemplates, TemplateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MhbPanel,
    BugBias,
    FloresDelta,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::MhbPanel => "mhb-panel",
            Experiment::BugBias => "bug-bias",
            Experiment::FloresDelta => "flores-delta",
        }
    }

    pub fn parse(s: &str) -> Option<Experiment> {
        match s {
            "mhb-panel" => Some(Experiment::MhbPanel),
            "bug-bias" => Some(Experiment::BugBias),
            "flores-delta" => Some(Experiment::FloresDelta),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_backend_id() -> String {
    "replay".into()
}

fn default_parallelism() -> usize {
    DEFAULT_PARALLELISM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    /// Label recorded in report headers.
    #[serde(default = "default_backend_id")]
    pub id: String,
    pub replay_store: PathBuf,
    #[serde(default)]
    pub mode: ReplayMode,
    /// Endpoint config used when the mode records.
    pub endpoint: Option<PathBuf>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_n_ices() -> usize {
    PromptConfig::DEFAULT_N_ICES
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}

fn default_stop() -> Vec<String> {
    DEFAULT_STOP.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptSection {
    pub seed: u64,
    #[serde(default = "default_n_ices")]
    pub n_ices: usize,
    pub templates: Option<PathBuf>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_stop")]
    pub stop: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub tokenization: Tokenization,
    pub bleu_max_order: usize,
    pub smoothing_k: f64,
    pub chrf_char_order: usize,
    pub chrf_beta: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let bleu = BleuConfig::default();
        let chrf = ChrfConfig::default();
        MetricsSection {
            tokenization: Tokenization::default(),
            bleu_max_order: bleu.max_order,
            smoothing_k: bleu.smoothing_k,
            chrf_char_order: chrf.char_order,
            chrf_beta: chrf.beta,
        }
    }
}

impl MetricsSection {
    pub fn bleu(&self) -> BleuConfig {
        BleuConfig {
            max_order: self.bleu_max_order,
            smoothing_k: self.smoothing_k,
        }
    }

    pub fn chrf(&self) -> ChrfConfig {
        ChrfConfig {
            char_order: self.chrf_char_order,
            beta: self.chrf_beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Gendered reference set; always needed as the in-context example pool.
    pub mhb: PathBuf,
    pub bug: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub flores_source: Option<PathBuf>,
    #[serde(default)]
    pub flores_references: BTreeMap<String, PathBuf>,
    /// Precomputed single-output translations per language, one line per
    /// query in dataset order.
    #[serde(default)]
    pub nmt_outputs: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub seed: u64,
    pub n_per_stratum: Option<usize>,
}

/// Declarative description of one experiment run. See the README for the
/// file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiment: Experiment,
    pub languages: Vec<String>,
    pub output_dir: PathBuf,
    pub backend: BackendSection,
    pub prompt: PromptSection,
    #[serde(default)]
    pub language_names: BTreeMap<String, String>,
    #[serde(default)]
    pub metrics: MetricsSection,
    pub data: DataSection,
    pub sampling: Option<SamplingSection>,
    #[serde(skip)]
    base_dir: PathBuf,
}

/// Display names for the languages with grammatical gender handled by
/// default; anything else needs a `[language_names]` entry.
pub fn default_language_name(code: &str) -> Option<&'static str> {
    Some(match code {
        "arb" => "Arabic",
        "cat" => "Catalan",
        "ces" => "Czech",
        "deu" => "German",
        "est" => "Estonian",
        "fra" => "French",
        "ita" => "Italian",
        "nld" => "Dutch",
        "por" => "Portuguese",
        "ron" => "Romanian",
        "rus" => "Russian",
        "slv" => "Slovenian",
        "spa" => "Spanish",
        "swe" => "Swedish",
        "ukr" => "Ukrainian",
        _ => return None,
    })
}

impl Manifest {
    /// Parses TOML; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ExperimentError> {
        let mut manifest: Manifest =
            toml::from_str(text).map_err(|e| ExperimentError::Manifest(e.to_string()))?;
        manifest.base_dir = base_dir.into();
        manifest.languages = manifest
            .languages
            .iter()
            .map(|l| l.trim().to_ascii_lowercase())
            .collect();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Manifest(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Manifest::from_toml(&text, base)
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Manifest(m));
        if self.languages.is_empty() {
            return bad("`languages` is empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for lang in &self.languages {
            if !seen.insert(lang) {
                return bad(format!("language `{lang}` listed twice"));
            }
            if self.language_name(lang).is_none() {
                return bad(format!(
                    "no display name for `{lang}`; add it under [language_names]"
                ));
            }
        }
        if self.backend.parallelism == 0 {
            return bad("backend.parallelism must be at least 1".into());
        }
        if self.backend.mode != ReplayMode::Replay && self.backend.endpoint.is_none() {
            return bad("recording modes need backend.endpoint".into());
        }
        match self.experiment {
            Experiment::MhbPanel => {}
            Experiment::BugBias => {
                if self.data.bug.is_none() {
                    return bad("bug-bias needs data.bug".into());
                }
                if self.sampling.is_none() {
                    return bad("bug-bias needs a [sampling] section with an explicit seed".into());
                }
            }
            Experiment::FloresDelta => {
                if self.data.flores_source.is_none() {
                    return bad("flores-delta needs data.flores_source".into());
                }
                if let Some(lang) = self
                    .languages
                    .iter()
                    .find(|l| !self.data.flores_references.contains_key(*l))
                {
                    return bad(format!("no data.flores_references entry for `{lang}`"));
                }
            }
        }
        Ok(())
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// `path` relative to the manifest's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn language_name(&self, lang: &str) -> Option<String> {
        self.language_names
            .get(lang)
            .cloned()
            .or_else(|| default_language_name(lang).map(str::to_string))
    }

    /// SHA-256 of the manifest's canonical JSON form.
    pub fn digest(&self) -> String {
        crate::sha256_hex(serde_json::to_string(self).expect("manifest serializes"))
    }

    pub fn templates(&self) -> Result<PromptTemplates, ExperimentError> {
        match &self.prompt.templates {
            Some(p) => Ok(PromptTemplates::load(self.resolve(p))?),
            None => Ok(PromptTemplates::default()),
        }
    }

    pub fn prompt_config(
        &self,
        lang: &str,
        templates: &PromptTemplates,
        kind: TemplateKind,
    ) -> PromptConfig {
        PromptConfig {
            n_ices: self.prompt.n_ices,
            seed: self.prompt.seed,
            target_lang: lang.to_string(),
            target_lang_name: self.language_name(lang).unwrap_or_default(),
            template_kind: kind,
            templates: templates.clone(),
        }
    }
}
