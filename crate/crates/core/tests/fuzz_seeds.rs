//! Feeds the checked-in fuzz corpus through each parser entry point so the
//! seeds stay meaningful without a fuzzing toolchain.

use std::path::Path;

use gendertx::backends::{EndpointConfig, ReplayMode, ReplayStore};
use gendertx::corpus::{parse_bug, parse_mhb, parse_parallel};
use gendertx::experiments::{ExperimentReport, Manifest, TranslationRun};
use gendertx::genderbias::{predict_gender, GenderLexicon};
use gendertx::prompting::{parse_gendered_output, parse_standard_output, PromptTemplates};
use gendertx::{GenerationStatus, PromptConfig, TemplateKind};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn gendered_output_seeds() {
    let cfg = PromptConfig::new("spa", "Spanish", TemplateKind::GenderSpecific, 0);
    let statuses: Vec<GenerationStatus> = seeds("gendered_output")
        .iter()
        .map(|(_, t)| parse_gendered_output(t, &cfg).status)
        .collect();
    for status in [
        GenerationStatus::Complete,
        GenerationStatus::Partial,
        GenerationStatus::Empty,
    ] {
        assert!(statuses.contains(&status));
    }
    for (_, text) in seeds("standard_output") {
        let _ = parse_standard_output(&text, &cfg);
    }
}

#[test]
fn tabular_seeds() {
    for (name, text) in seeds("mhb_tsv") {
        if name != "header_only" {
            assert!(!parse_mhb(&text, "spa").unwrap().items.is_empty(), "{name}");
        }
    }
    for (name, text) in seeds("bug_tsv") {
        parse_bug(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("parallel") {
        let (s, r) = text.split_once('\0').unwrap();
        assert!(!parse_parallel(s, r, "spa").unwrap().is_empty(), "{name}");
    }
    for (name, text) in seeds("lexicon") {
        let (lexicon, translation) = text.split_once('\0').unwrap();
        let lexicon = GenderLexicon::parse(lexicon).unwrap_or_else(|e| panic!("{name}: {e}"));
        predict_gender("seed", translation, "doctor", &lexicon, "spa").unwrap();
    }
}

#[test]
fn config_and_store_seeds() {
    for (name, text) in seeds("templates") {
        PromptTemplates::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("replay_store") {
        let parsed = ReplayStore::parse(&text, ReplayMode::Replay);
        assert_eq!(parsed.is_ok(), name != "bad_digest", "{name}");
    }
    for (name, text) in seeds("endpoint_config") {
        EndpointConfig::from_toml(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("manifest") {
        Manifest::from_toml(&text, ".").unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("report_csv") {
        let report = ExperimentReport::parse_csv(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(
            ExperimentReport::parse_csv(&report.to_csv()).unwrap(),
            report.rounded()
        );
    }
    for (name, text) in seeds("outputs_jsonl") {
        TranslationRun::parse(&text, &name).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
