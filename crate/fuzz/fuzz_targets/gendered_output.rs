#![no_main]

use gendertx::prompting::parse_gendered_output;
use gendertx::{GenerationStatus, PromptConfig, TemplateKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let config = PromptConfig::new("spa", "Spanish", TemplateKind::GenderSpecific, 0);
    let out = parse_gendered_output(text, &config);
    let expected = match (out.masc.is_some(), out.fem.is_some()) {
        (true, true) => GenerationStatus::Complete,
        (false, false) => GenerationStatus::Empty,
        _ => GenerationStatus::Partial,
    };
    assert_eq!(out.status, expected);
});
