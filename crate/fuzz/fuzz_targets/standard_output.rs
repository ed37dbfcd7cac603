#![no_main]

use gendertx::prompting::parse_standard_output;
use gendertx::{PromptConfig, TemplateKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let config = PromptConfig::new("spa", "Spanish", TemplateKind::Standard, 0);
    if let Some(out) = parse_standard_output(text, &config) {
        assert!(!out.is_empty() && !out.contains('\n'));
    }
});
