#![no_main]

use gendertx::prompting::PromptTemplates;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = PromptTemplates::parse(text) {
        assert!(!t.feminine_marker("Spanish").is_empty());
    }
});
