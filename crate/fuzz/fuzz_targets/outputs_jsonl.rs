#![no_main]

use gendertx::experiments::TranslationRun;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = TranslationRun::parse(text, "fuzz.jsonl");
});
