#![no_main]

use gendertx::corpus::parse_parallel;
use libfuzzer_sys::fuzz_target;

// source and reference text separated by a NUL byte
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (source, reference) = text.split_once('\0').unwrap_or((text, ""));
    let _ = parse_parallel(source, reference, "spa");
});
