#![no_main]

use gendertx::corpus::parse_mhb;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(loaded) = parse_mhb(text, "spa") {
        for entry in &loaded.items {
            assert!(!entry.references().is_empty());
        }
    }
});
