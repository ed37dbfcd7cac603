#![no_main]

use gendertx::experiments::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = Manifest::from_toml(text, ".") {
        let _ = m.digest();
    }
});
