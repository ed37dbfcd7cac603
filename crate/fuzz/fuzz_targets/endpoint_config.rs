#![no_main]

use gendertx::backends::EndpointConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = EndpointConfig::from_toml(text);
});
