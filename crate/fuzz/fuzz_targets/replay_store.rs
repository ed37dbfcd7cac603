#![no_main]

use gendertx::backends::{ReplayMode, ReplayStore};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(store) = ReplayStore::parse(text, ReplayMode::Replay) {
        let again = ReplayStore::parse(&store.to_jsonl(), ReplayMode::Replay).unwrap();
        assert_eq!(again.len(), store.len());
    }
});
