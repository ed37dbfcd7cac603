#![no_main]

use gendertx::genderbias::{predict_gender, GenderLexicon};
use libfuzzer_sys::fuzz_target;

// lexicon text, then a NUL byte and a translation to look entities up in
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (lexicon, translation) = text.split_once('\0').unwrap_or((text, ""));
    if let Ok(lexicon) = GenderLexicon::parse(lexicon) {
        let _ = predict_gender("f", translation, "doctor", &lexicon, "spa");
    }
});
