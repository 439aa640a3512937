//! The sweep --param flag navigates arbitrary user JSON by a dotted
//! path. First input line is the path, the rest is the document.

#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_cli::sweep::set_numeric_field;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Some((path, body)) = text.split_once('\n') else {
        return;
    };
    let Ok(mut doc) = serde_json::from_str::<serde_json::Value>(body) else {
        return;
    };
    let _ = set_numeric_field(&mut doc, path, 1.5);
});
