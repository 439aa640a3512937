//! The sweep --values flag parses a comma-separated number list
//! straight from the command line.

#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_cli::sweep::parse_values;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_values(text);
});
