//! Scenario files come from users, so the parser must reject any
//! byte soup without panicking. Valid parses additionally go through
//! the diagnostics pass, which must also never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use maglev_sim::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(scenario) = Scenario::from_json(text) {
        let _ = scenario.diagnostics();
    }
});
