#![no_main]

use libfuzzer_sys::fuzz_target;
use shedline::cli::HarnessConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(config) = serde_json::from_slice::<HarnessConfig>(data) else {
        return;
    };
    if config.validate().is_ok() {
        let _ = config.warnings();
    }
});
