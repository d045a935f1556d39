#![no_main]

use libfuzzer_sys::fuzz_target;
use shedline::model::{normalize, Url};

fuzz_target!(|data: &str| {
    let once = normalize(data);
    assert_eq!(normalize(&once), once);
    match Url::parse(data) {
        Ok(url) => assert_eq!(url.as_str(), once),
        Err(_) => assert!(once.is_empty()),
    }
});
