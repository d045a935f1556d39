#![no_main]

use std::collections::HashSet;

use libfuzzer_sys::fuzz_target;
use shedline::cli::read_url_list;

fuzz_target!(|data: &str| {
    let urls = read_url_list(data);
    let distinct: HashSet<_> = urls.iter().collect();
    assert_eq!(distinct.len(), urls.len());
    assert!(urls.len() <= data.lines().count());
});
