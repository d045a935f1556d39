#![no_main]

use libfuzzer_sys::fuzz_target;
use shedline::trust_cache::TrustCache;

fuzz_target!(|data: &[u8]| {
    // Whole-file reader: any accepted file must survive a save/load cycle.
    let Ok(cache) = TrustCache::read_from(data) else {
        return;
    };
    let mut buf = Vec::new();
    cache.write_to(&mut buf).expect("in-memory write");
    let reloaded = TrustCache::read_from(buf.as_slice()).expect("own output parses");
    assert!(reloaded == cache);
    for entry in cache.entries() {
        assert!((0.0..=5.0).contains(&entry.score.value()));
    }
});
