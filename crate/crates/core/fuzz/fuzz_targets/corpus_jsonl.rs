#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(passages) = cluefuse::corpus::read_corpus(data) {
        for p in &passages {
            assert!(!p.id.is_empty());
        }
    }
});
