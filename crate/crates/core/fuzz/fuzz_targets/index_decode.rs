#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(index) = cluefuse::index::decode_index(data) {
        let again = cluefuse::index::encode_index(&index);
        assert_eq!(cluefuse::index::decode_index(&again).unwrap(), index);
        let _ = index.search("q", "a b c", 10);
    }
});
