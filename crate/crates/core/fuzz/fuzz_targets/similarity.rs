#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let (a, b) = text.split_once('\n').unwrap_or((&text, ""));
    for r in [cluefuse::clues::similarity_ratio(a, b), cluefuse::clues::levenshtein_ratio(a, b)] {
        assert!((0.0..=1.0).contains(&r));
    }
    assert_eq!(cluefuse::clues::similarity_ratio(a, a), 1.0);
});
