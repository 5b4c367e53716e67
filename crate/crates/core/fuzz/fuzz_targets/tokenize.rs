#![no_main]

use cluefuse::index::{tokenize, Stemming, TokenizerConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    for stemming in [Stemming::None, Stemming::Porter] {
        let cfg = TokenizerConfig {
            stemming,
            stopword_removal: true,
            ..TokenizerConfig::default()
        };
        for t in tokenize(&text, &cfg) {
            assert!(!t.is_empty());
        }
    }
});
