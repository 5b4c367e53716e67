#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = cluefuse::clues::read_clue_file(data, "context") {
        for set in map.values() {
            for c in &set.clues {
                assert!(c.logprob.is_finite() && c.logprob <= 0.0);
            }
            if !set.clues.is_empty() {
                let clusters = cluefuse::clues::cluster_clues(&set.clues, 0.8).unwrap();
                let kept = cluefuse::clues::filter_clues(&clusters);
                let w = cluefuse::clues::normalize_weights(&kept).unwrap();
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
});
