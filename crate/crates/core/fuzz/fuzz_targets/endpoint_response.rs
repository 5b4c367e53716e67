#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(body) = std::str::from_utf8(data) {
        let _ = cluefuse::clues::parse_endpoint_response(body, "q", "context");
    }
});
