#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = cluefuse_cli::config::ConfigFile::parse(text) {
            let _ = cluefuse_cli::config::PipelineConfig::from_file(file).validate();
        }
    }
});
