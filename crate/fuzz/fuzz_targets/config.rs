#![no_main]

use libfuzzer_sys::fuzz_target;
use ringsig_harness::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        // Hashing walks every field; it must not panic on anything the
        // parser accepted.
        let _ = cfg.hash();
        let _ = cfg.validate();
    }
});
