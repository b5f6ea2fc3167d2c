#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_harness::config::{parse_config, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_config(text) {
        let mut config = ExperimentConfig::default();
        if config.apply(&file).is_ok() {
            let _ = config.validate();
        }
    }
});
