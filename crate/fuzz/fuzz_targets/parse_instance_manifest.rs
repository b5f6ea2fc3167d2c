#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_core::formats::{parse_instance_manifest, write_instance_manifest};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(value) = parse_instance_manifest(text) {
        let written = write_instance_manifest(&value).expect("parsed manifest must serialize");
        assert_eq!(parse_instance_manifest(&written).expect("written manifest must parse"), value);
    }
});
