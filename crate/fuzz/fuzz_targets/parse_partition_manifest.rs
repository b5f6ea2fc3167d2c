#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_core::formats::{parse_partition_manifest, write_partition_manifest};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(value) = parse_partition_manifest(text) {
        let again = parse_partition_manifest(&write_partition_manifest(&value)).expect("written value must parse");
        assert_eq!(again, value);
    }
});
