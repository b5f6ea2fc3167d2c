#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_core::formats::{parse_mask, write_mask};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mask) = parse_mask(text) {
        let again = parse_mask(&write_mask(&mask)).expect("written mask must parse");
        assert_eq!(again, mask);
    }
});
