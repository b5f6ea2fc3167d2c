#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_harness::records::{parse_records_csv, write_records_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_records_csv(text) {
        let written = write_records_csv(&records).expect("parsed records must serialize");
        let again = parse_records_csv(&written).expect("written records must parse");
        assert_eq!(again.len(), records.len());
    }
});
