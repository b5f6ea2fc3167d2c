#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_core::formats::{parse_solver_sidecar, write_solver_sidecar};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(value) = parse_solver_sidecar(text) {
        let again = parse_solver_sidecar(&write_solver_sidecar(&value)).expect("written value must parse");
        assert_eq!(again, value);
    }
});
