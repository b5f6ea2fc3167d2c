#![no_main]

use libfuzzer_sys::fuzz_target;
use lowrank_core::formats::{parse_matrix, write_matrix};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_matrix(text) {
        let again = parse_matrix(&write_matrix(&m)).expect("written matrix must parse");
        assert_eq!(again.shape(), m.shape());
        assert!(again.as_slice().iter().zip(m.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
});
