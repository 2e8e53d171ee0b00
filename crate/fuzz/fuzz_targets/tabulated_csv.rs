#![no_main]

use libfuzzer_sys::fuzz_target;
use rpe_core::io::parse_tabulated_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(values) = parse_tabulated_csv(text) {
            assert!(!values.is_empty());
            assert!(values.iter().all(|v| v.is_finite()));
        }
    }
});
