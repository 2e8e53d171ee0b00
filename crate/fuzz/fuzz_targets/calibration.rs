#![no_main]

use libfuzzer_sys::fuzz_target;
use rpe_core::calibration::Calibration;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cal) = Calibration::parse(text) {
            assert!(cal.constants.iter().all(|c| c.value.is_finite()));
        }
    }
});
