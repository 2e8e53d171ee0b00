#![no_main]

use libfuzzer_sys::fuzz_target;
use rpe_core::suzuki::SuzukiPlan;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(plan) = SuzukiPlan::from_json(text) {
            let again = SuzukiPlan::from_json(&plan.to_json().expect("serializable")).expect("round trip");
            assert_eq!(plan, again);
            // the lazy step iterator must agree with the declared counts
            if plan.exponentials <= 100_000 {
                assert_eq!(plan.steps().count() as u64, plan.exponentials);
            }
        }
    }
});
