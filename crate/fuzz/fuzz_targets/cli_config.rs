#![no_main]

use libfuzzer_sys::fuzz_target;
use rpe_core::config::CliConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = CliConfig::parse(text) {
            // anything accepted must survive a dump and re-parse unchanged
            let dumped = cfg.to_json().expect("serializable");
            let again = CliConfig::parse(&dumped).expect("dumped config parses");
            assert_eq!(cfg, again);
        }
    }
});
