#![no_main]

use ctrldet::symreg::SrConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = SrConfig::parse(text) {
        assert!(cfg.validate().is_ok());
    }
});
