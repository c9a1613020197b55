#![no_main]

use ctrldet::controller::{parse_ctl, write_ctl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ctrl) = parse_ctl(text) {
        let written = write_ctl(&ctrl);
        assert_eq!(parse_ctl(&written).expect("written controller parses"), ctrl);
    }
});
