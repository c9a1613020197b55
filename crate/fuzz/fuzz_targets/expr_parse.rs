#![no_main]

use ctrldet::symreg::parse_expressions;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(exprs) = parse_expressions(text) {
        for e in &exprs {
            let x = vec![0.5; e.arity()];
            let _ = e.eval(&x);
        }
    }
});
