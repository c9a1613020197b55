#![no_main]

use ctrldet::mtbdd::decode;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((m, root)) = decode(data) {
        let bytes = m.serialize(root);
        let (again, again_root) = decode(&bytes).expect("re-encoded diagram decodes");
        assert_eq!(again.serialize(again_root), bytes);
    }
});
