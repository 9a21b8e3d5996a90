#![no_main]

use libfuzzer_sys::fuzz_target;
use qsslab::nonces::NonceSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(set) = NonceSet::from_json(text) {
        // Anything accepted must survive a round trip unchanged in size.
        let back = NonceSet::from_json(&set.to_json()).expect("own output parses");
        assert_eq!(back.len(), set.len());
    }
});
