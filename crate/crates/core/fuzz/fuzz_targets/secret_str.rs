#![no_main]

use libfuzzer_sys::fuzz_target;
use qsslab::nonces::{BuiltinNonceSet, NonceSet, Secret};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = text.parse::<Secret>() {
        assert_eq!(s.to_string(), text);
    }
    let _ = text.parse::<BuiltinNonceSet>();
    let _ = NonceSet::by_name(text);
});
