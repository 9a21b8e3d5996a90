#![no_main]

use libfuzzer_sys::fuzz_target;
use qsslab::adversary::AttackPlan;
use qsslab::nonces::{builtin_nonce_set, BuiltinNonceSet};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(plan) = AttackPlan::from_json(text) {
        let again = AttackPlan::from_json(&plan.to_json()).expect("own output parses");
        assert_eq!(again.v_table.len(), plan.v_table.len());
        // Mismatch must be reported, never panic.
        let _ = plan.check_against(&builtin_nonce_set(BuiltinNonceSet::ProposedJ));
    }
});
