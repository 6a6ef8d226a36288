#![no_main]

use libfuzzer_sys::fuzz_target;
use rankloss::data::SyntheticSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = serde_json::from_slice::<SyntheticSpec>(data) else {
        return;
    };
    // only validation here; generation size is unbounded
    let _ = spec.validate();
});
