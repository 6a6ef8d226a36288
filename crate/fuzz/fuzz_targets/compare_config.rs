#![no_main]

use libfuzzer_sys::fuzz_target;
use rankloss::config::CompareConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = CompareConfig::from_json(text) {
        // a resolved config reparses to itself
        let again = serde_json::to_string(&config).unwrap();
        assert_eq!(CompareConfig::from_json(&again).unwrap(), config);
    }
});
