#![no_main]

use libfuzzer_sys::fuzz_target;
use rfisst::scenario::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ScenarioConfig::from_json(text) {
        // accepted configs survive a round trip
        let again = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json(&again).unwrap();
        assert_eq!(back.total_scans(), cfg.total_scans());
        assert_eq!(back.object_count, cfg.object_count);
    }
});
