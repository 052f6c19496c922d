#![no_main]

use libfuzzer_sys::fuzz_target;
use rfisst::scenario::{generate_scenario, ScenarioConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ScenarioConfig::from_json(text) else {
        return;
    };
    // keep each input cheap
    if cfg.object_count > 64 || cfg.total_scans() > 3000 || cfg.sensor.clutter_rate > 50.0 {
        return;
    }
    if let Ok(scn) = generate_scenario(&cfg) {
        assert_eq!(scn.total_scans(), cfg.total_scans());
        assert_eq!(scn.truth.at(scn.total_scans()).len(), cfg.object_count);
    }
});
