#![no_main]

use libfuzzer_sys::fuzz_target;
use schottky_kp::config::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ScenarioConfig::from_json(text) else {
        return;
    };
    let _ = cfg.to_json();
    let Ok(scenario) = cfg.to_domain() else {
        return;
    };
    // classification walks the graph; it must be total
    let _ = scenario.classify();
    let _ = scenario.tree();
});
