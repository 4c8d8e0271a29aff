#![no_main]

use libfuzzer_sys::fuzz_target;
use schottky_kp::config::SolitonConfig;
use schottky_kp::C64;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = SolitonConfig::from_json(text) else {
        return;
    };
    let Ok(soliton) = cfg.to_domain() else {
        return;
    };
    // 2^g terms: keep bounded, evaluation must not panic
    if soliton.genus() <= 6 && soliton.offsets.iter().all(|n| n.abs() <= 4) {
        let t = vec![C64::new(0.1, 0.0); soliton.times];
        let _ = soliton.tau(&t);
        let _ = soliton.u(0.0, 0.0, 0.0);
    }
});
