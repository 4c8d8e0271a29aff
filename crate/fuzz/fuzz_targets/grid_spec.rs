#![no_main]

use libfuzzer_sys::fuzz_target;
use schottky_kp::config::parse_grid_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = parse_grid_spec(text) {
        // the point count is capped by the parser; materializing must be safe
        let pts = spec.points();
        let _ = pts.len();
    }
});
