#![no_main]

use libfuzzer_sys::fuzz_target;
use schottky_kp::config::CurveConfig;
use schottky_kp::graph::instantiate_group;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = CurveConfig::from_json(text) else {
        return;
    };
    // parsing, validation and canonical re-emission must never panic
    let _ = cfg.to_json();
    let Ok((graph, params)) = cfg.to_domain() else {
        return;
    };
    // keep the numeric part bounded
    if graph.vertices.len() <= 6 && graph.edges.len() <= 8 {
        let _ = instantiate_group(&graph, &params);
    }
});
