//! Acceptance criterion 13: identical invocations of every subcommand
//! produce byte-identical output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schottky-kp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("schottky-kp-det-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn criterion_13_byte_identical_runs() {
    let dir = tmp_dir();

    // fixtures
    let g1 = dir.join("g1.json");
    let out = run(&["mcurve", "--genus", "1", "--y", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    std::fs::write(&g1, &out.stdout).unwrap();

    let g2 = dir.join("g2.json");
    let out = run(&["mcurve", "--genus", "2", "--y", "0.02"]);
    std::fs::write(&g2, &out.stdout).unwrap();

    let sol = dir.join("sol.json");
    std::fs::write(
        &sol,
        r#"{"x_plus": [[1.0,0.0],[5.0,0.0]], "x_minus": [[-1.0,0.0],[3.0,0.0]], "marked": [-3.0,0.0], "alpha": [[0.1,0.0],[-0.2,0.0]], "times": 3}"#,
    )
    .unwrap();

    let curve: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&g2).unwrap()).unwrap();
    let scenario = dir.join("scenario.json");
    std::fs::write(
        &scenario,
        serde_json::to_string(&serde_json::json!({
            "curve": curve,
            "pinch": "e2",
            "y_sequence": [1e-2, 1e-3],
            "beta": [0.1, 0.5],
            "alpha": [[0.1, 0.0], [0.05, 0.0]],
        }))
        .unwrap(),
    )
    .unwrap();

    let g1s = g1.to_str().unwrap();
    let g2s = g2.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["mcurve", "--genus", "3", "--y", "0.01"],
        vec!["validate", g2s],
        vec!["periods", g2s],
        vec![
            "kp-check",
            g1s,
            "--tol",
            "1e-6",
            "--grid",
            "-1:1:3,-0.2:0.2:2,-0.2:0.2:2",
        ],
        vec!["kp-check", g1s, "--tol", "1e-6", "--format", "json", "--grid", "0:1:2,0:0:1,0:0:1"],
        vec!["soliton", sol.to_str().unwrap()],
        vec!["laurent", g2s, "--times", "4"],
        vec!["degenerate", scenario.to_str().unwrap()],
    ];
    for args in &invocations {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), b.status.code(), "status differs for {args:?}");
        assert_eq!(
            a.stdout, b.stdout,
            "stdout differs between runs for {args:?}"
        );
    }
    println!(
        "criterion 13 PASS: {} subcommand invocations byte-identical across runs",
        invocations.len()
    );
}
