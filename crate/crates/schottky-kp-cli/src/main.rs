//! Command-line driver: curve validation, periods, KP residual grids,
//! solitons, degenerations, M-curve generation and Laurent data.
//!
//! Exit codes: 0 success, 1 input error, 2 validation failure,
//! 3 computation non-convergence, 4 tolerance unmet.

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use schottky_kp::config::{parse_grid_spec, CurveConfig, GridSpec, ScenarioConfig, SolitonConfig};
use schottky_kp::degeneration::convergence_report;
use schottky_kp::differentials::{laurent_data, TruncationPolicy};
use schottky_kp::error::Error as LibError;
use schottky_kp::graph::{instantiate_group, marked_point, mcurve_params};
use schottky_kp::periods::period_matrix;
use schottky_kp::soliton::soliton_kp_residual;
use schottky_kp::tau::{kp_residual, Characteristic, ResidualReport, TauData};

const EXIT_INPUT: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "schottky-kp",
    about = "Schottky-uniformized curves: periods, theta/tau functions and KP solutions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PolicyArgs {
    /// cap on the group-series word length
    #[arg(long, default_value_t = 12)]
    max_word_len: usize,
    /// truncation tail tolerance for group series
    #[arg(long, default_value_t = 1e-9)]
    tail_tol: f64,
}

impl PolicyArgs {
    fn policy(&self) -> TruncationPolicy {
        TruncationPolicy::default()
            .with_max_len(self.max_word_len)
            .with_tail_tol(self.tail_tol)
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// output format for grid data
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// output path (stdout when absent)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a curve configuration: graph stability, parameter constraints
    /// and the classical Schottky (disjoint isometric circles) condition.
    Validate {
        config: String,
    },
    /// Multiplicative periods P and period matrix Z with diagnostics.
    Periods {
        config: String,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Evaluate the quasi-periodic KP solution u1 and its KP-equation
    /// residual on a grid.
    KpCheck {
        config: String,
        #[command(flatten)]
        policy: PolicyArgs,
        /// grid "x0:x1:nx,t20:t21:n2,t30:t31:n3"
        #[arg(long, default_value = "-1:1:5,-0.5:0.5:5,-0.5:0.5:5", allow_hyphen_values = true)]
        grid: String,
        /// pass/fail threshold on the normalized residual
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// number of active KP times
        #[arg(long, default_value_t = 3)]
        times: usize,
        /// lattice radius override for theta sums
        #[arg(long)]
        lattice_radius: Option<i64>,
        /// real vector c (comma list); gives the line bundle exp(c_i)
        #[arg(long, allow_hyphen_values = true)]
        c_real: Option<String>,
        /// real characteristic beta (comma list)
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Soliton tau function: u samples and exact KP residual.
    Soliton {
        spec: String,
        #[arg(long, default_value = "-6:6:9,-2:2:3,0:0:1", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Degeneration scenario: scaled tau vs modified tau across the
    /// y sequence.
    Degenerate {
        scenario: String,
        #[command(flatten)]
        policy: PolicyArgs,
        /// final-deviation threshold
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
    },
    /// Emit a canonical M-curve configuration.
    Mcurve {
        #[arg(long, default_value_t = 2)]
        genus: usize,
        #[arg(long, default_value_t = 1)]
        tails: usize,
        #[arg(long, default_value_t = 2.0)]
        scale: f64,
        #[arg(long, default_value_t = 0.02)]
        y: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Laurent data (r, q matrices) at the marked point.
    Laurent {
        config: String,
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 4)]
        times: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: msg.into(),
        }
    }

    fn tolerance(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_TOLERANCE,
            message: msg.into(),
        }
    }
}

impl From<LibError> for Failure {
    fn from(e: LibError) -> Self {
        let code = match &e {
            LibError::Config(_) => EXIT_INPUT,
            LibError::InvalidGraph(_)
            | LibError::InvalidParams(_)
            | LibError::InvalidScale
            | LibError::CirclesOverlap { .. }
            | LibError::NotLoxodromic { .. }
            | LibError::CoincidentFixedPoints
            | LibError::IndexOutOfRange { .. }
            | LibError::WordNotReduced(_)
            | LibError::UnsupportedInfinity => EXIT_VALIDATION,
            _ => EXIT_NOT_CONVERGED,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read_file(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {path}: {e}")))
}

fn parse_real_list(text: &str, expect: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::input(format!("bad {what} list {text:?}")))?;
    if vals.len() != expect {
        return Err(Failure::input(format!(
            "{what} needs {expect} entries, got {}",
            vals.len()
        )));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Failure::input(format!("{what} entries must be finite")));
    }
    Ok(vals)
}

fn write_output(out: &Option<String>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::input(format!("cannot write {path}: {e}"))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Failure::input(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct ValidateReport {
    pass: bool,
    genus: usize,
    min_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn grid_csv(report: &ResidualReport) -> String {
    let mut s = String::from("x,t2,t3,re_u1,im_u1,residual\n");
    for row in &report.samples {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.x, row.t2, row.t3, row.u.re, row.u.im, row.residual
        ));
    }
    s
}

#[derive(Serialize)]
struct GridJsonRow {
    x: f64,
    t2: f64,
    t3: f64,
    u: [f64; 2],
    residual: f64,
}

#[derive(Serialize)]
struct GridJson {
    samples: Vec<GridJsonRow>,
    max_residual: f64,
    rms_residual: f64,
}

fn grid_json(report: &ResidualReport) -> String {
    let doc = GridJson {
        samples: report
            .samples
            .iter()
            .map(|r| GridJsonRow {
                x: r.x,
                t2: r.t2,
                t3: r.t3,
                u: [r.u.re, r.u.im],
                residual: r.residual,
            })
            .collect(),
        max_residual: report.max_normalized,
        rms_residual: report.rms_normalized,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("grid serializes");
    s.push('\n');
    s
}

fn emit_grid(report: &ResidualReport, output: &OutputArgs) -> Result<(), Failure> {
    let content = if output.format == "json" {
        grid_json(report)
    } else {
        grid_csv(report)
    };
    write_output(&output.out, &content)
}

fn cmd_validate(config: &str) -> Result<(), Failure> {
    let text = read_file(config)?;
    let cfg = CurveConfig::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    let report = match cfg.to_domain() {
        Ok((graph, params)) => match instantiate_group(&graph, &params) {
            Ok(group) => {
                let v = group.validate_classical();
                ValidateReport {
                    pass: v.pass,
                    genus: graph.genus(),
                    min_gap: v.min_gap,
                    error: None,
                }
            }
            Err(e) => ValidateReport {
                pass: false,
                genus: graph.genus(),
                min_gap: f64::NAN,
                error: Some(e.to_string()),
            },
        },
        Err(e) => ValidateReport {
            pass: false,
            genus: 0,
            min_gap: f64::NAN,
            error: Some(e.to_string()),
        },
    };
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if report.pass {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VALIDATION,
            message: report.error.unwrap_or_else(|| "CirclesOverlap".into()),
        })
    }
}

fn cmd_periods(config: &str, policy: &PolicyArgs) -> Result<(), Failure> {
    let text = read_file(config)?;
    let cfg = CurveConfig::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    let (graph, params) = cfg.to_domain()?;
    let group = instantiate_group(&graph, &params)?;
    let data = period_matrix(&group, &policy.policy())?;
    println!("{}", serde_json::to_string_pretty(&data.to_json()).unwrap());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_kp_check(
    config: &str,
    policy: &PolicyArgs,
    grid: &str,
    tol: f64,
    times: usize,
    lattice_radius: Option<i64>,
    c_real: &Option<String>,
    beta: &Option<String>,
    output: &OutputArgs,
) -> Result<(), Failure> {
    if !(3..=16).contains(&times) {
        return Err(Failure::input("--times must be in 3..=16"));
    }
    let text = read_file(config)?;
    let cfg = CurveConfig::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    let (graph, params) = cfg.to_domain()?;
    let spec: GridSpec = parse_grid_spec(grid).map_err(|e| Failure::input(e.to_string()))?;
    let g = graph.genus();
    let mut chi = Characteristic::zero(g);
    if let Some(cr) = c_real {
        chi = Characteristic::from_real_c(&parse_real_list(cr, g, "c-real")?);
    }
    if let Some(b) = beta {
        chi.beta = parse_real_list(b, g, "beta")?;
    }
    let lib_policy = policy.policy();
    let group = instantiate_group(&graph, &params)?;
    let x_t = marked_point(&graph, &params)?;
    let periods = period_matrix(&group, &lib_policy)?;
    let laurent = laurent_data(&group, x_t, times, &lib_policy)?;
    let mut data = TauData::new(periods.z.clone(), chi, laurent)?;
    data.radius = lattice_radius;
    let report = kp_residual(&data, &spec.points())?;
    emit_grid(&report, output)?;
    eprintln!(
        "kp-check: {} points, max normalized residual {:e}, rms {:e}",
        report.samples.len(),
        report.max_normalized,
        report.rms_normalized
    );
    if report.max_normalized <= tol {
        Ok(())
    } else {
        Err(Failure::tolerance(format!(
            "residual {:e} exceeds tol {tol:e}",
            report.max_normalized
        )))
    }
}

fn cmd_soliton(spec: &str, grid: &str, tol: f64, output: &OutputArgs) -> Result<(), Failure> {
    let text = read_file(spec)?;
    let cfg = SolitonConfig::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    let data = cfg.to_domain()?;
    let gspec = parse_grid_spec(grid).map_err(|e| Failure::input(e.to_string()))?;
    let report = soliton_kp_residual(&data, &gspec.points())?;
    emit_grid(&report, output)?;
    eprintln!(
        "soliton: {} points, max normalized residual {:e}",
        report.samples.len(),
        report.max_normalized
    );
    if report.max_normalized <= tol {
        Ok(())
    } else {
        Err(Failure::tolerance(format!(
            "residual {:e} exceeds tol {tol:e}",
            report.max_normalized
        )))
    }
}

#[derive(Serialize)]
struct DegenerateJson {
    class: String,
    rows: Vec<[f64; 2]>,
    monotone: bool,
    final_deviation: f64,
}

fn cmd_degenerate(scenario: &str, policy: &PolicyArgs, tol: f64) -> Result<(), Failure> {
    let text = read_file(scenario)?;
    let cfg = ScenarioConfig::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    let sc = cfg.to_domain()?;
    let t_grid: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.2, -0.1, 0.05],
        vec![-0.3, 0.15, 0.1],
        vec![0.1, 0.2, -0.15],
    ];
    let report = convergence_report(&sc, &t_grid, &policy.policy())?;
    let doc = DegenerateJson {
        class: format!("{:?}", report.class),
        rows: report.rows.iter().map(|r| [r.y, r.deviation]).collect(),
        monotone: report.monotone,
        final_deviation: report.final_deviation,
    };
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    if report.monotone && report.final_deviation <= tol {
        Ok(())
    } else {
        Err(Failure::tolerance(format!(
            "monotone {}, final deviation {:e} (tol {tol:e})",
            report.monotone, report.final_deviation
        )))
    }
}

fn cmd_mcurve(
    genus: usize,
    tails: usize,
    scale: f64,
    y: f64,
    out: &Option<String>,
) -> Result<(), Failure> {
    let (graph, params) = mcurve_params(genus, tails, scale, y)?;
    // re-validate before writing
    instantiate_group(&graph, &params)?;
    let cfg = CurveConfig::from_domain(&graph, &params);
    let mut text = cfg.to_json();
    text.push('\n');
    write_output(out, &text)
}

#[derive(Serialize)]
struct LaurentJson {
    r: Vec<Vec<[f64; 2]>>,
    q: Vec<Vec<[f64; 2]>>,
    q_symmetry_defect: f64,
}

fn cmd_laurent(config: &str, policy: &PolicyArgs, times: usize) -> Result<(), Failure> {
    if times == 0 || times > 16 {
        return Err(Failure::input("--times must be in 1..=16"));
    }
    let text = read_file(config)?;
    let cfg = CurveConfig::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
    let (graph, params) = cfg.to_domain()?;
    let group = instantiate_group(&graph, &params)?;
    let x_t = marked_point(&graph, &params)?;
    let data = laurent_data(&group, x_t, times, &policy.policy())?;
    let grid = |m: &schottky_kp::linalg::CMat| -> Vec<Vec<[f64; 2]>> {
        (0..m.rows)
            .map(|i| {
                (0..m.cols)
                    .map(|j| {
                        let v: Complex64 = m.at(i, j);
                        [v.re, v.im]
                    })
                    .collect()
            })
            .collect()
    };
    let doc = LaurentJson {
        r: grid(&data.r),
        q: grid(&data.q),
        q_symmetry_defect: data.q_symmetry_defect,
    };
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { config } => cmd_validate(config),
        Command::Periods { config, policy } => cmd_periods(config, policy),
        Command::KpCheck {
            config,
            policy,
            grid,
            tol,
            times,
            lattice_radius,
            c_real,
            beta,
            output,
        } => cmd_kp_check(
            config,
            policy,
            grid,
            *tol,
            *times,
            *lattice_radius,
            c_real,
            beta,
            output,
        ),
        Command::Soliton {
            spec,
            grid,
            tol,
            output,
        } => cmd_soliton(spec, grid, *tol, output),
        Command::Degenerate {
            scenario,
            policy,
            tol,
        } => cmd_degenerate(scenario, policy, *tol),
        Command::Mcurve {
            genus,
            tails,
            scale,
            y,
            out,
        } => cmd_mcurve(*genus, *tails, *scale, *y, out),
        Command::Laurent {
            config,
            policy,
            times,
        } => cmd_laurent(config, policy, *times),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SCHOTTKY_KP_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
