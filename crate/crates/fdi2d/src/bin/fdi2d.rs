//! Command-line front end: model analysis, filter synthesis, grid
//! simulation, threshold calibration, PBH checks and the bundled
//! demos. Data goes to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 parse/validation failure, 2 fault not
//! isolable, 3 LMI infeasible.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fdi2d::demo::{run_demo, DemoName};
use fdi2d::io::{
    write_residual_csv, FilterDocument, IoError, PolyMatrixDocument, SystemDocument,
};
use fdi2d::lmi::LmiError;
use fdi2d::model::{DetectionFilter, FmiiModel};
use fdi2d::polymat::{pbh, verify_annihilator, PrimenessMode, PrimenessVerdict, zero_prime_check};
use fdi2d::sim::{
    fdi_decide, simulate_filter, simulate_plant, threshold_mc, FilterBoundary, Scenario,
    ThresholdSpec,
};
use fdi2d::synthesis::{isolability, synthesize_filter, GainMethod, SynthesisError};

#[derive(Parser)]
#[command(name = "fdi2d", about = "Geometric fault detection and isolation for 2D FMII systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lmi,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ZeroPrime,
    Monomic,
}

#[derive(Subcommand)]
enum Command {
    /// Per-fault W*, S* dimensions and isolability verdicts.
    Analyze { system: PathBuf },
    /// Build a detection filter for one fault and write it as JSON.
    Synthesize {
        system: PathBuf,
        #[arg(long)]
        fault: String,
        #[arg(long, value_enum, default_value = "lmi")]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run plant + filters over a scenario and emit the residual/alarm CSV.
    Simulate {
        system: PathBuf,
        #[arg(long = "filter", required = true)]
        filters: Vec<PathBuf>,
        #[arg(long)]
        scenario: PathBuf,
        /// Thresholds JSON from `threshold`; alarms compare against 0 when absent.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Refuse to run without an explicit --seed.
        #[arg(long)]
        deterministic: bool,
    },
    /// Monte-Carlo threshold calibration over fault-free runs.
    Threshold {
        system: PathBuf,
        #[arg(long = "filter", required = true)]
        filters: Vec<PathBuf>,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "100")]
        runs: usize,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        seed: u64,
        /// JSON destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Right zero-primeness / monomicity of the system's PBH matrix.
    Pbh {
        system: PathBuf,
        #[arg(long, value_enum, default_value = "zero-prime")]
        mode: ModeArg,
        /// Optional annihilator (polynomial-matrix JSON) to verify
        /// against the PBH matrix.
        #[arg(long)]
        annihilator: Option<PathBuf>,
    },
    /// End-to-end pipeline on a bundled reference system.
    Demo {
        /// heat-exchanger-full | heat-exchanger-partial | counterexample
        name: String,
    },
}

fn fail(code: u8, msg: impl AsRef<str>) -> ExitCode {
    eprintln!("error: {}", msg.as_ref());
    ExitCode::from(code)
}

fn load_model(path: &PathBuf) -> Result<FmiiModel, IoError> {
    let text = fs::read_to_string(path)?;
    let doc: SystemDocument = serde_json::from_str(&text)?;
    let mut model = doc.into_model()?;
    if let Ok(tol) = std::env::var("FDI2D_TOL") {
        match tol.parse::<f64>() {
            Ok(v) if v > 0.0 => model.tol_rel = v,
            _ => {
                return Err(IoError::Invalid(format!(
                    "FDI2D_TOL must be a positive number, got '{tol}'"
                )))
            }
        }
    }
    Ok(model)
}

fn load_filters(paths: &[PathBuf]) -> Result<Vec<DetectionFilter>, IoError> {
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            let doc: FilterDocument = serde_json::from_str(&text)?;
            doc.into_filter()
        })
        .collect()
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, IoError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze { system } => {
            let model = match load_model(&system) {
                Ok(m) => m,
                Err(e) => return fail(1, e.to_string()),
            };
            let report = match isolability(&model) {
                Ok(r) => r,
                Err(e) => return fail(1, e.to_string()),
            };
            println!("n = {}, k = {}, q = {}", model.state_dim(), model.order(), model.output_dim());
            for f in &report.faults {
                let verdict = if f.isolable { "isolable" } else { "not isolable" };
                let why = if f.reasons.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", f.reasons.join("; "))
                };
                println!(
                    "{}: {} [dim W* = {}, dim S* = {}]{}",
                    f.name, verdict, f.w_star_dim, f.s_star_dim, why
                );
            }
            if report.all_isolable() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Synthesize {
            system,
            fault,
            method,
            out,
        } => {
            let model = match load_model(&system) {
                Ok(m) => m,
                Err(e) => return fail(1, e.to_string()),
            };
            let Some(target) = model.fault_index(&fault) else {
                return fail(1, format!("unknown fault '{fault}'"));
            };
            let method = match method {
                MethodArg::Lmi => GainMethod::Lmi,
                MethodArg::None => GainMethod::None,
            };
            let synth = match synthesize_filter(&model, target, method) {
                Ok(s) => s,
                Err(SynthesisError::NotIsolable(name)) => {
                    return fail(2, format!("fault '{name}' is not isolable"))
                }
                Err(SynthesisError::Lmi(LmiError::Infeasible(m))) => {
                    return fail(3, format!("LMI search found no certificate (margin {m:.3e})"))
                }
                Err(e) => return fail(1, e.to_string()),
            };
            let mut doc = FilterDocument::from_filter(&synth.filter)
                .with_projection(&synth.quotient.p)
                .with_friends(&synth.quotient.d[0], &synth.quotient.d[1])
                .with_target(&fault);
            if let Some(cert) = &synth.certificate {
                doc = doc.with_certificate(&cert.r1, &cert.r2);
            }
            let text = serde_json::to_string_pretty(&doc).expect("serializable");
            if let Err(e) = fs::write(&out, text) {
                return fail(1, e.to_string());
            }
            eprintln!(
                "filter for '{fault}' written to {} (quotient dim {})",
                out.display(),
                synth.quotient.state_dim()
            );
            ExitCode::SUCCESS
        }
        Command::Simulate {
            system,
            filters,
            scenario,
            thresholds,
            out,
            seed,
            deterministic,
        } => {
            if deterministic && seed.is_none() {
                return fail(1, "--deterministic requires an explicit --seed");
            }
            let model = match load_model(&system) {
                Ok(m) => m,
                Err(e) => return fail(1, e.to_string()),
            };
            let filters = match load_filters(&filters) {
                Ok(f) => f,
                Err(e) => return fail(1, e.to_string()),
            };
            let mut scenario = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(1, e.to_string()),
            };
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let th = match thresholds {
                Some(path) => {
                    let text = match fs::read_to_string(&path) {
                        Ok(t) => t,
                        Err(e) => return fail(1, e.to_string()),
                    };
                    let spec: ThresholdSpec = match serde_json::from_str(&text) {
                        Ok(s) => s,
                        Err(e) => return fail(1, e.to_string()),
                    };
                    spec.thresholds
                }
                None => vec![0.0; filters.len()],
            };
            if th.len() != filters.len() {
                return fail(1, "threshold count does not match filter count");
            }
            let run = match simulate_plant(&model, &scenario) {
                Ok(r) => r,
                Err(e) => return fail(1, e.to_string()),
            };
            let mut residuals = Vec::with_capacity(filters.len());
            for filter in &filters {
                match simulate_filter(filter, &run.outputs, &scenario.input, &FilterBoundary::Zero)
                {
                    Ok(r) => residuals.push(r),
                    Err(e) => return fail(1, e.to_string()),
                }
            }
            let alarms = fdi_decide(&residuals, &th);
            let result = match out {
                Some(path) => {
                    let mut buf = Vec::new();
                    write_residual_csv(&mut buf, &residuals, &alarms)
                        .and_then(|()| fs::write(&path, buf).map_err(IoError::from))
                }
                None => write_residual_csv(std::io::stdout().lock(), &residuals, &alarms),
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(1, e.to_string()),
            }
        }
        Command::Threshold {
            system,
            filters,
            scenario,
            runs,
            horizon,
            seed,
            out,
        } => {
            let model = match load_model(&system) {
                Ok(m) => m,
                Err(e) => return fail(1, e.to_string()),
            };
            let filters = match load_filters(&filters) {
                Ok(f) => f,
                Err(e) => return fail(1, e.to_string()),
            };
            let scenario = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(1, e.to_string()),
            };
            let horizon = horizon.unwrap_or(scenario.i_max.max(scenario.j_max));
            let spec = ThresholdSpec::new(runs, horizon);
            let spec = match threshold_mc(&model, &filters, &scenario, &spec, seed) {
                Ok(s) => s,
                Err(e) => return fail(1, e.to_string()),
            };
            let text = serde_json::to_string_pretty(&spec).expect("serializable");
            match out {
                Some(path) => {
                    if let Err(e) = fs::write(&path, text) {
                        return fail(1, e.to_string());
                    }
                }
                None => println!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Command::Pbh {
            system,
            mode,
            annihilator,
        } => {
            let model = match load_model(&system) {
                Ok(m) => m,
                Err(e) => return fail(1, e.to_string()),
            };
            if model.order() != 2 {
                return fail(1, "PBH checks need a two-operator model");
            }
            let matrix = pbh(&model);
            let mode = match mode {
                ModeArg::ZeroPrime => PrimenessMode::ZeroPrime,
                ModeArg::Monomic => PrimenessMode::Monomic,
            };
            match zero_prime_check(&matrix, mode) {
                PrimenessVerdict::Prime => {
                    println!("prime (no rank-drop point found on the sampling set)")
                }
                PrimenessVerdict::NotPrime { z1, z2, rank } => {
                    println!("not prime: rank {rank} < {} at z1 = {z1}, z2 = {z2}", matrix.cols())
                }
            }
            if let Some(path) = annihilator {
                let text = match fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) => return fail(1, e.to_string()),
                };
                let doc: PolyMatrixDocument = match serde_json::from_str(&text) {
                    Ok(d) => d,
                    Err(e) => return fail(1, e.to_string()),
                };
                let n_mat = match doc.into_matrix() {
                    Ok(m) => m,
                    Err(e) => return fail(1, e.to_string()),
                };
                match verify_annihilator(&n_mat, &matrix) {
                    Ok(true) => println!("annihilator verified: N(z1,z2) PBH(z1,z2) = 0"),
                    Ok(false) => println!("annihilator REJECTED: product has nonzero coefficients"),
                    Err(e) => return fail(1, e.to_string()),
                }
            }
            ExitCode::SUCCESS
        }
        Command::Demo { name } => {
            let Some(demo) = DemoName::parse(&name) else {
                return fail(
                    1,
                    "unknown demo; expected heat-exchanger-full, heat-exchanger-partial or counterexample",
                );
            };
            let checks = run_demo(demo);
            let mut all = true;
            for c in &checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                all &= c.pass;
                if c.detail.is_empty() {
                    println!("[{status}] {}", c.label);
                } else {
                    println!("[{status}] {} — {}", c.label, c.detail);
                }
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
