//! `gdrate` command-line interface.
//!
//! Stepsizes are given in absolute units; every report also echoes the
//! normalized stepsize `γL`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gdrate::report::{float17, fmt17, sweep_csv, SWEEP_HEADER};
use gdrate::verifier::{oracle_quadratic_identity, BoundForm};
use gdrate::{
    build_certificate, certify, empirical_probe, optimal_stepsize, rate_bound, surrogate_class, CertifyConfig,
    Error, Family, PepMatrixSet, ProbeResult, ProblemInstance, RateBound, SolveOptions, VerificationReport,
};

const AFTER_HELP: &str = "\
Floats are printed with 17 significant digits. Quantities that are undefined
for the instance (the max-form columns when mu < 0) print as the lowercase
sentinel `nan`; other non-finite values print as `inf` or `-inf`. JSON output
uses the same sentinels as strings.

Exit codes: 0 success or certified, 1 certification or bound failure or an
unwritable output path, 2 invalid input.";

#[derive(Parser)]
#[command(name = "gdrate", version, about = "Worst-case rates and certificates for gradient descent")]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the worst-case rate at a stepsize.
    Rate(InstanceArgs),
    /// Print the optimal stepsize.
    OptimalStep(ClassArgs),
    /// Build and verify the closed-form certificate.
    Certify(CertifyArgs),
    /// Tabulate the rate over a stepsize grid.
    Sweep(SweepArgs),
    /// Run gradient descent on random functions and compare with the bound.
    Simulate(SimulateArgs),
    /// Check the certificate's quadratic identity on random points.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Args)]
struct ClassArgs {
    /// Number of iterations.
    #[arg(long = "N")]
    n: usize,
    /// Strong convexity parameter (may be negative).
    #[arg(long, allow_negative_numbers = true)]
    mu: f64,
    /// Smoothness constant.
    #[arg(long = "L")]
    l: f64,
    /// Bisection tolerance.
    #[arg(long, default_value_t = SolveOptions::default().tol)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InstanceArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Stepsize in absolute units; defaults to the optimal stepsize.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Oracle trials.
    #[arg(long, default_value_t = CertifyConfig::default().oracle_trials)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = CertifyConfig::default().psd_tol)]
    psd_tol: f64,
    #[arg(long, default_value_t = CertifyConfig::default().balance_tol)]
    balance_tol: f64,
    #[arg(long, default_value_t = CertifyConfig::default().lambda_tol)]
    lambda_tol: f64,
    #[arg(long, default_value_t = CertifyConfig::default().oracle_tol)]
    oracle_tol: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    gamma_min: f64,
    #[arg(long)]
    gamma_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    steps: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value_t = FamilyArg::Quadratic)]
    family: FamilyArg,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Quadratic,
    Huber,
    PiecewiseQuadratic,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Quadratic => Family::Quadratic,
            FamilyArg::Huber => Family::Huber,
            FamilyArg::PiecewiseQuadratic => Family::PiecewiseQuadratic,
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = CertifyConfig::default().oracle_trials)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of the random points.
    #[arg(long, default_value_t = CertifyConfig::default().oracle_dim)]
    dim: usize,
    #[arg(long, default_value_t = CertifyConfig::default().oracle_tol)]
    oracle_tol: f64,
}

/// Simulated ratios may exceed the bound by this much before it counts as a
/// violation.
const SIMULATE_SLACK: f64 = 1e-9;

enum Failure {
    Invalid(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInstance(_) | Error::IncompatibleFamily(_) => Failure::Invalid(e.to_string()),
            other => Failure::Failed(other.to_string()),
        }
    }
}

struct Output {
    text: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match &cli.command {
        Command::Rate(a) => (run_rate(a), &a.class.output),
        Command::OptimalStep(a) => (run_optimal(a), &a.output),
        Command::Certify(a) => (run_certify(a), &a.inst.class.output),
        Command::Sweep(a) => (run_sweep(a), &a.class.output),
        Command::Simulate(a) => (run_simulate(a), &a.inst.class.output),
        Command::Oracle(a) => (run_oracle(a), &a.inst.class.output),
    };
    match result {
        Ok(output) => {
            if let Err(e) = emit(&output.text, out.out.as_ref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if output.ok { 0 } else { 1 })
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn emit(text: &str, path: Option<&PathBuf>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| std::io::Error::new(e.kind(), format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve_options(tol: f64) -> Result<SolveOptions, Failure> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(SolveOptions { tol, ..SolveOptions::default() })
}

fn check_class(c: &ClassArgs) -> Result<(), Failure> {
    // validates N, mu and L with a stepsize that is always admissible
    ProblemInstance::new(c.n, c.mu, c.l, 1.0 / c.l)?;
    Ok(())
}

fn instance(a: &InstanceArgs) -> Result<ProblemInstance, Failure> {
    let c = &a.class;
    check_class(c)?;
    let gamma = match a.gamma {
        Some(g) => g,
        None => optimal_stepsize(c.n, c.mu, c.l, &solve_options(c.tol)?)?,
    };
    Ok(ProblemInstance::new(c.n, c.mu, c.l, gamma)?)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key:<22}{value}");
}

#[derive(Serialize)]
struct RateReport {
    iterations: usize,
    #[serde(with = "float17")]
    mu: f64,
    #[serde(with = "float17")]
    smoothness: f64,
    #[serde(with = "float17")]
    stepsize: f64,
    #[serde(with = "float17")]
    normalized_stepsize: f64,
    #[serde(with = "float17")]
    branch_mu: f64,
    #[serde(with = "float17")]
    branch_rho: f64,
    #[serde(with = "float17")]
    bound: f64,
    #[serde(with = "float17")]
    min_form: f64,
    regime: &'static str,
}

fn rate_report(inst: &ProblemInstance, r: &RateBound) -> RateReport {
    RateReport {
        iterations: inst.iterations,
        mu: inst.mu,
        smoothness: inst.smoothness,
        stepsize: inst.stepsize,
        normalized_stepsize: inst.normalized_stepsize(),
        branch_mu: r.branch_mu.unwrap_or(f64::NAN),
        branch_rho: r.branch_rho,
        bound: r.max_value.unwrap_or(f64::NAN),
        min_form: r.min_form,
        regime: r.regime.as_str(),
    }
}

fn run_rate(a: &InstanceArgs) -> Result<Output, Failure> {
    let inst = instance(a)?;
    let r = rate_bound(&inst)?;
    let text = match a.class.output.format {
        Format::Json => to_json(&rate_report(&inst, &r)),
        Format::Csv => sweep_csv(&[(inst.stepsize, r)]),
        Format::Human => {
            let mut s = String::new();
            kv(&mut s, "N", inst.iterations);
            kv(&mut s, "mu", fmt17(inst.mu));
            kv(&mut s, "L", fmt17(inst.smoothness));
            kv(&mut s, "gamma", fmt17(inst.stepsize));
            kv(&mut s, "gamma*L", fmt17(inst.normalized_stepsize()));
            kv(&mut s, "branch_mu", fmt17(r.branch_mu.unwrap_or(f64::NAN)));
            kv(&mut s, "branch_rho", fmt17(r.branch_rho));
            kv(&mut s, "bound", fmt17(r.max_value.unwrap_or(f64::NAN)));
            kv(&mut s, "min_form", fmt17(r.min_form));
            kv(&mut s, "regime", r.regime.as_str());
            s
        }
    };
    Ok(Output { text, ok: true })
}

#[derive(Serialize)]
struct OptimalReport {
    iterations: usize,
    #[serde(with = "float17")]
    mu: f64,
    #[serde(with = "float17")]
    smoothness: f64,
    #[serde(with = "float17")]
    optimal_stepsize: f64,
    #[serde(with = "float17")]
    normalized_stepsize: f64,
}

fn run_optimal(c: &ClassArgs) -> Result<Output, Failure> {
    check_class(c)?;
    let gamma = optimal_stepsize(c.n, c.mu, c.l, &solve_options(c.tol)?)?;
    let rep = OptimalReport {
        iterations: c.n,
        mu: c.mu,
        smoothness: c.l,
        optimal_stepsize: gamma,
        normalized_stepsize: gamma * c.l,
    };
    let text = match c.output.format {
        Format::Json => to_json(&rep),
        Format::Csv => format!(
            "N,mu,L,gamma,gamma_l\n{},{},{},{},{}\n",
            rep.iterations,
            fmt17(rep.mu),
            fmt17(rep.smoothness),
            fmt17(gamma),
            fmt17(rep.normalized_stepsize)
        ),
        Format::Human => {
            let mut s = String::new();
            kv(&mut s, "optimal gamma", fmt17(gamma));
            kv(&mut s, "gamma*L", fmt17(rep.normalized_stepsize));
            s
        }
    };
    Ok(Output { text, ok: true })
}

fn certify_human(r: &VerificationReport) -> String {
    let mut s = String::new();
    kv(&mut s, "N", r.iterations);
    kv(&mut s, "gamma", fmt17(r.stepsize));
    kv(&mut s, "gamma*L", fmt17(r.normalized_stepsize));
    if let Some(sc) = &r.surrogate {
        let regime = serde_json::to_value(sc.regime).expect("serialisable");
        kv(&mut s, "surrogate", regime.as_str().unwrap_or_default());
        kv(&mut s, "mu'", fmt17(sc.mu_eff));
        kv(&mut s, "L'", fmt17(sc.l_eff));
    }
    kv(&mut s, "tau", fmt17(r.tau));
    let worst = r.balance_residuals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    kv(&mut s, "balance residual", fmt17(worst));
    kv(&mut s, "min lambda", fmt17(r.min_lambda));
    kv(&mut s, "min eigenvalue", fmt17(r.min_eigenvalue));
    kv(&mut s, "psd scale", fmt17(r.psd_scale));
    kv(&mut s, "oracle max error", fmt17(r.oracle_max_error));
    let form = match r.bound_form {
        BoundForm::MaxForm => "(f0 - f*)",
        BoundForm::MinForm => "(f0 - fN)",
    };
    kv(&mut s, "bound", format!("{} {form}", fmt17(r.bound_value)));
    kv(&mut s, "certified", r.certified);
    if let Some(stage) = &r.failing_stage {
        kv(&mut s, "failing stage", stage);
    }
    s
}

fn run_certify(a: &CertifyArgs) -> Result<Output, Failure> {
    let inst = instance(&a.inst)?;
    let cfg = CertifyConfig {
        solve: solve_options(a.inst.class.tol)?,
        balance_tol: a.balance_tol,
        lambda_tol: a.lambda_tol,
        psd_tol: a.psd_tol,
        oracle_tol: a.oracle_tol,
        oracle_trials: a.trials,
        seed: a.seed,
        ..CertifyConfig::default()
    };
    let r = certify(&inst, &cfg)?;
    let text = match a.inst.class.output.format {
        Format::Json => {
            let mut s = r.to_json();
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::from("N,mu,L,gamma,gamma_l,bound,bound_form,certified\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.iterations,
                fmt17(r.mu),
                fmt17(r.smoothness),
                fmt17(r.stepsize),
                fmt17(r.normalized_stepsize),
                fmt17(r.bound_value),
                r.bound_form.as_str(),
                r.certified
            );
            s
        }
        Format::Human => certify_human(&r),
    };
    Ok(Output { text, ok: r.certified })
}

fn run_sweep(a: &SweepArgs) -> Result<Output, Failure> {
    let c = &a.class;
    check_class(c)?;
    if !(a.gamma_min <= a.gamma_max) {
        return Err(Failure::Invalid("gamma-min must not exceed gamma-max".into()));
    }
    let grid: Vec<f64> = match a.steps {
        0 => Vec::new(),
        1 => vec![a.gamma_min],
        k => (0..k).map(|i| a.gamma_min + (a.gamma_max - a.gamma_min) * i as f64 / (k - 1) as f64).collect(),
    };
    let mut rows = Vec::with_capacity(grid.len());
    for g in grid {
        let inst = ProblemInstance::new(c.n, c.mu, c.l, g)?;
        rows.push((g, rate_bound(&inst)?));
    }
    let text = match c.output.format {
        Format::Json => {
            let reps: Vec<RateReport> = rows
                .iter()
                .map(|(g, r)| rate_report(&ProblemInstance { iterations: c.n, mu: c.mu, smoothness: c.l, stepsize: *g }, r))
                .collect();
            to_json(&reps)
        }
        Format::Csv | Format::Human => sweep_csv(&rows),
    };
    debug_assert!(text.starts_with(SWEEP_HEADER) || c.output.format == Format::Json);
    Ok(Output { text, ok: true })
}

fn run_simulate(a: &SimulateArgs) -> Result<Output, Failure> {
    let inst = instance(&a.inst)?;
    let p: ProbeResult = empirical_probe(&inst, a.family.into(), a.trials, a.seed)?;
    let ok = p.quotient <= 1.0 + SIMULATE_SLACK;
    let text = match a.inst.class.output.format {
        Format::Json => to_json(&p),
        Format::Csv => format!(
            "family,criterion,trials,max_ratio,bound_ratio,quotient\n{},{},{},{},{},{}\n",
            p.family.as_str(),
            serde_json::to_value(p.criterion).expect("serialisable").as_str().unwrap_or_default(),
            p.trials,
            fmt17(p.max_ratio),
            fmt17(p.bound_ratio),
            fmt17(p.quotient)
        ),
        Format::Human => {
            let mut s = String::new();
            kv(&mut s, "family", p.family.as_str());
            kv(&mut s, "gamma*L", fmt17(inst.normalized_stepsize()));
            kv(&mut s, "trials", p.trials);
            kv(&mut s, "max ratio", fmt17(p.max_ratio));
            kv(&mut s, "bound ratio", fmt17(p.bound_ratio));
            kv(&mut s, "quotient", fmt17(p.quotient));
            if let Some(q) = p.anchor_l_quotient {
                kv(&mut s, "eigenvalue-L quotient", fmt17(q));
            }
            if let Some(q) = p.anchor_mu_quotient {
                kv(&mut s, "eigenvalue-mu quotient", fmt17(q));
            }
            s
        }
    };
    Ok(Output { text, ok })
}

#[derive(Serialize)]
struct OracleReport {
    iterations: usize,
    #[serde(with = "float17")]
    normalized_stepsize: f64,
    #[serde(with = "float17")]
    mu_eff: f64,
    #[serde(with = "float17")]
    l_eff: f64,
    trials: usize,
    dim: usize,
    seed: u64,
    #[serde(with = "float17")]
    max_rel_error: f64,
    pass: bool,
}

fn run_oracle(a: &OracleArgs) -> Result<Output, Failure> {
    let inst = instance(&a.inst)?;
    let sc = surrogate_class(&inst, &solve_options(a.inst.class.tol)?)?;
    let inst_eff = ProblemInstance { mu: sc.mu_eff, smoothness: sc.l_eff, ..inst };
    let cert = build_certificate(inst.iterations, &sc.rho_eff, &sc.eta_eff, &sc.l_eff)?;
    let pep = PepMatrixSet::for_certificate(&cert)?;
    let o = oracle_quadratic_identity(&inst_eff, &cert, &pep.s_sym, a.trials, a.dim, a.seed)?;
    let rep = OracleReport {
        iterations: inst.iterations,
        normalized_stepsize: inst.normalized_stepsize(),
        mu_eff: sc.mu_eff,
        l_eff: sc.l_eff,
        trials: o.trials,
        dim: a.dim,
        seed: a.seed,
        max_rel_error: o.max_rel_error,
        pass: o.max_rel_error <= a.oracle_tol,
    };
    let text = match a.inst.class.output.format {
        Format::Json => to_json(&rep),
        Format::Csv => format!(
            "N,gamma_l,trials,dim,seed,max_rel_error,pass\n{},{},{},{},{},{},{}\n",
            rep.iterations,
            fmt17(rep.normalized_stepsize),
            rep.trials,
            rep.dim,
            rep.seed,
            fmt17(rep.max_rel_error),
            rep.pass
        ),
        Format::Human => {
            let mut s = String::new();
            kv(&mut s, "gamma*L", fmt17(rep.normalized_stepsize));
            kv(&mut s, "trials", rep.trials);
            kv(&mut s, "max relative error", fmt17(rep.max_rel_error));
            kv(&mut s, "pass", rep.pass);
            s
        }
    };
    Ok(Output { text, ok: rep.pass })
}
