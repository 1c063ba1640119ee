//! Command-line front end: quantum prediction tables, inequality
//! evaluation, theorem verification, LHV simulation and orientation scans,
//! with JSON or CSV output.
//!
//! Exit codes: 0 ok, 2 usage error, 3 degenerate denominator, 4 theorem
//! bound breached, 5 LHV model contract violation.

use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use bell_lab::inequalities::{self, InequalityError, StrongInputs};
use bell_lab::lhv::{self, BuiltinModel, LhvError};
use bell_lab::optimizer::{
    self, IdealQmSource, LhvSource, OptimizerError, RealQmSource, SymmetricSource,
};
use bell_lab::quantum;
use bell_lab::theorem;
use bell_lab::{
    Angle, Apparatus, ArmOptics, InequalityKind, InequalityReport, JointProbabilities,
    LabeledAngle, SinglesProbabilities,
};

#[derive(Parser)]
#[command(name = "bell-lab", version, about = "Two-channel polarizer correlation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format for stdout reports
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: machine parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file supplying defaults for any flag; explicit flags win
    #[arg(long, global = true)]
    config: Option<String>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum IneqArg {
    Bell1965,
    Chsh,
    ArdehaliIdeal,
    ArdehaliStrong,
    Ch,
}

impl From<IneqArg> for InequalityKind {
    fn from(value: IneqArg) -> Self {
        match value {
            IneqArg::Bell1965 => InequalityKind::Bell1965,
            IneqArg::Chsh => InequalityKind::Chsh,
            IneqArg::ArdehaliIdeal => InequalityKind::ArdehaliIdeal,
            IneqArg::ArdehaliStrong => InequalityKind::ArdehaliStrong,
            IneqArg::Ch => InequalityKind::Ch,
        }
    }
}

#[derive(Args, Clone)]
struct ApparatusArgs {
    /// Detector quantum efficiency
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Detector half-angle in degrees
    #[arg(long = "phi-deg", default_value_t = 30.0)]
    phi_deg: f64,
    /// Prism transmittance, transmitted path, parallel polarization (both arms)
    #[arg(long = "t-par", default_value_t = 1.0)]
    t_par: f64,
    /// Prism transmittance, transmitted path, perpendicular polarization
    #[arg(long = "t-perp", default_value_t = 0.0)]
    t_perp: f64,
    /// Prism transmittance, reflected path, parallel polarization
    #[arg(long = "r-par", default_value_t = 1.0)]
    r_par: f64,
    /// Prism transmittance, reflected path, perpendicular polarization
    #[arg(long = "r-perp", default_value_t = 0.0)]
    r_perp: f64,
    /// Apply the finite-aperture depolarization correction F
    #[arg(long)]
    depolarization: bool,
}

impl ApparatusArgs {
    fn build(&self) -> Result<Apparatus, Failure> {
        let arm = ArmOptics::new(self.t_par, self.t_perp, self.r_par, self.r_perp)
            .map_err(Failure::usage)?;
        Apparatus::new(
            self.eta,
            Angle::from_degrees(self.phi_deg),
            arm,
            arm,
            self.depolarization,
        )
        .map_err(Failure::usage)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print quantum predictions (joints, singles, E) per polarizer separation
    Qm {
        #[command(flatten)]
        apparatus: ApparatusArgs,
        /// Use the ideal-experiment closed forms instead of the real apparatus
        #[arg(long)]
        ideal: bool,
        /// Comma-separated polarizer separations in degrees
        #[arg(long, default_value = "0,30,60", value_delimiter = ',')]
        angles: Vec<f64>,
    },
    /// Evaluate a correlation inequality from QM predictions or an input file
    Evaluate {
        #[arg(long, value_enum)]
        inequality: IneqArg,
        /// JSON report file whose "inputs" block supplies the probabilities
        #[arg(long, conflicts_with = "from_qm")]
        input: Option<String>,
        /// Compute the inputs from the quantum model
        #[arg(long = "from-qm")]
        from_qm: bool,
        /// Use ideal-experiment predictions with --from-qm
        #[arg(long)]
        ideal: bool,
        #[command(flatten)]
        apparatus: ApparatusArgs,
        /// Orientations a,b,a',b'[,r] in degrees for --from-qm
        #[arg(long, default_value = "30,60,0,0,0", value_delimiter = ',')]
        angles: Vec<f64>,
    },
    /// Verify the multilinear bound by vertex enumeration and random sampling
    VerifyTheorem {
        #[arg(long, default_value_t = 1.0)]
        u: f64,
        #[arg(long, default_value_t = 1.0)]
        v: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Simulate a local-hidden-variable model and test the strong inequality
    Lhv {
        /// Built-in model: noise, malus-product or threshold
        #[arg(long)]
        model: String,
        /// Detection scale d in (0, 1]
        #[arg(long, default_value_t = 0.1)]
        d: f64,
        /// Emissions per setting pair
        #[arg(long, default_value_t = 1_000_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scan parameter t: settings are a = t, b = 2t, a' = b' = r = 0
        #[arg(long = "t-deg", default_value_t = 30.0)]
        t_deg: f64,
        /// Run the supplementary and channel-sum-equality assumption checks
        #[arg(long = "check-assumptions", default_value_t = true, action = clap::ArgAction::Set)]
        check_assumptions: bool,
        /// Hidden states sampled per assumption check
        #[arg(long, default_value_t = 10_000)]
        check_lambdas: u64,
    },
    /// Scan the symmetric settings family for the maximal left-hand side
    Optimize {
        #[arg(long, value_enum, default_value_t = IneqArg::ArdehaliStrong)]
        inequality: IneqArg,
        /// Probability source: ideal, real or lhv
        #[arg(long, default_value = "ideal")]
        source: String,
        #[command(flatten)]
        apparatus: ApparatusArgs,
        /// LHV model name for --source lhv
        #[arg(long, default_value = "noise")]
        model: String,
        #[arg(long, default_value_t = 0.1)]
        d: f64,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid step in degrees, in (0, 15]
        #[arg(long = "grid-step", default_value_t = 5.0)]
        grid_step: f64,
        /// Refinement tolerance in degrees
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// Write the scan curve (t_deg, lhs) to this CSV file
        #[arg(long)]
        out: Option<String>,
        /// Coarse exploratory grid over three independent angles
        #[arg(long = "full-grid")]
        full_grid: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }

    fn usage(message: impl ToString) -> Self {
        Failure::new(2, message)
    }
}

impl From<InequalityError> for Failure {
    fn from(e: InequalityError) -> Self {
        match &e {
            InequalityError::DegenerateDenominator(_) => Failure::new(3, e),
            _ => Failure::new(2, e),
        }
    }
}

impl From<LhvError> for Failure {
    fn from(e: LhvError) -> Self {
        match &e {
            LhvError::ContractViolation { .. } => Failure::new(5, e),
            LhvError::Inequality(InequalityError::DegenerateDenominator(_)) => Failure::new(3, e),
            _ => Failure::new(2, e),
        }
    }
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::Inequality(i) => i.into(),
            OptimizerError::Lhv(l) => l.into(),
            other => Failure::new(2, other),
        }
    }
}

fn main() -> ExitCode {
    let args = match merge_config_args(std::env::args().collect()) {
        Ok(args) => args,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let cli = Cli::parse_from(args);
    if let Some(n) = cli.threads {
        // ignore failure if a pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Expands `--config file.json` into CLI tokens inserted right after the
/// subcommand, so explicit flags (parsed later) override config values.
fn merge_config_args(mut args: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(args);
    };
    if pos + 1 >= args.len() {
        return Err(Failure::usage("--config requires a file path"));
    }
    let path = args[pos + 1].clone();
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::usage(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("config {path} is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Failure::usage(format!("config {path} must be a JSON object")));
    };
    args.drain(pos..pos + 2);

    let mut tokens = Vec::new();
    for (key, v) in &map {
        let flag = format!("--{key}");
        let given = args
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if given {
            continue; // explicit flag wins
        }
        match v {
            Value::Bool(true) => tokens.push(format!("--{key}")),
            Value::Bool(false) => {}
            Value::Number(n) => {
                tokens.push(format!("--{key}"));
                tokens.push(n.to_string());
            }
            Value::String(s) => {
                tokens.push(format!("--{key}"));
                tokens.push(s.clone());
            }
            other => {
                return Err(Failure::usage(format!(
                    "config key {key} has unsupported value {other}"
                )))
            }
        }
    }
    // insert after the subcommand token (first non-flag argument)
    let insert_at = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| !a.starts_with('-'))
        .map(|(i, _)| i + 1)
        .unwrap_or(args.len());
    args.splice(insert_at..insert_at, tokens);
    Ok(args)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Qm {
            apparatus,
            ideal,
            angles,
        } => cmd_qm(cli.format, apparatus, *ideal, angles),
        Command::Evaluate {
            inequality,
            input,
            from_qm,
            ideal,
            apparatus,
            angles,
        } => cmd_evaluate(
            cli.format,
            (*inequality).into(),
            input.as_deref(),
            *from_qm,
            *ideal,
            apparatus,
            angles,
        ),
        Command::VerifyTheorem { u, v, samples, seed } => {
            cmd_verify_theorem(cli.format, *u, *v, *samples, *seed)
        }
        Command::Lhv {
            model,
            d,
            shots,
            seed,
            t_deg,
            check_assumptions,
            check_lambdas,
        } => cmd_lhv(
            cli.format,
            model,
            *d,
            *shots,
            *seed,
            *t_deg,
            *check_assumptions,
            *check_lambdas,
        ),
        Command::Optimize {
            inequality,
            source,
            apparatus,
            model,
            d,
            shots,
            seed,
            grid_step,
            tolerance,
            out,
            full_grid,
        } => cmd_optimize(
            cli.format,
            (*inequality).into(),
            source,
            apparatus,
            model,
            *d,
            *shots,
            *seed,
            *grid_step,
            *tolerance,
            out.as_deref(),
            *full_grid,
        ),
    }
}

#[derive(Serialize)]
struct Meta {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_deg: Option<f64>,
}

impl Meta {
    fn none() -> Self {
        Meta {
            seed: None,
            shots: None,
            eta: None,
            phi_deg: None,
        }
    }
}

#[derive(Serialize)]
struct ReportEnvelope<'a> {
    #[serde(flatten)]
    report: &'a InequalityReport,
    unit: &'static str,
    meta: Meta,
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(2, format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

// ---------------------------------------------------------------------------
// qm
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct QmRow {
    theta_deg: f64,
    pp: f64,
    pm: f64,
    mp: f64,
    mm: f64,
    p_plus: f64,
    p_minus: f64,
    e: f64,
}

#[derive(Serialize)]
struct QmTable {
    unit: &'static str,
    ideal: bool,
    rows: Vec<QmRow>,
    meta: Meta,
}

fn cmd_qm(
    format: Format,
    apparatus: &ApparatusArgs,
    ideal: bool,
    angles: &[f64],
) -> Result<(), Failure> {
    if angles.is_empty() {
        return Err(Failure::usage("--angles requires at least one value"));
    }
    let mut rows = Vec::new();
    if ideal {
        for &theta in angles {
            let p = quantum::ideal_predictions(Angle::from_degrees(theta));
            rows.push(QmRow {
                theta_deg: theta,
                pp: p.joints.pp(),
                pm: p.joints.pm(),
                mp: p.joints.mp(),
                mm: p.joints.mm(),
                p_plus: p.singles.p_plus(),
                p_minus: p.singles.p_minus(),
                e: p.e,
            });
        }
    } else {
        let app = apparatus.build()?;
        let singles = quantum::real_singles(&app);
        for &theta in angles {
            let j = quantum::real_joint(&app, Angle::from_degrees(theta), Angle::from_degrees(0.0))
                .map_err(Failure::usage)?;
            rows.push(QmRow {
                theta_deg: theta,
                pp: j.pp(),
                pm: j.pm(),
                mp: j.mp(),
                mm: j.mm(),
                p_plus: singles.p_plus(),
                p_minus: singles.p_minus(),
                e: j.expectation(),
            });
        }
    }
    let table = QmTable {
        unit: "deg",
        ideal,
        rows,
        meta: Meta {
            seed: None,
            shots: None,
            eta: (!ideal).then_some(apparatus.eta),
            phi_deg: (!ideal).then_some(apparatus.phi_deg),
        },
    };
    match format {
        Format::Json => print_json(&table),
        Format::Csv => {
            println!("theta_deg,pp,pm,mp,mm,p_plus,p_minus,e");
            for r in &table.rows {
                println!(
                    "{},{},{},{},{},{},{},{}",
                    r.theta_deg, r.pp, r.pm, r.mp, r.mm, r.p_plus, r.p_minus, r.e
                );
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn cmd_evaluate(
    format: Format,
    kind: InequalityKind,
    input: Option<&str>,
    from_qm: bool,
    ideal: bool,
    apparatus: &ApparatusArgs,
    angles: &[f64],
) -> Result<(), Failure> {
    let (report, meta) = if let Some(path) = input {
        (evaluate_from_file(kind, path)?, Meta::none())
    } else if from_qm {
        let meta = Meta {
            seed: None,
            shots: None,
            eta: (!ideal).then_some(apparatus.eta),
            phi_deg: (!ideal).then_some(apparatus.phi_deg),
        };
        (evaluate_from_qm(kind, ideal, apparatus, angles)?, meta)
    } else {
        return Err(Failure::usage(
            "evaluate requires either --input FILE or --from-qm",
        ));
    };
    print_report(format, &report, meta)
}

fn print_report(format: Format, report: &InequalityReport, meta: Meta) -> Result<(), Failure> {
    match format {
        Format::Json => print_json(&ReportEnvelope {
            report,
            unit: "deg",
            meta,
        }),
        Format::Csv => {
            println!("inequality,lhs,bound,violation_factor");
            println!(
                "{},{},{},{}",
                report.inequality.as_str(),
                report.lhs,
                report.bound,
                report.violation_factor
            );
            Ok(())
        }
    }
}

fn evaluate_from_file(kind: InequalityKind, path: &str) -> Result<InequalityReport, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read input {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("input {path} is not valid JSON: {e}")))?;
    let inputs = value
        .get("inputs")
        .and_then(Value::as_object)
        .ok_or_else(|| Failure::usage(format!("input {path} has no \"inputs\" object")))?;
    let get = |key: &str| -> Result<f64, Failure> {
        inputs
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Failure::usage(format!("missing input \"{key}\" for {}", kind.as_str())))
    };
    let report = match kind {
        InequalityKind::Bell1965 => {
            inequalities::bell_1965(get("e_ab")?, get("e_bpa")?, get("e_apb")?)?
        }
        InequalityKind::Chsh => {
            inequalities::chsh(get("e_ab")?, get("e_bpa")?, get("e_apb")?, get("e_apbp")?)?
        }
        InequalityKind::ArdehaliIdeal => {
            let j = |e: f64| joints_with_expectation(e, 1.0);
            let j_apbp = JointProbabilities::new(get("pp_apbp")?, 0.0, 0.0, get("mm_apbp")?)
                .map_err(Failure::usage)?;
            let s = |sum: f64| SinglesProbabilities::new(sum / 2.0, sum / 2.0);
            inequalities::ardehali_ideal(
                &j(get("e_ab")?)?,
                &j(get("e_bpa")?)?,
                &j(get("e_apb")?)?,
                &j_apbp,
                &s(get("singles_ap")?).map_err(Failure::usage)?,
                &s(get("singles_bp")?).map_err(Failure::usage)?,
            )?
        }
        InequalityKind::ArdehaliStrong => {
            let scale = get("sum_rr")?;
            let inputs = StrongInputs {
                j_ab: joints_with_expectation(get("e_ab")?, scale)?,
                j_bpa: joints_with_expectation(get("e_bpa")?, scale)?,
                j_apb: joints_with_expectation(get("e_apb")?, scale)?,
                j_apbp: JointProbabilities::new(get("pp_apbp")?, 0.0, 0.0, get("mm_apbp")?)
                    .map_err(Failure::usage)?,
                j_apr: sum_block(get("sum_apr")?)?,
                j_rbp: sum_block(get("sum_rbp")?)?,
                j_rr: sum_block(scale)?,
            };
            inequalities::ardehali_strong(&inputs)?
        }
        InequalityKind::Ch => inequalities::ch(
            get("p_phi")?,
            get("p_3phi")?,
            get("p_ap_inf")?,
            get("p_inf_b")?,
            get("p_inf_inf")?,
        )?,
    };
    Ok(report)
}

/// A joint block realizing a given unnormalized expectation `e` with total
/// coincidence rate `scale`: pp = scale(1+u)/2, pm = scale(1-u)/2 where
/// u = e/scale. Only the expectation and the sum are observable downstream.
fn joints_with_expectation(e: f64, scale: f64) -> Result<JointProbabilities, Failure> {
    if scale <= 0.0 {
        return Err(Failure::new(3, "degenerate experiment: zero total coincidence rate"));
    }
    let u = e / scale;
    if u.abs() > 1.0 + 1e-9 {
        return Err(Failure::usage(format!(
            "expectation {e} exceeds the total rate {scale}"
        )));
    }
    let u = u.clamp(-1.0, 1.0);
    JointProbabilities::new(scale * (1.0 + u) / 2.0, scale * (1.0 - u) / 2.0, 0.0, 0.0)
        .map_err(Failure::usage)
}

fn sum_block(sum: f64) -> Result<JointProbabilities, Failure> {
    JointProbabilities::new(sum / 4.0, sum / 4.0, sum / 4.0, sum / 4.0).map_err(Failure::usage)
}

fn evaluate_from_qm(
    kind: InequalityKind,
    ideal: bool,
    apparatus: &ApparatusArgs,
    angles: &[f64],
) -> Result<InequalityReport, Failure> {
    if angles.len() < 4 {
        return Err(Failure::usage(
            "--from-qm requires --angles a,b,ap,bp[,r] (degrees)",
        ));
    }
    let (a, b, ap, bp) = (angles[0], angles[1], angles[2], angles[3]);
    let r = angles.get(4).copied().unwrap_or(bp);
    let joints = |m: f64, n: f64| -> Result<JointProbabilities, Failure> {
        if ideal {
            Ok(quantum::ideal_predictions(Angle::from_degrees((m - n).abs())).joints)
        } else {
            let app = apparatus.build()?;
            quantum::real_joint(&app, Angle::from_degrees(m), Angle::from_degrees(n))
                .map_err(Failure::usage)
        }
    };
    let singles = || -> Result<SinglesProbabilities, Failure> {
        if ideal {
            Ok(quantum::ideal_predictions(Angle::from_degrees(0.0)).singles)
        } else {
            Ok(quantum::real_singles(&apparatus.build()?))
        }
    };
    let labels = |named: &[(&str, f64)]| {
        named
            .iter()
            .map(|(label, deg)| LabeledAngle {
                label: label.to_string(),
                deg: *deg,
            })
            .collect::<Vec<_>>()
    };
    let report = match kind {
        InequalityKind::Bell1965 => {
            let e = |m: f64, n: f64| -> Result<f64, Failure> {
                let j = joints(m, n)?;
                Ok(j.expectation() / j.sum())
            };
            inequalities::bell_1965(e(a, b)?, e(bp, a)?, e(ap, b)?)?
                .with_settings(labels(&[("a", a), ("b", b), ("ap", ap), ("bp", bp)]))
        }
        InequalityKind::Chsh => {
            let e = |m: f64, n: f64| -> Result<f64, Failure> {
                let j = joints(m, n)?;
                Ok(j.expectation() / j.sum())
            };
            inequalities::chsh(e(a, b)?, e(bp, a)?, e(ap, b)?, e(ap, bp)?)?
                .with_settings(labels(&[("a", a), ("b", b), ("ap", ap), ("bp", bp)]))
        }
        InequalityKind::ArdehaliIdeal => inequalities::ardehali_ideal(
            &joints(a, b)?,
            &joints(bp, a)?,
            &joints(ap, b)?,
            &joints(ap, bp)?,
            &singles()?,
            &singles()?,
        )?
        .with_settings(labels(&[("a", a), ("b", b), ("ap", ap), ("bp", bp)])),
        InequalityKind::ArdehaliStrong => {
            let inputs = StrongInputs {
                j_ab: joints(a, b)?,
                j_bpa: joints(bp, a)?,
                j_apb: joints(ap, b)?,
                j_apbp: joints(ap, bp)?,
                j_apr: joints(ap, r)?,
                j_rbp: joints(r, bp)?,
                j_rr: joints(r, r)?,
            };
            inequalities::ardehali_strong(&inputs)?.with_settings(labels(&[
                ("a", a),
                ("b", b),
                ("ap", ap),
                ("bp", bp),
                ("r", r),
            ]))
        }
        InequalityKind::Ch => {
            return Err(Failure::usage(
                "ch has no built-in one-channel quantum model; supply --input",
            ))
        }
    };
    Ok(report)
}

// ---------------------------------------------------------------------------
// verify-theorem
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TheoremSummary {
    u: f64,
    v: f64,
    max_z_vertex: f64,
    argmax: BTreeMap<String, f64>,
    max_z_sampled: f64,
    samples: u64,
    seed: u64,
    tolerance: f64,
    passed: bool,
}

fn cmd_verify_theorem(
    format: Format,
    u: f64,
    v: f64,
    samples: u64,
    seed: u64,
) -> Result<(), Failure> {
    let scan = theorem::verify_vertices(u, v).map_err(Failure::usage)?;
    let sampled = theorem::verify_random(u, v, samples, seed).map_err(Failure::usage)?;
    let tolerance = 1e-15 * (u * v).max(1.0);
    let passed = scan.max_z <= tolerance && sampled <= scan.max_z + 1e-12;
    let argmax = BTreeMap::from([
        ("x1p".to_string(), scan.argmax.x1p),
        ("x1m".to_string(), scan.argmax.x1m),
        ("x2p".to_string(), scan.argmax.x2p),
        ("x2m".to_string(), scan.argmax.x2m),
        ("y1p".to_string(), scan.argmax.y1p),
        ("y1m".to_string(), scan.argmax.y1m),
        ("y2p".to_string(), scan.argmax.y2p),
        ("y2m".to_string(), scan.argmax.y2m),
    ]);
    let summary = TheoremSummary {
        u,
        v,
        max_z_vertex: scan.max_z,
        argmax,
        max_z_sampled: sampled,
        samples,
        seed,
        tolerance,
        passed,
    };
    match format {
        Format::Json => print_json(&summary)?,
        Format::Csv => {
            println!("u,v,max_z_vertex,max_z_sampled,samples,seed,passed");
            println!(
                "{},{},{},{},{},{},{}",
                u, v, summary.max_z_vertex, summary.max_z_sampled, samples, seed, passed
            );
        }
    }
    if !passed {
        return Err(Failure::new(
            4,
            format!(
                "theorem bound numerically breached: vertex max {} sampled max {}",
                summary.max_z_vertex, summary.max_z_sampled
            ),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lhv
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LhvSummary<'a> {
    #[serde(flatten)]
    report: &'a InequalityReport,
    unit: &'static str,
    sigma: f64,
    three_sigma_bound: f64,
    within_bound: bool,
    model: String,
    d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    supplementary: Option<lhv::AssumptionCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel_sum_equality: Option<lhv::AssumptionCheck>,
    meta: Meta,
}

#[allow(clippy::too_many_arguments)]
fn cmd_lhv(
    format: Format,
    model_name: &str,
    d: f64,
    shots: u64,
    seed: u64,
    t_deg: f64,
    check_assumptions: bool,
    check_lambdas: u64,
) -> Result<(), Failure> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Failure::usage(format!("--d must be in (0, 1], got {d}")));
    }
    let model = BuiltinModel::by_name(model_name, d).ok_or_else(|| {
        Failure::usage(format!(
            "unknown model {model_name}; built-ins: {}",
            BuiltinModel::NAMES.join(", ")
        ))
    })?;
    let t = Angle::from_degrees(t_deg);
    let run = lhv::run_strong(&model, t, shots, seed)?;
    let report = run.report.with_settings(vec![
        LabeledAngle {
            label: "a".into(),
            deg: t_deg,
        },
        LabeledAngle {
            label: "b".into(),
            deg: 2.0 * t_deg,
        },
        LabeledAngle {
            label: "ap".into(),
            deg: 0.0,
        },
        LabeledAngle {
            label: "bp".into(),
            deg: 0.0,
        },
        LabeledAngle {
            label: "r".into(),
            deg: 0.0,
        },
    ]);
    let (supplementary, channel_sum_equality) = if check_assumptions {
        let settings = vec![
            t,
            Angle::from_degrees(2.0 * t_deg),
            Angle::from_degrees(0.0),
        ];
        let r = Angle::from_degrees(0.0);
        (
            Some(lhv::check_supplementary(&model, &settings, r, check_lambdas, seed)),
            Some(lhv::check_gr(&model, &settings, r, check_lambdas, seed)),
        )
    } else {
        (None, None)
    };
    let summary = LhvSummary {
        report: &report,
        unit: "deg",
        sigma: run.sigma,
        three_sigma_bound: 1.0 + 3.0 * run.sigma,
        within_bound: report.lhs <= 1.0 + 3.0 * run.sigma,
        model: model_name.to_string(),
        d,
        supplementary,
        channel_sum_equality,
        meta: Meta {
            seed: Some(seed),
            shots: Some(shots),
            eta: None,
            phi_deg: None,
        },
    };
    match format {
        Format::Json => print_json(&summary),
        Format::Csv => {
            println!("inequality,lhs,bound,violation_factor,sigma,within_bound");
            println!(
                "{},{},{},{},{},{}",
                report.inequality.as_str(),
                report.lhs,
                report.bound,
                report.violation_factor,
                run.sigma,
                summary.within_bound
            );
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OptimizeSummary {
    inequality: InequalityKind,
    source: String,
    best_t_deg: f64,
    best_lhs: f64,
    settings: Vec<LabeledAngle>,
    curve: Vec<(f64, f64)>,
    meta: Meta,
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    format: Format,
    kind: InequalityKind,
    source_name: &str,
    apparatus: &ApparatusArgs,
    model_name: &str,
    d: f64,
    shots: u64,
    seed: u64,
    grid_step: f64,
    tolerance: f64,
    out: Option<&str>,
    full_grid: bool,
) -> Result<(), Failure> {
    let mut source: Box<dyn SymmetricSource> = match source_name {
        "ideal" => Box::new(IdealQmSource),
        "real" => Box::new(RealQmSource::new(apparatus.build()?)),
        "lhv" => {
            let model = BuiltinModel::by_name(model_name, d).ok_or_else(|| {
                Failure::usage(format!(
                    "unknown model {model_name}; built-ins: {}",
                    BuiltinModel::NAMES.join(", ")
                ))
            })?;
            Box::new(LhvSource::new(model, shots, seed))
        }
        other => {
            return Err(Failure::usage(format!(
                "unknown source {other}; expected ideal, real or lhv"
            )))
        }
    };

    if full_grid {
        let best = optimizer::scan_full_grid(kind, source.as_mut(), grid_step)?;
        let settings = vec![
            LabeledAngle { label: "a".into(), deg: best.a_deg },
            LabeledAngle { label: "b".into(), deg: best.b_deg },
            LabeledAngle { label: "ap".into(), deg: best.ap_deg },
            LabeledAngle { label: "bp".into(), deg: 0.0 },
            LabeledAngle { label: "r".into(), deg: 0.0 },
        ];
        let summary = OptimizeSummary {
            inequality: kind,
            source: source_name.to_string(),
            best_t_deg: f64::NAN,
            best_lhs: best.best_lhs,
            settings,
            curve: Vec::new(),
            meta: opt_meta(source_name, apparatus, shots, seed),
        };
        return print_optimize(format, &summary, out);
    }

    let scan = optimizer::scan_symmetric(kind, source.as_mut(), grid_step, tolerance)?;
    let t = scan.best_t_deg;
    let settings = vec![
        LabeledAngle { label: "a".into(), deg: t },
        LabeledAngle { label: "b".into(), deg: 2.0 * t },
        LabeledAngle { label: "ap".into(), deg: 0.0 },
        LabeledAngle { label: "bp".into(), deg: 0.0 },
        LabeledAngle { label: "r".into(), deg: 0.0 },
    ];
    let summary = OptimizeSummary {
        inequality: kind,
        source: source_name.to_string(),
        best_t_deg: scan.best_t_deg,
        best_lhs: scan.best_lhs,
        settings,
        curve: scan.curve,
        meta: opt_meta(source_name, apparatus, shots, seed),
    };
    print_optimize(format, &summary, out)
}

fn opt_meta(source_name: &str, apparatus: &ApparatusArgs, shots: u64, seed: u64) -> Meta {
    Meta {
        seed: (source_name == "lhv").then_some(seed),
        shots: (source_name == "lhv").then_some(shots),
        eta: (source_name == "real").then_some(apparatus.eta),
        phi_deg: (source_name == "real").then_some(apparatus.phi_deg),
    }
}

fn print_optimize(
    format: Format,
    summary: &OptimizeSummary,
    out: Option<&str>,
) -> Result<(), Failure> {
    if let Some(path) = out {
        let mut text = String::from("t_deg,lhs\n");
        for (t, lhs) in &summary.curve {
            text.push_str(&format!("{t},{lhs}\n"));
        }
        fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write curve to {path}: {e}")))?;
    }
    match format {
        Format::Json => print_json(summary),
        Format::Csv => {
            println!("t_deg,lhs");
            for (t, lhs) in &summary.curve {
                println!("{t},{lhs}");
            }
            Ok(())
        }
    }
}
