//! Command-line runner for the QKD protocol simulator.
//!
//! Subcommands: `run` executes one seeded session and writes its JSON
//! report (optionally with the round-trace CSV), `sweep` scans a parameter
//! grid and emits one summary row per cell, `verify-identities`
//! re-validates the state-algebra catalogue of the math core, and
//! `demo-han` prints the interception contrast between the legacy
//! three-photon scheme and the controller triplets.
//!
//! Exit codes: 0 success/completed, 1 usage error, 2 session aborted on
//! the eavesdropping check, 3 identity verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use qkd_core::analysis::{summarize, RunReport};
use qkd_core::protocol::{exact_qber_oracle, run, OracleOptions, Protocol, SessionConfig};
use qkd_core::quantum::MeasurementBasis;
use qkd_core::report::{render_json, trace_csv, JsonRunReport};
use qkd_core::rng::Prng;
use qkd_core::{
    bell_intercept_demo, han_attack_demo, verify_identities, BasisPolicy, EveStrategy, NoiseSpec,
    ResendPolicy,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_IDENTITY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qkd",
    version,
    about = "Deterministic simulator for entanglement-based key distribution protocols"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one protocol session and write its report.
    Run(RunArgs),
    /// Scan a one-dimensional parameter grid and summarize each cell.
    Sweep(SweepArgs),
    /// Re-validate the entangled-state identity catalogue.
    VerifyIdentities(VerifyArgs),
    /// Interception demo: legacy three-photon scheme vs controller triplets.
    DemoHan(DemoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    P1,
    P2,
    P3,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Controlled,
    ThreeParty,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttackArg {
    None,
    InterceptResend,
    Cnot,
    Bell,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Z,
    X,
}

impl From<BasisArg> for MeasurementBasis {
    fn from(b: BasisArg) -> MeasurementBasis {
        match b {
            BasisArg::Z => MeasurementBasis::Z,
            BasisArg::X => MeasurementBasis::X,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EveBasisArg {
    RandomZx,
    AlwaysZ,
    AlwaysX,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EveResendArg {
    Remap,
    AsMeasured,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    CsvTrace,
    Both,
}

/// Session parameters shared by `run` and `sweep`.
#[derive(Args, Clone)]
struct SessionArgs {
    /// Protocol to execute.
    #[arg(long, value_enum)]
    protocol: ProtocolArg,
    /// Key mode for the triplet protocol.
    #[arg(long, value_enum, default_value = "controlled")]
    mode: ModeArg,
    /// Rounds per batch.
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    /// Fraction of rounds sacrificed to the eavesdropping check.
    #[arg(long, default_value_t = 0.25)]
    check_fraction: f64,
    /// Abort when the estimated error rate exceeds this.
    #[arg(long, default_value_t = 0.11)]
    abort_threshold: f64,
    /// Adversary strategy on the quantum channel.
    #[arg(long, value_enum, default_value = "none")]
    attack: AttackArg,
    /// Basis policy of the intercept-resend attacker.
    #[arg(long, value_enum, default_value = "random-zx")]
    eve_basis: EveBasisArg,
    /// Resend policy of the intercept-resend attacker.
    #[arg(long, value_enum, default_value = "remap")]
    eve_resend: EveResendArg,
    /// Control basis of the collective CNOT probe.
    #[arg(long, value_enum, default_value = "x")]
    cnot_control: BasisArg,
    /// Probability that the controller measures in Z (triplet protocol).
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Depolarizing probability per transmitted qubit.
    #[arg(long, default_value_t = 0.0)]
    noise_p: f64,
    /// Session seed; the QKD_SEED environment variable overrides it.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Batches per session (defaults to 2 for the triplet protocol).
    #[arg(long)]
    batches: Option<usize>,
    /// Hadamard subset fraction of the block protocol.
    #[arg(long, default_value_t = 0.5)]
    hadamard_fraction: f64,
    /// Session-wide measurement basis of the block protocol.
    #[arg(long, value_enum, default_value = "z")]
    session_basis: BasisArg,
    /// Top-level error-correction block size.
    #[arg(long, default_value_t = 16)]
    ec_block: usize,
    /// Privacy-amplification security margin in bits.
    #[arg(long, default_value_t = 64)]
    security_param: usize,
}

impl SessionArgs {
    fn attack_strategy(&self) -> EveStrategy {
        match self.attack {
            AttackArg::None => EveStrategy::None,
            AttackArg::InterceptResend => EveStrategy::InterceptResend {
                basis: match self.eve_basis {
                    EveBasisArg::RandomZx => BasisPolicy::RandomZX,
                    EveBasisArg::AlwaysZ => BasisPolicy::AlwaysZ,
                    EveBasisArg::AlwaysX => BasisPolicy::AlwaysX,
                },
                resend: match self.eve_resend {
                    EveResendArg::Remap => ResendPolicy::RemapToDiagonal,
                    EveResendArg::AsMeasured => ResendPolicy::AsMeasuredEigenstate,
                },
            },
            AttackArg::Cnot => EveStrategy::CollectiveCnot {
                control_basis: self.cnot_control.into(),
            },
            AttackArg::Bell => EveStrategy::BellIntercept,
        }
    }

    fn session_config(&self) -> anyhow::Result<SessionConfig> {
        let protocol = match (self.protocol, self.mode) {
            (ProtocolArg::P1, _) => Protocol::P1,
            (ProtocolArg::P2, _) => Protocol::P2,
            (ProtocolArg::P3, ModeArg::Controlled) => Protocol::P3Controlled,
            (ProtocolArg::P3, ModeArg::ThreeParty) => Protocol::P3ThreeParty,
        };
        let mut cfg = SessionConfig::new(protocol);
        cfg.rounds = self.rounds;
        cfg.check_fraction = self.check_fraction;
        cfg.abort_threshold = self.abort_threshold;
        cfg.attack = self.attack_strategy();
        cfg.epsilon = self.epsilon;
        cfg.noise = NoiseSpec::depolarizing(self.noise_p)
            .map_err(|e| anyhow::anyhow!("--noise-p: {e}"))?;
        cfg.seed = seed_from_env(self.seed)?;
        if let Some(batches) = self.batches {
            cfg.session_batches = batches;
        }
        cfg.hadamard_fraction = self.hadamard_fraction;
        cfg.session_basis = self.session_basis.into();
        cfg.ec_block = self.ec_block;
        cfg.security_param = self.security_param;
        cfg.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(cfg)
    }
}

fn seed_from_env(flag_seed: u64) -> anyhow::Result<u64> {
    match std::env::var("QKD_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .with_context(|| format!("QKD_SEED must be a 64-bit unsigned integer, got {text:?}")),
        Err(_) => Ok(flag_seed),
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Report file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// What to emit: the JSON report, the round-trace CSV, or both files.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Comma-separated epsilon grid.
    #[arg(long, value_delimiter = ',')]
    grid_epsilon: Option<Vec<f64>>,
    /// Comma-separated depolarizing-probability grid.
    #[arg(long, value_delimiter = ',')]
    grid_noise_p: Option<Vec<f64>>,
    /// Comma-separated check-fraction grid.
    #[arg(long, value_delimiter = ',')]
    grid_check_fraction: Option<Vec<f64>>,
    /// Comma-separated attack grid.
    #[arg(long, value_delimiter = ',')]
    grid_attack: Option<Vec<AttackArg>>,
    /// Seeded runs per grid cell.
    #[arg(long, default_value_t = 20)]
    runs_per_cell: usize,
    /// CSV file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON report file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    /// Attack rounds per arm.
    #[arg(long, default_value_t = 10_000)]
    rounds: u64,
    /// Demo seed; the QKD_SEED environment variable overrides it.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// JSON report file in addition to the printed table.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn write_or_print(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(path) => std::fs::write(path, contents)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<u8> {
    let cfg = args.session.session_config()?;
    let oracle = exact_qber_oracle(cfg.protocol, &cfg.attack, &OracleOptions::from(&cfg))
        .ok()
        .map(|o| o.overall);
    let result = run(&cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
    let report = RunReport::from_run(&cfg, &result, oracle);
    let json = render_json(&JsonRunReport::from(&report));

    match args.format {
        FormatArg::Json => write_or_print(args.output.as_deref(), &json)?,
        FormatArg::CsvTrace => {
            write_or_print(args.output.as_deref(), &trace_csv(&result.traces))?
        }
        FormatArg::Both => {
            let path = args
                .output
                .as_deref()
                .context("--format both requires --output")?;
            std::fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
            let trace_path = path.with_extension("trace.csv");
            std::fs::write(&trace_path, trace_csv(&result.traces))
                .with_context(|| format!("writing {}", trace_path.display()))?;
        }
    }

    eprintln!(
        "{} seed={} rounds={} qber={:.4} status={:?} key_bits={}",
        cfg.protocol.label(),
        cfg.seed,
        cfg.rounds,
        result.qber_estimate,
        result.status,
        report.key_len_final,
    );
    Ok(if result.aborted() {
        EXIT_ABORTED
    } else {
        EXIT_OK
    })
}

enum SweepAxis {
    Epsilon(Vec<f64>),
    NoiseP(Vec<f64>),
    CheckFraction(Vec<f64>),
    Attack(Vec<AttackArg>),
}

impl SweepAxis {
    fn label(&self) -> &'static str {
        match self {
            SweepAxis::Epsilon(_) => "epsilon",
            SweepAxis::NoiseP(_) => "noise_p",
            SweepAxis::CheckFraction(_) => "check_fraction",
            SweepAxis::Attack(_) => "attack",
        }
    }

    fn len(&self) -> usize {
        match self {
            SweepAxis::Epsilon(v) | SweepAxis::NoiseP(v) | SweepAxis::CheckFraction(v) => v.len(),
            SweepAxis::Attack(v) => v.len(),
        }
    }
}

const MAX_SWEEP_CELLS: usize = 10_000;

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<u8> {
    let mut axes = Vec::new();
    if let Some(v) = &args.grid_epsilon {
        axes.push(SweepAxis::Epsilon(v.clone()));
    }
    if let Some(v) = &args.grid_noise_p {
        axes.push(SweepAxis::NoiseP(v.clone()));
    }
    if let Some(v) = &args.grid_check_fraction {
        axes.push(SweepAxis::CheckFraction(v.clone()));
    }
    if let Some(v) = &args.grid_attack {
        axes.push(SweepAxis::Attack(v.clone()));
    }
    let [axis] = axes.as_slice() else {
        bail!("sweep needs exactly one --grid-* axis");
    };
    if axis.len() == 0 {
        bail!("sweep grid is empty");
    }
    if axis.len() > MAX_SWEEP_CELLS {
        bail!("grid too large: {} cells exceed {MAX_SWEEP_CELLS}", axis.len());
    }
    if args.runs_per_cell == 0 {
        bail!("--runs-per-cell must be positive");
    }

    let base_seed = seed_from_env(args.session.seed)?;
    // Build every cell configuration up front so errors surface before any
    // simulation starts.
    let mut cells: Vec<(String, SessionConfig)> = Vec::new();
    for index in 0..axis.len() {
        let mut session = args.session.clone();
        let value_label;
        match axis {
            SweepAxis::Epsilon(v) => {
                session.epsilon = v[index];
                value_label = format!("{}", v[index]);
            }
            SweepAxis::NoiseP(v) => {
                session.noise_p = v[index];
                value_label = format!("{}", v[index]);
            }
            SweepAxis::CheckFraction(v) => {
                session.check_fraction = v[index];
                value_label = format!("{}", v[index]);
            }
            SweepAxis::Attack(v) => {
                session.attack = v[index];
                value_label = session.attack_strategy().label();
            }
        }
        let mut cfg = session.session_config()?;
        cfg.seed = base_seed.wrapping_add(index as u64);
        cells.push((value_label, cfg));
    }

    let rows: Vec<anyhow::Result<String>> = cells
        .par_iter()
        .enumerate()
        .map(|(index, (value_label, cell_cfg))| {
            let oracle = exact_qber_oracle(
                cell_cfg.protocol,
                &cell_cfg.attack,
                &OracleOptions::from(cell_cfg),
            )
            .ok()
            .map(|o| o.overall);
            // Per-run seeds come from the cell seed's own stream.
            let mut seeder = Prng::new(cell_cfg.seed);
            let mut reports = Vec::with_capacity(args.runs_per_cell);
            for _ in 0..args.runs_per_cell {
                let mut run_cfg = cell_cfg.clone();
                run_cfg.seed = seeder.next_u64();
                let result = run(&run_cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
                reports.push(RunReport::from_run(&run_cfg, &result, oracle));
            }
            let agg = summarize(&reports).map_err(|e| anyhow::anyhow!("{e}"))?;
            let mut row = String::new();
            write!(
                row,
                "{index},{axis},{value},{protocol},{attack},{runs},{aborts},{abort_rate},{mean_qber},{pooled_qber},{ci_lo},{ci_hi},{oracle},{eff_t},{eff_q},{key_len}",
                index = index,
                axis = axis.label(),
                value = value_label,
                protocol = agg.protocol.label(),
                attack = agg.attack,
                runs = agg.runs,
                aborts = (agg.abort_rate * agg.runs as f64).round() as u64,
                abort_rate = agg.abort_rate,
                mean_qber = agg.mean_qber,
                pooled_qber = agg.pooled_qber,
                ci_lo = agg.qber_ci99.0,
                ci_hi = agg.qber_ci99.1,
                oracle = oracle.map(|o| o.to_string()).unwrap_or_default(),
                eff_t = agg.mean_efficiency_total,
                eff_q = agg.mean_efficiency_qubits,
                key_len = agg.mean_key_len_final,
            )
            .expect("write to string");
            Ok(row)
        })
        .collect();

    let mut csv = String::from(
        "cell,axis,value,protocol,attack,runs,aborts,abort_rate,mean_qber,pooled_qber,qber_ci99_lo,qber_ci99_hi,qber_oracle,mean_efficiency_total,mean_efficiency_qubits,mean_key_len_final\n",
    );
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    write_or_print(args.output.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn cmd_verify_identities(args: &VerifyArgs) -> anyhow::Result<u8> {
    let report = verify_identities();
    let json = serde_json::json!({
        "all_pass": report.all_pass(),
        "identities": report.checks,
    });
    let mut text = serde_json::to_string_pretty(&json).expect("serializable");
    text.push('\n');
    write_or_print(args.output.as_deref(), &text)?;
    if report.all_pass() {
        Ok(EXIT_OK)
    } else {
        for failure in report.failures() {
            eprintln!(
                "identity failed: {} (overlap deficit {})",
                failure.name, failure.overlap_deficit
            );
        }
        Ok(EXIT_IDENTITY)
    }
}

fn cmd_demo_han(args: &DemoArgs) -> anyhow::Result<u8> {
    let seed = seed_from_env(args.seed)?;
    let mut rng = Prng::new(seed);
    let han = han_attack_demo(args.rounds, &mut rng);
    let triplet = bell_intercept_demo(args.rounds, &mut rng);

    println!("interception contrast over {} rounds (seed {seed})", args.rounds);
    println!("target                     guess accuracy   detections");
    println!(
        "legacy three-photon        {:<16.4} {} events",
        han.guess_accuracy, han.detection_events
    );
    println!(
        "controller triplets        {:<16.4} {} events (rate {:.4})",
        triplet.guess_accuracy, triplet.violation_events, triplet.violation_rate
    );

    if let Some(path) = &args.output {
        let json = serde_json::json!({
            "rounds": args.rounds,
            "seed": seed,
            "han": han,
            "bell_intercept": triplet,
        });
        let mut text = serde_json::to_string_pretty(&json).expect("serializable");
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not usage errors.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::from(EXIT_OK);
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::VerifyIdentities(args) => cmd_verify_identities(args),
        Command::DemoHan(args) => cmd_demo_han(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
