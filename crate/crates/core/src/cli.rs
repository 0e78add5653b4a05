//! Command-line front end. `run_cli` returns the process exit code:
//! 0 on success, 1 when a check fails or a channel is aborted, 2 on a usage
//! error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bellcodec::{BellOutcome, Sign};
use crate::channel::ChannelVariant;
use crate::error::Error;
use crate::netsim::{efficiency_report, simulate_session, Broadcast, EfficiencyReport, Session, SessionConfig};
use crate::protocol::{
    derive_correction_table, golden_table, verify_all_branches, CorrectionRule, ModePlan, NParity, RunStatus,
    MAX_VERIFY_CONTROLLERS,
};
use crate::qss::{qss_exhaustive, qss_run, setup_channel, ChannelSetup, ClassicalMessage, Decision, EavesdropModel};
use crate::statevec::{TwoQubitInput, STATE_TOL};

pub const SCHEMA_VERSION: &str = "1";

/// Largest squared-norm error fixed silently (with a warning) on input.
pub const RENORMALIZE_SLACK: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(
    name = "cteleport",
    version,
    about = "Multiparty-controlled teleportation of two-qubit states over GHZ channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one session and print its JSON trace.
    Run(RunArgs),
    /// Walk every outcome branch and check fidelity, probabilities and the analytic prediction.
    Verify(VerifyArgs),
    /// Re-derive the correction tables by brute force and diff them against the built-in ones.
    Tables(TablesArgs),
    /// Secret-sharing demos.
    #[command(subcommand)]
    Qss(QssCommand),
    /// Qubit and total efficiency per controller count.
    Efficiency(EfficiencyArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Number of controllers.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value = "x-second", value_parser = parse_variant)]
    variant: ChannelVariant,
    /// All four amplitudes, e.g. "0.5 0.5 0.5,0 0,0.5".
    #[arg(long, conflicts_with_all = ["a", "b", "c", "d", "random"])]
    state: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    d: Option<String>,
    /// Draw the input from the seeded generator.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated outcomes in cascade order, e.g. "psi-,phi-,psi-".
    #[arg(long)]
    forced: Option<String>,
    /// Agent who rebuilds the state (default: agent n+1).
    #[arg(long)]
    receiver: Option<usize>,
    /// Agent who measures but never publishes. Repeatable.
    #[arg(long)]
    silent: Vec<usize>,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Controller count or inclusive range, e.g. "2" or "0..3".
    #[arg(long, default_value = "0..3")]
    n: String,
    #[arg(long, default_value = "x-second", value_parser = parse_variant)]
    variant: ChannelVariant,
    /// Random inputs per controller count.
    #[arg(long, default_value_t = 1)]
    inputs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParityArg {
    Odd,
    Even,
    Both,
}

#[derive(Args, Debug)]
struct TablesArgs {
    #[arg(long, value_enum, default_value_t = ParityArg::Both)]
    parity: ParityArg,
    #[arg(long, default_value = "x-second", value_parser = parse_variant)]
    variant: ChannelVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum QssCommand {
    /// Send a two-bit classical secret and decode it.
    Classical(ClassicalArgs),
    /// Simulate the sampled and decoy channel check.
    Setup(SetupArgs),
}

#[derive(Args, Debug)]
struct ClassicalArgs {
    /// One of 0+, 1-, 0-, 1+ (default: all four).
    #[arg(long, allow_hyphen_values = true)]
    message: Option<String>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check every branch instead of sampling one.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args, Debug)]
struct SetupArgs {
    #[arg(long, default_value_t = 10_000)]
    rounds: usize,
    #[arg(long, default_value_t = 0.5)]
    sample_fraction: f64,
    #[arg(long, default_value_t = 0.25)]
    decoy_fraction: f64,
    /// Intercept-resend on this fraction of rounds.
    #[arg(long)]
    intercept: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 1)]
    controllers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EfficiencyArgs {
    /// Controller count or inclusive range.
    #[arg(long, default_value = "0..6")]
    n: String,
}

fn parse_variant(s: &str) -> Result<ChannelVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `"re,im"` or `"re"`.
pub fn parse_complex(s: &str) -> Result<Complex64, Error> {
    let bad = || Error::InvalidConfig(format!("not a complex amplitude: {s:?}"));
    let mut parts = s.trim().split(',');
    let re = parts.next().ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?;
    let im = match parts.next() {
        Some(p) => p.trim().parse::<f64>().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// `"2"` or `"0..3"` (inclusive).
pub fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, Error> {
    let bad = || Error::InvalidConfig(format!("not a count or range: {s:?}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let r = match s.split_once("..") {
        Some((lo, hi)) => num(lo)?..=num(hi.trim_start_matches('='))?,
        None => {
            let v = num(s)?;
            v..=v
        }
    };
    if r.is_empty() {
        return Err(bad());
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub n: usize,
    pub variant: ChannelVariant,
    pub receiver: usize,
    pub input: [Complex64; 4],
    pub modes: ModePlan,
    pub seed: u64,
    pub silent: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub label: String,
    pub outcome: BellOutcome,
    pub v: u8,
    pub p: Sign,
}

/// The JSON trace written by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_version: String,
    pub config: TraceConfig,
    pub ledger: Vec<LedgerRow>,
    pub v_total: u8,
    pub p_total: Sign,
    pub correction: Option<CorrectionRule>,
    pub fidelity: f64,
    pub global_phase: Complex64,
    pub efficiency: EfficiencyReport,
    pub status: RunStatus,
    pub probability: f64,
    pub pre_correction: Vec<Complex64>,
    pub post_correction: Vec<Complex64>,
    pub transcript: Vec<Broadcast>,
    pub guess_fidelity: Option<f64>,
}

impl TraceDocument {
    pub fn new(config: TraceConfig, session: &Session) -> Self {
        let t = &session.trace;
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            config,
            ledger: t
                .ledger
                .entries()
                .iter()
                .map(|e| LedgerRow {
                    label: e.label.clone(),
                    outcome: e.outcome,
                    v: e.outcome.bit_value(),
                    p: e.outcome.parity(),
                })
                .collect(),
            v_total: t.v_total,
            p_total: t.p_total,
            correction: t.correction,
            fidelity: t.fidelity,
            global_phase: t.global_phase,
            efficiency: session.efficiency.clone(),
            status: t.status,
            probability: t.probability,
            pre_correction: t.pre_correction.amplitudes().to_vec(),
            post_correction: t.post_correction.amplitudes().to_vec(),
            transcript: session.transcript.clone(),
            guess_fidelity: session.guess_fidelity,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("bad trace: {e}")))
    }
}

/// A failure of the run itself (exit 1) or of its configuration (exit 2).
enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::OracleFailure(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn read_input(args: &RunArgs, err: &mut dyn Write) -> Result<TwoQubitInput, Failure> {
    let amps: Vec<Complex64> = if args.random {
        return Ok(TwoQubitInput::random(&mut ChaCha8Rng::seed_from_u64(args.seed)));
    } else if let Some(s) = &args.state {
        s.split_whitespace().map(parse_complex).collect::<Result<_, _>>()?
    } else if [&args.a, &args.b, &args.c, &args.d].iter().any(|x| x.is_some()) {
        [&args.a, &args.b, &args.c, &args.d]
            .iter()
            .map(|x| x.as_deref().map_or(Ok(Complex64::new(0.0, 0.0)), parse_complex))
            .collect::<Result<_, _>>()?
    } else {
        return Err(Failure::Usage("give --state, --a..--d or --random".into()));
    };
    let amps: [Complex64; 4] = amps
        .try_into()
        .map_err(|v: Vec<Complex64>| Failure::Usage(format!("need 4 amplitudes, got {}", v.len())))?;
    let (input, rescaled) = TwoQubitInput::renormalized(amps, RENORMALIZE_SLACK)?;
    if rescaled {
        let _ = writeln!(err, "warning: input renormalized");
    }
    Ok(input)
}

fn cmd_run(args: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let input = read_input(&args, err)?;
    let modes = match &args.forced {
        Some(list) => ModePlan::forced(
            &list
                .split(',')
                .map(|s| s.parse::<BellOutcome>())
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => ModePlan::sample(args.seed),
    };
    let cfg = SessionConfig {
        n: args.n,
        variant: args.variant,
        receiver: args.receiver.unwrap_or(args.n + 1),
        modes: modes.clone(),
        silent: args.silent.clone(),
    };
    let session = simulate_session(&input, &cfg)?;
    let doc = TraceDocument::new(
        TraceConfig {
            n: cfg.n,
            variant: cfg.variant,
            receiver: cfg.receiver,
            input: input.amplitudes(),
            modes,
            seed: args.seed,
            silent: cfg.silent,
        },
        &session,
    );
    let json = doc.to_json();
    match &args.output {
        Some(path) => {
            fs::write(path, format!("{json}\n")).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let _ = writeln!(
                out,
                "status {:?}, fidelity {:.12}, written to {}",
                doc.status,
                doc.fidelity,
                path.display()
            );
        }
        None => {
            let _ = writeln!(out, "{json}");
        }
    }
    Ok(match doc.status {
        RunStatus::Reconstructed => 1.0 - doc.fidelity <= STATE_TOL,
        RunStatus::EprClassDemo => true,
        RunStatus::Unreconstructable => false,
    })
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let range = parse_range(&args.n)?;
    if *range.end() > MAX_VERIFY_CONTROLLERS {
        return Err(Failure::Usage(format!(
            "n above {MAX_VERIFY_CONTROLLERS} is not enumerable"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let _ = writeln!(
        out,
        "{:>2} {:>5} {:>9} {:>10} {:>10} {:>10} {:>10} {:>5}  result",
        "n", "input", "branches", "max|dp|", "max(1-F)", "predictor", "table", "cnot"
    );
    let mut all = true;
    for n in range {
        for i in 0..args.inputs.max(1) {
            let input = TwoQubitInput::random(&mut rng);
            let r = verify_all_branches(&input, n, args.variant)?;
            let ok = r.all_passed();
            all &= ok;
            let _ = writeln!(
                out,
                "{:>2} {:>5} {:>4}/{:<4} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>5}  {}",
                n,
                i,
                r.passed,
                r.branches,
                r.max_probability_deviation,
                r.max_fidelity_deviation,
                r.max_predictor_distance,
                r.max_golden_distance,
                r.cnot_used,
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok(all)
}

fn cmd_tables(args: TablesArgs, out: &mut dyn Write) -> Outcome {
    let parities = match args.parity {
        ParityArg::Odd => vec![NParity::Odd],
        ParityArg::Even => vec![NParity::Even],
        ParityArg::Both => vec![NParity::Odd, NParity::Even],
    };
    let mut all = true;
    for parity in parities {
        let _ = writeln!(out, "{parity} controller count, {} channel", args.variant);
        let derived = match derive_correction_table(parity, args.variant, args.seed) {
            Ok(t) => t,
            Err(e @ Error::OracleFailure(_)) => {
                let _ = writeln!(out, "  derivation failed: {e}");
                all = false;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let golden = golden_table(parity);
        let mut matched = 0;
        for (d, g) in derived.rows.iter().zip(&golden) {
            let ok = d.rule == g.rule && d.state == Some(g.state);
            matched += ok as usize;
            let _ = writeln!(
                out,
                "  {}  {:<28} {:<16} {}",
                d.key,
                d.state_string(),
                d.rule.to_string(),
                if ok { "ok" } else { "MISMATCH" }
            );
            if !ok {
                let _ = writeln!(out, "{:>10}expected {:<19} {}", "", g.state_string(), g.rule);
            }
        }
        let _ = writeln!(out, "  correction table: {matched}/16 rows match (n = {})", derived.n);
        all &= matched == 16;

        let n = derived.n;
        let mut classical = 0;
        for m in ClassicalMessage::ALL {
            let s = qss_exhaustive(m, n)?;
            classical += s.all_correct() as usize;
        }
        let _ = writeln!(
            out,
            "  classical-secret table: {classical}/4 messages reproduce and decode (n = {n})"
        );
        all &= classical == 4;
    }
    Ok(all)
}

fn cmd_classical(args: ClassicalArgs, out: &mut dyn Write) -> Outcome {
    let messages = match &args.message {
        Some(m) => vec![m.parse::<ClassicalMessage>()?],
        None => ClassicalMessage::ALL.to_vec(),
    };
    let mut all = true;
    for m in messages {
        if args.exhaustive {
            let s = qss_exhaustive(m, args.n)?;
            all &= s.all_correct();
            let _ = writeln!(
                out,
                "{m}: {}/{} branches decoded, {}/{} match the table",
                s.decoded_correctly, s.branches, s.matched_table, s.branches
            );
        } else {
            let (decoded, t) = qss_run(m, args.n, &ModePlan::sample(args.seed))?;
            all &= decoded == m;
            let outcomes: Vec<String> = t.ledger.outcomes().iter().map(|o| o.to_string()).collect();
            let _ = writeln!(
                out,
                "{m}: carrier {}, outcomes [{}], totals ({}, {}), receiver read {}, decoded {decoded}",
                t.carrier,
                outcomes.join(" "),
                t.v_total,
                t.p_total,
                t.bob
            );
        }
    }
    Ok(all)
}

fn cmd_setup(args: SetupArgs, out: &mut dyn Write) -> Outcome {
    let cfg = ChannelSetup {
        rounds: args.rounds,
        sample_fraction: args.sample_fraction,
        decoy_fraction: args.decoy_fraction,
        eve: match args.intercept {
            Some(fraction) => EavesdropModel::InterceptResend { fraction },
            None => EavesdropModel::None,
        },
        threshold: args.threshold,
        controllers: args.controllers,
        seed: args.seed,
    };
    let r = setup_channel(&cfg)?;
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&r).expect("report serializes"));
    Ok(r.decision == Decision::Accept)
}

fn cmd_efficiency(args: EfficiencyArgs, out: &mut dyn Write) -> Outcome {
    for n in parse_range(&args.n)? {
        let r = efficiency_report(n);
        let _ = writeln!(
            out,
            "n = {n}: q_u = {}, q_t = {}, b_t = {}, eta_q = {:.4}, eta_t = {:.4}",
            r.q_u, r.q_t, r.b_t, r.eta_q, r.eta_t
        );
    }
    Ok(true)
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Tables(a) => cmd_tables(a, out),
        Command::Qss(QssCommand::Classical(a)) => cmd_classical(a, out),
        Command::Qss(QssCommand::Setup(a)) => cmd_setup(a, out),
        Command::Efficiency(a) => cmd_efficiency(a, out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Check(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("cteleport").chain(args.iter().copied());
        let code = run_cli_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parsers() {
        assert_eq!(parse_complex("0.5,-0.25").unwrap(), Complex64::new(0.5, -0.25));
        assert_eq!(parse_complex("1").unwrap(), Complex64::new(1.0, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("x").is_err());
        assert_eq!(parse_range("0..3").unwrap(), 0..=3);
        assert_eq!(parse_range("0..=3").unwrap(), 0..=3);
        assert_eq!(parse_range("2").unwrap(), 2..=2);
        assert!(parse_range("3..1").is_err());
    }

    #[test]
    fn efficiency_line() {
        let (code, out, _) = run(&["efficiency", "--n", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("eta_q = 0.3333"), "{out}");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&["bogus"]).0, 2);
        assert_eq!(run(&["run", "--n", "x"]).0, 2);
        assert_eq!(run(&["run", "--state", "1 0 0"]).0, 2);
        assert_eq!(run(&["run", "--state", "1 1 0 0"]).0, 2);
        assert_eq!(run(&["run"]).0, 2);
        assert_eq!(run(&["verify", "--n", "0..9"]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn renormalization_warns() {
        let (code, _, err) = run(&["run", "--state", "1.0000001 0 0 0"]);
        assert_eq!(code, 0);
        assert!(err.contains("renormalized"));
    }

    #[test]
    fn worked_example_trace() {
        let (code, out, _) = run(&["run", "--random", "--seed", "3", "--forced", "psi-,phi-,psi-"]);
        assert_eq!(code, 0);
        let doc = TraceDocument::from_json(&out).unwrap();
        assert_eq!(doc.schema_version, "1");
        let c = doc.correction.unwrap();
        assert_eq!(c.to_string(), "U3⊗U1 + CNot");
        assert_eq!(
            (doc.ledger[0].v, doc.v_total, doc.ledger[1].p, doc.p_total),
            (1, 0, Sign::Minus, Sign::Minus)
        );
        assert!((doc.global_phase + 1.0).norm() < 1e-10);
    }

    #[test]
    fn silent_run_fails() {
        let (code, out, _) = run(&["run", "--random", "--n", "2", "--silent", "1"]);
        assert_eq!(code, 1);
        let doc = TraceDocument::from_json(&out).unwrap();
        assert_eq!(doc.status, RunStatus::Unreconstructable);
        assert!(doc.guess_fidelity.unwrap() < 1.0);
    }
}
