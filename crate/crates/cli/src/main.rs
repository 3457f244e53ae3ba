use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cids_core::chain::{TransactionLog, TxLogError, TxPayload};
use cids_core::harness::{
    emit_csv, replay_log, run_scenario, verify_decision_bounds, HarnessError, ScenarioConfig,
};
use cids_core::rulestore::audit_bundle_dir;

const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "cids", version, about = "Trust-managed rule sharing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its artifacts.
    Run {
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory. Defaults to the scenario's `output_path`, then
        /// `$CIDS_OUTPUT_DIR/<scenario name>`, then `runs/<scenario name>`.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Re-fold a transaction log and check it against its checkpoint.
    Replay { txlog: PathBuf },
    /// Check every recorded rule trust and reputation against the bounds.
    VerifyBounds { txlog: PathBuf },
    /// Re-hash every bundle in a run directory.
    AuditStore { run_dir: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::new(e.exit_code() as u8, e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            output,
        } => run(&scenario, seed, output),
        Command::Replay { txlog } => replay(&txlog),
        Command::VerifyBounds { txlog } => verify_bounds(&txlog),
        Command::AuditStore { run_dir } => audit_store(&run_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn output_dir(scenario: &Path, config: &ScenarioConfig, flag: Option<PathBuf>) -> PathBuf {
    let stem = scenario
        .file_stem()
        .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    flag.or_else(|| config.output_path.clone())
        .or_else(|| std::env::var_os("CIDS_OUTPUT_DIR").map(|d| PathBuf::from(d).join(&stem)))
        .unwrap_or_else(|| Path::new("runs").join(stem))
}

fn run(scenario: &Path, seed: Option<u64>, output: Option<PathBuf>) -> Result<(), Failure> {
    let mut config = ScenarioConfig::load(scenario)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let dir = output_dir(scenario, &config, output);
    let artifacts = run_scenario(&config)?;
    emit_csv(&artifacts, &dir)?;

    let state = artifacts.ledger.state();
    println!("wrote {}", dir.display());
    println!(
        "rounds={} decisions={} r_db={} rejected={}",
        config.rounds,
        state.decisions.len(),
        state.r_db.len(),
        artifacts.rejections.len()
    );
    for traj in &artifacts.trajectories {
        println!("{:<12} T={:.6}", traj.contributor, traj.final_reputation());
    }
    Ok(())
}

fn read_log(path: &Path) -> Result<TransactionLog, Failure> {
    let file = File::open(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    TransactionLog::read_from(BufReader::new(file)).map_err(|e| {
        let code = match e {
            TxLogError::Io(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, format!("{}: {e}", path.display()))
    })
}

fn replay(path: &Path) -> Result<(), Failure> {
    let log = read_log(path)?;
    let (ledger, report) = replay_log(&log)?;
    let violations = ledger.check_invariants();
    if !violations.is_empty() {
        return Err(Failure::new(EXIT_INVARIANT, violations.join("; ")));
    }
    match report.checkpoint_matches {
        Some(false) => {
            let expected = log.checkpoint.map(|c| c.state_digest).unwrap_or_default();
            Err(Failure::new(
                EXIT_INVARIANT,
                format!("state digest {} does not match checkpoint {expected}", report.state_digest),
            ))
        }
        matches => {
            println!(
                "replayed {} transactions, {} decisions",
                report.transactions, report.decisions
            );
            println!("state digest {}", report.state_digest);
            if matches.is_none() {
                println!("no checkpoint in log; nothing to compare");
            }
            Ok(())
        }
    }
}

fn verify_bounds(path: &Path) -> Result<(), Failure> {
    let log = read_log(path)?;
    let (ledger, report) = replay_log(&log)?;
    let violations = verify_decision_bounds(ledger.params(), &ledger.state().decisions);
    if !violations.is_empty() {
        return Err(Failure::new(EXIT_INVARIANT, violations.join("; ")));
    }
    println!("{} decisions within bounds", report.decisions);
    Ok(())
}

fn audit_store(run_dir: &Path) -> Result<(), Failure> {
    let bundles = run_dir.join("bundles");
    let audit = audit_bundle_dir(&bundles).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    let mut problems: Vec<String> = audit
        .mismatched
        .iter()
        .map(|p| format!("hash mismatch: {}", p.display()))
        .chain(audit.malformed.iter().map(|p| format!("malformed: {}", p.display())))
        .collect();

    let txlog = run_dir.join("txlog.ndjson");
    if txlog.is_file() {
        let log = read_log(&txlog)?;
        let referenced: BTreeSet<_> = log
            .transactions
            .iter()
            .filter_map(|tx| match &tx.payload {
                TxPayload::RuleSubmission { rule } => Some(*rule),
                _ => None,
            })
            .collect();
        for rule in referenced {
            if !bundles.join(format!("{}.bundle", rule.to_hex())).is_file() {
                problems.push(format!("submitted rule {rule} has no bundle"));
            }
        }
    }
    if !problems.is_empty() {
        return Err(Failure::new(EXIT_INVARIANT, problems.join("; ")));
    }
    println!("{} bundles verified", audit.checked);
    Ok(())
}
