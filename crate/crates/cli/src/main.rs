use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paramck::check::{replay_witness, run_check, Mode, NetworkSpec, Report};
use paramck::explicit::Verdict;
use paramck::format::{parse_machine, parse_witness, print_witness};
use paramck::{Budget, Machine, Options};

/// Liveness checker for networks of one leader and arbitrarily many
/// contributors sharing a register.
#[derive(Parser)]
#[command(name = "paramck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Inputs {
    /// Leader machine file (fsm or pdm, optionally buchi).
    #[arg(long)]
    leader: PathBuf,
    /// Contributor machine file (fsm or pdm).
    #[arg(long)]
    contributor: PathBuf,
    /// Büchi automaton over the leader's actions (buchi-fsm).
    #[arg(long)]
    property: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether some run satisfies the property.
    Check {
        #[command(flatten)]
        inputs: Inputs,
        /// auto, fsm-fsm, pdm-fsm, pdm-pdm or explicit.
        #[arg(long, default_value = "auto")]
        mode: Mode,
        /// Largest contributor count tried by the explicit mode.
        #[arg(long, default_value_t = 4)]
        contributors: usize,
        /// Stack height cap for the explicit mode (default 6 with PDMs).
        #[arg(long)]
        stack_bound: Option<usize>,
        /// Where to write the witness of a NONEMPTY verdict.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Print a JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Replay a witness against the concrete semantics.
    Replay {
        #[arg(long)]
        witness: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
    },
}

struct InputError(String);

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn machine(path: &Path) -> Result<Machine, InputError> {
    parse_machine(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load(inputs: &Inputs) -> Result<(paramck::Fsm, Machine, Machine), InputError> {
    let property = match machine(&inputs.property)? {
        Machine::Fsm(f) if f.accepting.is_some() => f,
        _ => return Err(InputError(format!("{}: property must be a buchi-fsm", inputs.property.display()))),
    };
    Ok((property, machine(&inputs.leader)?, machine(&inputs.contributor)?))
}

fn options() -> Options {
    Options { budget: Budget::from_env(), ..Options::default() }
}

fn check(spec: NetworkSpec, witness: Option<&Path>, json: bool) -> Result<ExitCode, InputError> {
    let run = run_check(&spec, &options()).map_err(|e| InputError(e.to_string()))?;
    let report = Report::new(&run);
    if let (Some(path), Some(w)) = (witness, run.outcome.verdict.witness()) {
        fs::write(path, print_witness(w)).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        match &run.outcome.verdict {
            Verdict::Budget(b) => println!("BUDGET ({b})"),
            v => println!("{}", v.label()),
        }
        println!("mode: {}", run.mode);
        for (k, v) in &report.statistics {
            println!("{k}: {v}");
        }
        if let (Some(path), Some(_)) = (witness, &report.witness) {
            println!("witness written to {}", path.display());
        }
    }
    Ok(match run.outcome.verdict {
        Verdict::Budget(_) => ExitCode::from(3),
        _ => ExitCode::SUCCESS,
    })
}

fn replay(witness: &Path, inputs: &Inputs) -> Result<ExitCode, InputError> {
    let w = parse_witness(&read(witness)?).map_err(|e| InputError(format!("{}: {e}", witness.display())))?;
    let (property, leader, contributor) = load(inputs)?;
    match replay_witness(&property, &leader, &contributor, &w, &options()) {
        Ok(()) => {
            println!("valid");
            Ok(ExitCode::SUCCESS)
        }
        Err(e) if e.is_invalid_witness() => {
            println!("invalid: {e}");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(InputError(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { inputs, mode, contributors, stack_bound, witness, json } => {
            load(inputs).and_then(|(property, leader, contributor)| {
                let spec = NetworkSpec {
                    mode: *mode,
                    contributors: *contributors,
                    stack_bound: *stack_bound,
                    ..NetworkSpec::new(property, leader, contributor)
                };
                check(spec, witness.as_deref(), *json)
            })
        }
        Command::Replay { witness, inputs } => replay(witness, inputs),
    };
    result.unwrap_or_else(|InputError(msg)| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}
