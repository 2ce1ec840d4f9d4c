//! `utxo-lab`: generate, validate and analyse ledger traces.
//!
//! Exit codes: 0 when every check is clean, 1 on a property violation, 2 on a usage
//! or parse error, 3 on an internal invariant breach.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use utxo_lab::Exec;

use crate::report::Report;

#[derive(Parser)]
#[command(name = "utxo-lab", version, about = "UTxO ledger trace laboratory")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Run independent checks on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, validate and compare traces.
    #[command(subcommand)]
    Trace(TraceCmd),
    /// Ledger property checks on a run.
    #[command(subcommand)]
    Props(PropsCmd),
    /// Structured contracts.
    #[command(subcommand)]
    Contract(ContractCmd),
    /// Explicit state graphs.
    #[command(subcommand)]
    Graph(GraphCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// Core ledger rules only.
    None,
    /// Core rules plus the unique-token minting policy.
    Nft,
}

#[derive(Subcommand)]
enum TraceCmd {
    /// Write `count` valid traces and a manifest.
    Gen(GenArgs),
    /// Check trace files against the ledger rules.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Policy::None)]
        policy: Policy,
    },
    /// Distance between two traces.
    Dist { a: PathBuf, b: PathBuf },
    /// Run a safety monitor over trace files.
    Monitor {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_enum)]
        monitor: MonitorKind,
    },
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of states per trace.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Number of genesis outputs.
    #[arg(long, default_value_t = 6)]
    pub universe: usize,
    /// First slot of the initial range.
    #[arg(long, default_value_t = 0)]
    pub slot_start: u64,
    /// End (exclusive) of the initial range.
    #[arg(long, default_value_t = 4)]
    pub slot_end: u64,
    #[arg(long, env = "UTXO_LAB_OUT", default_value = "utxo-lab-out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MonitorKind {
    Replay,
    TrivialUpdate,
    EmptyUtxo,
}

#[derive(Subcommand)]
enum PropsCmd {
    /// Validity, replay and trivial-update protection, and disjointness.
    Check {
        #[arg(long)]
        run: PathBuf,
        /// Also report the dependency poset and canonical presentation.
        #[arg(long)]
        canon: bool,
        #[arg(long, value_enum, default_value_t = Policy::None)]
        policy: Policy,
    },
    /// Dependency poset, levels and canonical presentation.
    Canon {
        #[arg(long)]
        run: PathBuf,
        /// Enumerate orders reachable by swapping independent neighbours.
        #[arg(long)]
        enumerate: bool,
        #[arg(long, default_value_t = 1000)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = Policy::None)]
        policy: Policy,
    },
}

#[derive(Subcommand)]
enum ContractCmd {
    /// Registered contract names.
    List,
    /// Step correctness of a contract on trace files.
    Check(ContractArgs),
}

#[derive(Args)]
pub struct ContractArgs {
    #[arg(long)]
    pub name: String,
    #[arg(long, num_args = 1.., required = true)]
    pub traces: Vec<PathBuf>,
    /// Write induced contract traces into this directory.
    #[arg(long)]
    pub induce: Option<PathBuf>,
    /// Sample this many trace pairs and check the induced map is non-expanding.
    #[arg(long)]
    pub nonexpanding: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Ledger graph spanned by a trace's transactions and slots.
    Dump {
        #[arg(long)]
        trace: PathBuf,
        /// Dump the graph of UTxO states instead.
        #[arg(long)]
        projected: bool,
        #[arg(long, value_enum, default_value_t = Policy::None)]
        policy: Policy,
        /// Write the graph here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub enum Output {
    Report(Report),
    /// Raw document written to stdout as is.
    Raw(String, Report),
}

fn dispatch(cli: Cli) -> Result<Output, CliError> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    use commands::*;
    match cli.command {
        Command::Trace(TraceCmd::Gen(a)) => trace_gen(&a, exec).map(Output::Report),
        Command::Trace(TraceCmd::Validate { files, policy }) => {
            trace_validate(&files, policy, exec).map(Output::Report)
        }
        Command::Trace(TraceCmd::Dist { a, b }) => trace_dist(&a, &b).map(Output::Report),
        Command::Trace(TraceCmd::Monitor { files, monitor }) => {
            trace_monitor(&files, monitor).map(Output::Report)
        }
        Command::Props(PropsCmd::Check { run, canon, policy }) => {
            props_check(&run, canon, policy).map(Output::Report)
        }
        Command::Props(PropsCmd::Canon {
            run,
            enumerate,
            cap,
            policy,
        }) => props_canon(&run, enumerate.then_some(cap), policy, exec).map(Output::Report),
        Command::Contract(ContractCmd::List) => Ok(Output::Report(contract_list())),
        Command::Contract(ContractCmd::Check(a)) => contract_check(&a, exec).map(Output::Report),
        Command::Graph(GraphCmd::Dump {
            trace,
            projected,
            policy,
            out,
        }) => graph_dump(&trace, projected, policy, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match dispatch(cli) {
        Ok(out) => {
            let report = match out {
                Output::Report(r) => {
                    match format {
                        Format::Text => print!("{}", r.render_text()),
                        Format::Json => print!("{}", r.render_json()),
                    }
                    r
                }
                Output::Raw(doc, r) => {
                    print!("{doc}");
                    r
                }
            };
            if report.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("utxo-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
