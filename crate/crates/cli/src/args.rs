use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ealgebra::ringbuffer::RingMachine;

#[derive(Debug, Parser)]
#[command(name = "ea", version, about = "Run, explore and compare distributed evolving algebras")]
pub struct Cli {
    /// Print line-delimited JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads for exploration (default: one per core).
    #[arg(long, global = true, value_name = "K")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a program, or a state against a program, and print it canonically.
    Parse(ParseArgs),
    /// Execute one sequential run with random tie-breaking.
    Run(RunArgs),
    /// Explore the configuration graph up to a quotient.
    Explore(ExploreArgs),
    /// Check the lemmas of one of the ring buffers.
    CheckInvariants(InvariantArgs),
    /// Check that the row and column ring buffers are lock-step equivalent.
    CheckEquiv(EquivArgs),
    /// Tables and measurements from the ring-buffer case study.
    Casestudy {
        #[command(subcommand)]
        which: Casestudy,
    },
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub file: PathBuf,
    /// Treat FILE as a state description of this program.
    #[arg(long, value_name = "PROGRAM")]
    pub program: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub file: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub state: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// One of `none`, `free`, `unconstrained` or `script FILE`.
    #[arg(long, num_args = 1..=2, value_names = ["MODE", "FILE"], default_values_t = ["free".to_string()])]
    pub env: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExploreArgs {
    pub file: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub state: PathBuf,
    /// `identity` or `ring-R:N`.
    #[arg(long, default_value = "identity")]
    pub congruence: String,
    #[arg(long, default_value_t = 100_000)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 64)]
    pub max_depth: usize,
    #[arg(long, num_args = 1..=2, value_names = ["MODE", "FILE"], default_values_t = ["free".to_string()])]
    pub env: Vec<String>,
    /// Write the graph as line-delimited JSON to this file.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MachineArg {
    R1,
    R2,
    Rea,
    Cea,
}

impl From<MachineArg> for RingMachine {
    fn from(m: MachineArg) -> Self {
        match m {
            MachineArg::R1 => RingMachine::R1,
            MachineArg::R2 => RingMachine::R2,
            MachineArg::Rea => RingMachine::Rea,
            MachineArg::Cea => RingMachine::Cea,
        }
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Size {
    /// Buffer size.
    #[arg(long = "N", value_name = "N", default_value_t = 2, value_parser = clap::value_parser!(u16).range(1..))]
    pub n: u16,
    /// Number of data values.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u16).range(1..))]
    pub data_size: u16,
}

#[derive(Debug, Args)]
pub struct InvariantArgs {
    pub machine: MachineArg,
    #[command(flatten)]
    pub size: Size,
    /// Length of the runs whose move ordering is checked.
    #[arg(long, default_value_t = 4)]
    pub run_depth: usize,
    /// Length of the runs searched for FIFO violations.
    #[arg(long, default_value_t = 8)]
    pub fifo_depth: usize,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[command(flatten)]
    pub size: Size,
    /// Use equality as both congruences.
    #[arg(long)]
    pub strict: bool,
    /// The two depth bounds at which the column machine is counted.
    #[arg(long, num_args = 2, value_names = ["D1", "D2"], default_values_t = [16, 32])]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_nodes: usize,
}

#[derive(Debug, Subcommand)]
pub enum Casestudy {
    /// The correspondence between p and the bits pp(0..N).
    PpTable {
        #[arg(long = "N", value_name = "N", default_value_t = 4, value_parser = clap::value_parser!(u16).range(1..))]
        n: u16,
        #[arg(long, default_value_t = 7)]
        rows: usize,
    },
    /// Shared locations and counter growth of the row and column machines.
    Metrics {
        #[command(flatten)]
        size: Size,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
}
