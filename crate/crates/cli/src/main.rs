use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;


/// Tiled-CSL sparse weights: generate, prune, encode, multiply and model.
#[derive(Debug, Parser)]
#[command(name = "tiledcsl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded random binary16 matrix with an exact zero count.
    Gen(GenArgs),
    /// Zero the smallest-magnitude elements of a binary16 matrix.
    Prune(PruneArgs),
    /// Convert a binary16 matrix to tiled-CSL.
    Encode(EncodeArgs),
    /// Convert tiled-CSL back to a dense binary16 matrix.
    Decode(DecodeArgs),
    /// Multiply a tiled-CSL weight by a dense binary16 activation.
    Spmm(SpmmArgs),
    /// Intensity, roofline and footprint report for one product.
    Analyze(AnalyzeArgs),
    /// Analytical sweep over shapes, batch sizes and sparsities.
    Bench(BenchArgs),
    /// Stage timeline and time estimate for one product.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// Fraction of zero elements in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output FLDM file.
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub sparsity: f64,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Input FLDM file (binary16).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output TCSL file.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Keep entries in row-major order instead of bank-aware order.
    #[arg(long)]
    pub no_reorder: bool,
    #[arg(long, default_value_t = 128)]
    pub tile_m: usize,
    #[arg(long, default_value_t = 64)]
    pub tile_k: usize,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpmmArgs {
    /// Sparse weight (TCSL).
    #[arg(short = 'a', long = "weights")]
    pub a: PathBuf,
    /// Dense activation (FLDM, binary16).
    #[arg(short = 'b', long = "activations")]
    pub b: PathBuf,
    /// Output FLDM file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Compare against the dense reference product.
    #[arg(long)]
    pub check: bool,
    /// Round the output to binary16 instead of writing binary32.
    #[arg(long)]
    pub out_f16: bool,
}

#[derive(Debug, Args)]
pub struct HwArgs {
    /// Hardware overrides: peak=FLOP/s,bw=B/s,smem=B/s (any subset).
    #[arg(long, value_name = "KEY=VALUE,...")]
    pub hw: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Product shape as M,K,N.
    #[arg(long)]
    pub shape: String,
    #[arg(long, default_value_t = 0.0)]
    pub sparsity: f64,
    /// Measure the footprint of this TCSL file instead of estimating it.
    #[arg(short = 'a', long = "weights")]
    pub a: Option<PathBuf>,
    #[command(flatten)]
    pub hw: HwArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Weight shapes as MxK,MxK,... (default: the decoder-layer set).
    #[arg(long)]
    pub shapes: Option<String>,
    /// Batch sizes as N,N,...
    #[arg(long)]
    pub batch: Option<String>,
    /// Sparsities as b,b,...
    #[arg(long)]
    pub sparsities: Option<String>,
    #[command(flatten)]
    pub hw: HwArgs,
    /// Write rows to a CSV file.
    #[arg(long, value_name = "PATH", conflicts_with = "json")]
    pub csv: Option<PathBuf>,
    /// Print rows as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Product shape as M,K,N.
    #[arg(long)]
    pub shape: String,
    #[arg(long, default_value_t = 0.0)]
    pub sparsity: f64,
    #[command(flatten)]
    pub hw: HwArgs,
    #[arg(long)]
    pub json: bool,
}

/// Parse `argv` (including the program name), run, and return the exit code.
fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Prune(a) => commands::prune(&a),
        Command::Encode(a) => commands::encode(&a),
        Command::Decode(a) => commands::decode(&a),
        Command::Spmm(a) => commands::spmm(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Pipeline(a) => commands::pipeline(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tiledcsl: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()) as u8)
}
