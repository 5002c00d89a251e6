use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use paillier_accel::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "paillier-accel", version, about = "Paillier encryption, Montgomery benchmarks and pipeline model reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice the command makes.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print a JSON document instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a key pair and write PATH.pub.json and PATH.priv.json.
    Keygen {
        #[arg(long, default_value_t = 1024)]
        bits: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Encrypt a file under the public key at KEY.pub.json.
    Encrypt {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Decrypt a file produced by `encrypt` with KEY.pub.json and KEY.priv.json.
    Decrypt {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Time Montgomery multiplication and compare with the cycle model.
    BenchModmult {
        #[arg(long, default_value_t = 1024)]
        bits: u64,
        #[arg(long, default_value_t = 32)]
        word_size: u64,
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Time batched encryption and decryption on the worker pool.
    BenchPaillier {
        #[arg(long, default_value_t = 1024)]
        bits: u64,
        #[arg(long, default_value_t = 256)]
        ops: usize,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Cycle, resource and throughput report of the modeled core.
    ModelReport {
        /// JSON model configuration; defaults apply to omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a vertically partitioned model on encrypted residuals.
    TrainDemo {
        #[arg(long, default_value = "linear")]
        model: ModelKind,
        /// CSV file (header row, label last) or `synthetic`.
        #[arg(long, default_value = "synthetic")]
        dataset: String,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 2)]
        parties: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        features: usize,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 512)]
        key_bits: u64,
        /// Rescale CSV feature columns to zero mean and unit variance.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the JSON-lines trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}
