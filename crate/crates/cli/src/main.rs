use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod common;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lgm_core::Error),

    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Dataset distillation by linear gradient matching.
///
/// Every key of the run configuration can come from `--config`, from `LGM_<KEY>`
/// environment variables, or from `--set key=value`, in increasing precedence.
#[derive(Parser)]
#[command(name = "lgm", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Flat key=value run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Config override, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ToyKind {
    /// 5-class Gaussian mixture in 16 dimensions
    Gaussian,
    /// Colored disks, squares and crosses
    Shapes,
}

#[derive(Subcommand)]
enum Command {
    /// Write a toy train/test dataset pair
    GenToy {
        #[arg(value_enum)]
        kind: ToyKind,
        /// Training samples per class [default: 100 gaussian, 300 shapes]
        #[arg(long)]
        per_class: Option<usize>,
        /// Test samples per class
        #[arg(long, default_value_t = 100)]
        test_per_class: usize,
        /// Image side for `shapes`
        #[arg(long, default_value_t = 32)]
        size: usize,
    },
    /// Distill one synthetic sample per class from the training set
    Distill {
        /// Training dataset; defaults to `train` from the config
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Embed a dataset with the configured built-in encoder
    Embed {
        /// Dataset directory (image folder or vector table)
        #[arg(long)]
        data: PathBuf,
    },
    /// Select Random, Centroids and (with --distilled) Neighbors index sets
    Baselines {
        #[arg(long)]
        train: Option<PathBuf>,
        /// Distillation output (run directory or its `final/`)
        #[arg(long)]
        distilled: Option<PathBuf>,
    },
    /// Train linear probes on distilled data, baselines and the full set
    EvalProbe {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        distilled: Option<PathBuf>,
        /// Comma-separated subset of distilled,random,centroids,neighbors,full
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Mutual k-nearest-neighbor alignment of two embedding tables
    Align {
        a: PathBuf,
        b: PathBuf,
        /// Overrides `align_k`
        #[arg(long)]
        k: Option<usize>,
    },
    /// Project an embedding table onto its first two principal components
    Pca { table: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match cli.command {
        Command::GenToy {
            kind,
            per_class,
            test_per_class,
            size,
        } => commands::gen_toy(c, kind, per_class, test_per_class, size),
        Command::Distill { train } => commands::distill(c, train),
        Command::Embed { data } => commands::embed(c, &data),
        Command::Baselines { train, distilled } => commands::baselines(c, train, distilled),
        Command::EvalProbe {
            train,
            test,
            distilled,
            methods,
        } => commands::eval_probe(c, train, test, distilled, methods),
        Command::Align { a, b, k } => commands::align(c, &a, &b, k),
        Command::Pca { table } => commands::pca(c, &table),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Core(_) => ExitCode::FAILURE,
            }
        }
    }
}
