mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "oscar-kit", version, about = "Per-sequence Markov boundary discovery for labeled event sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Sample train and test sequences plus ground truth from the model
    Generate,
    /// Fit the n-gram estimator on the training corpus
    Fit,
    /// Discover Markov boundaries for every dataset sequence
    Discover,
    /// Score discovered boundaries against ground truth
    Evaluate,
    /// Time discovery against particle count and batch size
    Bench,
    /// Write Graphviz files for selected sequences
    ExportDot {
        /// Dataset index; repeatable. Defaults to every sequence.
        #[arg(long = "sequence")]
        sequences: Vec<usize>,
    },
}

#[derive(Debug)]
pub enum Failure {
    Config(Vec<String>),
    Runtime(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(vec![msg.into()])
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Config(v) => json!({ "error": "config", "violations": v }),
            Failure::Runtime(m) => json!({ "error": "runtime", "message": m }),
        }
    }
}

impl From<oscar_core::Error> for Failure {
    fn from(e: oscar_core::Error) -> Self {
        match e {
            oscar_core::Error::InvalidConfig(m) => Failure::Config(vec![m]),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::load(&cli.overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Generate => commands::generate(&cfg),
        Command::Fit => commands::fit(&cfg),
        Command::Discover => commands::discover(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Bench => commands::bench(&cfg),
        Command::ExportDot { sequences } => commands::export_dot(&cfg, &sequences),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OSCAR_KIT_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::config(e.to_string().trim_end().to_string());
            eprintln!("{}", f.to_json());
            return ExitCode::from(f.code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code())
        }
    }
}
