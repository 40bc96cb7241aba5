//! `sidkit`: corpus preparation, silver annotation, training, prediction
//! and scoring from the command line.
//!
//! Exit status: 0 on success, 1 for unreadable or malformed input, 2 for
//! configuration errors and contract violations. No output file is written
//! unless every input has been validated.

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AnnotateMode, ScoreTask, TrainTask};
use config::RunConfig;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn contract(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Parser)]
#[command(name = "sidkit", version, about = "Slot/intent and dialect corpus tooling")]
struct Cli {
    /// `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Drop instances whose text already occurred.
    Dedup {
        #[arg(long = "in")]
        input: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Split by origin key into PREFIX.train.sid, PREFIX.dev.sid, PREFIX.test.sid.
    Split {
        #[arg(long = "in")]
        input: Option<String>,
        /// Train, dev and test fractions, e.g. 0.7,0.15,0.15.
        #[arg(long)]
        ratios: Option<String>,
        #[arg(long)]
        out_prefix: Option<String>,
    },
    /// Bokmål corpus to a four-way silver dialect corpus.
    Augment {
        #[arg(long = "in")]
        input: Option<String>,
        /// Lexicon TSV; the starter lexicon if omitted.
        #[arg(long)]
        lexicon: Option<String>,
        /// first|random
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Clean, filter, label and downsample transcriptions or tweets.
    Annotate {
        #[arg(value_enum)]
        mode: AnnotateMode,
        #[arg(long = "in")]
        input: Option<String>,
        #[arg(long)]
        min_tokens: Option<String>,
        /// City → dialect TSV (semi); the starter table if omitted.
        #[arg(long)]
        geo: Option<String>,
        /// instance_id → city TSV (semi).
        #[arg(long)]
        cities: Option<String>,
        /// instance_id, dialect and NorDial predictions TSV (auto).
        #[arg(long)]
        preds: Option<String>,
        /// Target distribution such as V:0.4545,T:0.2727,N:0.1818,B:0.0909, or `none`.
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Train a model and write it to --model.
    Train {
        #[arg(value_enum)]
        task: TrainTask,
        #[arg(long = "in")]
        input: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        learning_rate: Option<String>,
        #[arg(long)]
        epochs: Option<String>,
        #[arg(long)]
        batch_size: Option<String>,
        #[arg(long)]
        weight_decay: Option<String>,
        #[arg(long)]
        dimension: Option<String>,
        #[arg(long)]
        char_ngram_min: Option<String>,
        #[arg(long)]
        char_ngram_max: Option<String>,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        svm_regularization: Option<String>,
        #[arg(long)]
        svm_epochs: Option<String>,
        #[arg(long)]
        svm_dimension: Option<String>,
    },
    /// Predict with a saved model.
    Predict {
        #[arg(long)]
        model: Option<String>,
        #[arg(long = "in")]
        input: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Score predictions against gold; prints a summary, --out gets the full report.
    Score {
        #[arg(value_enum)]
        task: ScoreTask,
        #[arg(long)]
        gold: Option<String>,
        #[arg(long)]
        preds: Option<String>,
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
}

type Flags = Vec<(&'static str, Option<String>)>;

fn flags(command: &Command) -> Flags {
    let c = |v: &Option<String>| v.clone();
    match command {
        Command::Dedup { input, out } => vec![("in", c(input)), ("out", c(out))],
        Command::Split { input, ratios, out_prefix } => {
            vec![("in", c(input)), ("ratios", c(ratios)), ("out_prefix", c(out_prefix))]
        }
        Command::Augment { input, lexicon, policy, out } => vec![
            ("in", c(input)),
            ("lexicon", c(lexicon)),
            ("policy", c(policy)),
            ("out", c(out)),
        ],
        Command::Annotate { input, min_tokens, geo, cities, preds, dist, out, .. } => vec![
            ("in", c(input)),
            ("min_tokens", c(min_tokens)),
            ("geo", c(geo)),
            ("cities", c(cities)),
            ("preds", c(preds)),
            ("dist", c(dist)),
            ("out", c(out)),
        ],
        Command::Train {
            input,
            model,
            lambda,
            learning_rate,
            epochs,
            batch_size,
            weight_decay,
            dimension,
            char_ngram_min,
            char_ngram_max,
            window,
            svm_regularization,
            svm_epochs,
            svm_dimension,
            ..
        } => vec![
            ("in", c(input)),
            ("model", c(model)),
            ("lambda", c(lambda)),
            ("learning_rate", c(learning_rate)),
            ("epochs", c(epochs)),
            ("batch_size", c(batch_size)),
            ("weight_decay", c(weight_decay)),
            ("dimension", c(dimension)),
            ("char_ngram_min", c(char_ngram_min)),
            ("char_ngram_max", c(char_ngram_max)),
            ("window", c(window)),
            ("svm_regularization", c(svm_regularization)),
            ("svm_epochs", c(svm_epochs)),
            ("svm_dimension", c(svm_dimension)),
        ],
        Command::Predict { model, input, out } => {
            vec![("model", c(model)), ("in", c(input)), ("out", c(out))]
        }
        Command::Score { gold, preds, lambda, out, .. } => vec![
            ("gold", c(gold)),
            ("preds", c(preds)),
            ("lambda", c(lambda)),
            ("out", c(out)),
        ],
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::defaults();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {path}: {e}")))?;
        cfg.apply_file(&text)?;
    }
    let mut overrides = flags(&cli.command);
    overrides.push(("seed", cli.seed.clone()));
    cfg.apply_flags(overrides);
    eprint!("resolved config:\n{}", cfg.render());

    let outputs = match cli.command {
        Command::Dedup { .. } => commands::dedup(&cfg)?,
        Command::Split { .. } => commands::split(&cfg)?,
        Command::Augment { .. } => commands::augment(&cfg)?,
        Command::Annotate { mode, .. } => commands::annotate(&cfg, mode)?,
        Command::Train { task, .. } => commands::train(&cfg, task)?,
        Command::Predict { .. } => commands::predict(&cfg)?,
        Command::Score { task, .. } => {
            let (outputs, summary) = commands::score(&cfg, task)?;
            outputs.write()?;
            print!("{summary}");
            return Ok(());
        }
    };
    outputs.write()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
