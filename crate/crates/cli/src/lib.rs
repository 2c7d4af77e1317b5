//! `zids`: prepare KDD99 data, train the four model variants, evaluate them
//! and explain them with KernelSHAP.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ids_core::metrics::ReportFormat;

use config::{ExperimentConfig, OptimizerKind, Variant};
use error::Result;

#[derive(Debug, Parser)]
#[command(name = "zids", version, about = "KDD99 intrusion-detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat JSON config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every seed left unset by the config and flags.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, encode and split a KDD99 file into train/test containers.
    Prepare {
        /// KDD99 file, plain or gzip-compressed.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        split_seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Train one model variant on a prepared directory.
    Train {
        /// Directory written by `prepare`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        variant: Option<Variant>,
        /// Hidden-layer widths, comma separated.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long, value_enum)]
        optimizer: Option<OptimizerKind>,
        #[arg(long)]
        train_seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Classification report and confusion matrix on a container.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Container to score, usually `test.zids`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        zero_division: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// KernelSHAP attributions for sampled rows of a container.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Feature names; defaults to `schema.json` beside the container.
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long)]
        background_n: Option<usize>,
        #[arg(long)]
        explain_n: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        shap_seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Print an existing report.json.
    Report {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn base_config(common: &Common) -> Result<ExperimentConfig> {
    ExperimentConfig::load_or_default(common.config.as_ref())
}

fn finish(mut cfg: ExperimentConfig, common: &Common) -> Result<ExperimentConfig> {
    cfg.fill_seeds(common.seed);
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare { data, out, test_fraction, split_seed, common } => {
            let mut cfg = base_config(&common)?;
            set(&mut cfg.test_fraction, test_fraction);
            if split_seed.is_some() {
                cfg.split_seed = split_seed;
            }
            commands::prepare(&data, &out, &finish(cfg, &common)?)
        }
        Command::Train {
            data,
            out,
            variant,
            hidden,
            epochs,
            batch_size,
            learning_rate,
            optimizer,
            train_seed,
            common,
        } => {
            let mut cfg = base_config(&common)?;
            set(&mut cfg.variant, variant);
            if hidden.is_some() {
                cfg.hidden = hidden;
            }
            set(&mut cfg.epochs, epochs);
            set(&mut cfg.batch_size, batch_size);
            set(&mut cfg.learning_rate, learning_rate);
            set(&mut cfg.optimizer, optimizer);
            if train_seed.is_some() {
                cfg.train_seed = train_seed;
            }
            commands::train(&data, &out, &finish(cfg, &common)?)
        }
        Command::Evaluate { model, data, out, zero_division, common } => {
            let mut cfg = base_config(&common)?;
            set(&mut cfg.zero_division, zero_division);
            commands::evaluate(&model, &data, &out, &finish(cfg, &common)?)
        }
        Command::Explain {
            model,
            data,
            out,
            schema,
            background_n,
            explain_n,
            budget,
            top_k,
            shap_seed,
            common,
        } => {
            let mut cfg = base_config(&common)?;
            set(&mut cfg.background_n, background_n);
            set(&mut cfg.explain_n, explain_n);
            if budget.is_some() {
                cfg.shap_budget = budget;
            }
            set(&mut cfg.top_k, top_k);
            if shap_seed.is_some() {
                cfg.shap_seed = shap_seed;
            }
            commands::explain(&model, &data, schema.as_deref(), &out, &finish(cfg, &common)?)
        }
        Command::Report { path, format } => {
            print!("{}", commands::report(&path, format.into())?);
            Ok(())
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
