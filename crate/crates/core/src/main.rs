use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mna_core::models::{Hyper, ModelKind};
use mna_core::pipeline::{run_all, ExtractionMode, PipelineConfig, Stage};
use mna_core::roi::ChannelMode;
use mna_core::Error;

#[derive(Parser)]
#[command(name = "mna", version, about = "CT radiomics pipeline for binary tumor genotype prediction")]
struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the work directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort and its manifest.
    Phantom,
    /// Resample, window and crop every manifest volume.
    Preprocess,
    /// Write the feature table.
    Extract {
        #[arg(long, value_parser = parse_mode)]
        mode: Option<ExtractionMode>,
    },
    /// LASSO selection per outer fold.
    Select,
    /// Cross-validate every configured model.
    TrainEval {
        /// Comma-separated subset, e.g. `svm,logistic`.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Write gray, replicated or adjacent-slice channel tensors.
    ExportChannels {
        #[arg(long)]
        mode: Option<ChannelMode>,
    },
    /// Render the accuracy and feature-selection tables.
    Report,
    /// Run phantom through report in order.
    Run,
    /// Print the default configuration.
    DefaultConfig,
}

fn parse_mode(s: &str) -> Result<ExtractionMode, String> {
    match s {
        "per-slice" | "per_slice" => Ok(ExtractionMode::PerSlice),
        "per-stack" | "per_stack" => Ok(ExtractionMode::PerStack),
        _ => Err(format!("expected per-slice or per-stack, got `{s}`")),
    }
}

fn config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.paths.work_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = config(&cli)?;
    let stages: Vec<Stage> = match &cli.command {
        Command::DefaultConfig => {
            print!("{}", PipelineConfig::default().to_toml()?);
            return Ok(());
        }
        Command::Phantom => vec![Stage::Phantom],
        Command::Preprocess => vec![Stage::Preprocess],
        Command::Extract { mode } => {
            if let Some(m) = mode {
                cfg.extraction.mode = *m;
            }
            vec![Stage::Extract]
        }
        Command::Select => vec![Stage::Select],
        Command::TrainEval { models, k } => {
            if let Some(ms) = models {
                cfg.models = ms.iter().map(|&m| Hyper::default_for(m)).collect();
            }
            if let Some(k) = k {
                cfg.k = *k;
            }
            vec![Stage::TrainEval]
        }
        Command::ExportChannels { mode } => {
            if let Some(m) = mode {
                cfg.channel_mode = *m;
            }
            vec![Stage::ExportChannels]
        }
        Command::Report => vec![Stage::Report],
        Command::Run => Stage::ALL.to_vec(),
    };
    for log in run_all(&cfg, &stages)? {
        eprintln!(
            "{}: seed {} -> {} ({} files)",
            log.stage.as_str(),
            log.stage_seed,
            cfg.stage_dir(log.stage).display(),
            log.artifacts.len()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
