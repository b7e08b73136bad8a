//! `accesslens`: dataset bookkeeping, evaluation, catalog queries,
//! annotation QA, and the scan service, sharing one config file.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use accesslens::detector::DetectorMode;
use accesslens_server::ServiceConfig;
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "accesslens", version, about = "Inaccessibility detection toolkit")]
struct Cli {
    /// TOML config shared by every subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Port for `serve`; overrides the config file and environment.
    #[arg(long, global = true)]
    port: Option<u16>,
    /// Detector used by `serve`.
    #[arg(long, global = true, value_name = "MODE")]
    detector_mode: Option<DetectorMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-class object counts of an annotation file.
    Stats {
        annotations: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check an annotation file and list every problem found.
    Validate {
        annotations: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Shuffle images into train and validation files plus a manifest.
    Split(SplitArgs),
    /// COCO-style AP of detections against ground truth.
    Eval(EvalArgs),
    /// Keyword-classify a design into AccessMeta labels.
    Classify(ClassifyArgs),
    /// Augmentation suggestions for an inaccessibility class.
    Recommend {
        /// Class name or id.
        #[arg(long = "class", value_name = "CLASS")]
        class: String,
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Validate crowd submissions and score their accuracy.
    Qa(QaArgs),
    /// Run the HTTP service.
    Serve,
    /// Print the class table as JSON.
    Taxonomy,
    /// Dictionary maintenance.
    Dict {
        #[command(subcommand)]
        command: DictCommand,
    },
}

#[derive(Debug, Subcommand)]
enum DictCommand {
    /// Load a dictionary file and report its structure.
    Validate {
        /// Defaults to the configured, then the bundled, dictionary.
        path: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct SplitArgs {
    annotations: PathBuf,
    #[arg(long, default_value_t = 0.85)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    ground_truth: PathBuf,
    detections: PathBuf,
    /// Column heading for this run.
    #[arg(long, default_value = "AP")]
    label: String,
    /// Extra runs as side-by-side columns.
    #[arg(long, num_args = 3, value_names = ["LABEL", "GT", "DETECTIONS"], action = clap::ArgAction::Append)]
    compare: Vec<String>,
    /// Keep at most this many detections per image and class.
    #[arg(long)]
    max_detections: Option<usize>,
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Design title. Omit with --dictionary to classify every design.
    title: Option<String>,
    #[arg(long, default_value = "")]
    description: String,
    #[arg(long = "tag")]
    tags: Vec<String>,
    /// Compare against the stored labels of the configured dictionary.
    #[arg(long, conflicts_with = "title")]
    dictionary: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct QaArgs {
    submissions: PathBuf,
    /// JSON object of design id to {labels, title, description}.
    /// Defaults to the configured dictionary.
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
    #[arg(long)]
    fast_seconds: Option<f64>,
    #[arg(long)]
    hit_quota: Option<u32>,
    #[arg(long)]
    json: bool,
}

fn load_config(cli: &Cli) -> anyhow::Result<ServiceConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ServiceConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ServiceConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(port) = cli.port {
        cfg.port = port;
    }
    if let Some(mode) = cli.detector_mode {
        cfg.detector.mode = mode;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|cfg| commands::run(cli.command, &cfg));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
