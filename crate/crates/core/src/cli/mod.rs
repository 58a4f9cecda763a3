//! The `sresnet` command line: argument parsing, config resolution and the
//! exit-code contract (0 ok, 2 configuration, 3 data, 4 divergence).

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde_json::{Map, Value};

pub use config::{parse_synth, resolve, Resolved, RunConfig};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
const EXIT_INTERNAL: i32 = 1;

/// Exit code for an error class.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Dimension(_)
        | Error::Dataset(_)
        | Error::UnknownClass { .. }
        | Error::UndefinedSimilarity(_)
        | Error::Export(_)
        | Error::Format(_)
        | Error::Version { .. }
        | Error::ShapeMismatch(_)
        | Error::Truncated(_)
        | Error::Io { .. }
        | Error::Json(_)
        | Error::Csv(_)
        | Error::Contract(_)
        | Error::DegenerateBatch(_) => EXIT_DATA,
        Error::ConsumedTape => EXIT_INTERNAL,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sresnet",
    version,
    about = "Train and compare SE-augmented ResNet-18 pattern classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, standardize, (optionally) augment and train one model.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Accuracy of a checkpoint on a dataset split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ckpt: CheckpointArgs,
    },
    /// Train one model per SE placement and write the precision table.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated SE schemes, e.g. `s1,s2,s3,s4`.
        #[arg(long)]
        schemes: Option<String>,
    },
    /// Penultimate feature vectors and class prototypes.
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ckpt: CheckpointArgs,
    },
    /// Prototype distances to a reference class, as CSV and optional SVG maps.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        ckpt: CheckpointArgs,
        #[command(flatten)]
        compare: CompareArgs,
    },
    /// Write the synthetic pattern corpus as PPM files.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Render choropleth SVGs from a report CSV and a region map.
    Render {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        render: RenderArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Seed for corpus generation, splitting, initialization and shuffling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Flat JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Threads for data augmentation.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset root with one subdirectory of PPM images per class.
    #[arg(long)]
    pub data: Option<String>,
    /// Synthetic corpus instead of --data, e.g. `classes=4 per-class=50 size=32`.
    #[arg(long, num_args = 1.., value_name = "KEY=VALUE")]
    pub synth: Option<Vec<String>>,
    /// Share of each class used for training (default 0.7).
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Square input size; folder images are resized to it.
    #[arg(long)]
    pub image_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model scale: full or tiny.
    #[arg(long)]
    pub model: Option<String>,
    /// SE placement: none, s1, s2, s3, s4.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Channel reduction ratio of the excitation MLP.
    #[arg(long)]
    pub se_reduction: Option<usize>,
    /// Drop the biases of the excitation layers.
    #[arg(long)]
    pub no_se_bias: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training epochs (default 50).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size (default 64).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate (default 0.001).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Keep training items in dataset order every epoch.
    #[arg(long)]
    pub no_shuffle: bool,
    /// Random rotate / zoom / translate / flip per item and epoch.
    #[arg(long)]
    pub augment: bool,
}

#[derive(Debug, Args)]
pub struct CheckpointArgs {
    /// Checkpoint written by `train` or `ablate`.
    #[arg(long)]
    pub checkpoint: Option<String>,
    /// Dataset split to use: train, test or all.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Class whose prototype is the reference vector.
    #[arg(long)]
    pub reference: Option<String>,
    /// Region map JSON; emits one SVG per metric.
    #[arg(long)]
    pub map: Option<String>,
    /// L2-normalize prototypes before measuring.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Report CSV (`class,euclidean,manhattan,cosine`).
    #[arg(long)]
    pub report: Option<String>,
    /// Region map JSON.
    #[arg(long)]
    pub map: Option<String>,
    /// Comma-separated metrics; all three by default.
    #[arg(long)]
    pub metric: Option<String>,
    /// Colour domain as `MIN,MAX`.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Low-end colour, `#rrggbb`.
    #[arg(long)]
    pub low: Option<String>,
    /// High-end colour, `#rrggbb`.
    #[arg(long)]
    pub high: Option<String>,
}

#[derive(Default)]
struct Flags(Map<String, Value>);

impl Flags {
    fn set<T: Into<Value>>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.0.insert(key.to_string(), v.into());
        }
    }

    fn switch(&mut self, key: &str, on: bool, value: bool) {
        if on {
            self.0.insert(key.to_string(), Value::Bool(value));
        }
    }

    fn common(&mut self, a: &CommonArgs) {
        self.set("seed", a.seed);
        self.set("out", a.out.clone());
        self.set("workers", a.workers);
    }

    fn data(&mut self, a: &DataArgs) {
        self.set("data", a.data.clone());
        self.set("synth", a.synth.as_ref().map(|v| v.join(" ")));
        self.set("train_fraction", a.train_fraction);
        self.set("image_size", a.image_size);
    }

    fn model(&mut self, a: &ModelArgs) {
        self.set("model", a.model.clone());
        self.set("scheme", a.scheme.clone());
        self.set("se_reduction", a.se_reduction);
        self.switch("se_bias", a.no_se_bias, false);
    }

    fn train(&mut self, a: &TrainArgs) {
        self.set("epochs", a.epochs);
        self.set("batch_size", a.batch_size);
        self.set("lr", a.lr);
        self.switch("shuffle", a.no_shuffle, false);
        self.switch("augment", a.augment, true);
    }

    fn ckpt(&mut self, a: &CheckpointArgs) {
        self.set("checkpoint", a.checkpoint.clone());
        self.set("split", a.split.clone());
    }
}

/// Normalizes enum-valued flags so that the config layer sees canonical
/// spellings and reports invalid ones as configuration errors.
fn canonical(flags: &mut Map<String, Value>) -> Result<(), Error> {
    if let Some(Value::String(s)) = flags.get("scheme") {
        let scheme: crate::model::SeScheme = s.parse()?;
        flags.insert("scheme".into(), scheme.as_str().into());
    }
    if let Some(Value::String(s)) = flags.get("model") {
        let scale: crate::model::Scale = s.parse()?;
        flags.insert("model".into(), scale.to_string().into());
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code; never calls `exit`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_CONFIG,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    let mut flags = Flags::default();
    let (name, config_file) = match &command {
        Command::Train {
            common,
            data,
            model,
            train,
        } => {
            flags.common(common);
            flags.data(data);
            flags.model(model);
            flags.train(train);
            ("train", &common.config)
        }
        Command::Eval {
            common,
            data,
            model,
            ckpt,
        } => {
            flags.common(common);
            flags.data(data);
            flags.model(model);
            flags.ckpt(ckpt);
            ("eval", &common.config)
        }
        Command::Ablate {
            common,
            data,
            model,
            train,
            schemes,
        } => {
            flags.common(common);
            flags.data(data);
            flags.model(model);
            flags.train(train);
            flags.set("schemes", schemes.clone());
            ("ablate", &common.config)
        }
        Command::Extract {
            common,
            data,
            model,
            ckpt,
        } => {
            flags.common(common);
            flags.data(data);
            flags.model(model);
            flags.ckpt(ckpt);
            ("extract", &common.config)
        }
        Command::Compare {
            common,
            data,
            model,
            ckpt,
            compare,
        } => {
            flags.common(common);
            flags.data(data);
            flags.model(model);
            flags.ckpt(ckpt);
            flags.set("reference", compare.reference.clone());
            flags.set("map", compare.map.clone());
            flags.switch("normalize", compare.normalize, true);
            ("compare", &common.config)
        }
        Command::Synth { common, data } => {
            flags.common(common);
            flags.data(data);
            ("synth", &common.config)
        }
        Command::Render { common, render } => {
            flags.common(common);
            flags.set("report", render.report.clone());
            flags.set("map", render.map.clone());
            flags.set("metric", render.metric.clone());
            flags.set("domain", render.domain.clone());
            flags.set("low", render.low.clone());
            flags.set("high", render.high.clone());
            ("render", &common.config)
        }
    };
    canonical(&mut flags.0)?;
    let resolved = resolve(config_file.as_deref(), flags.0)?;
    let usage = || {
        let mut cmd = Cli::command();
        cmd.build();
        cmd.find_subcommand_mut(name)
            .map(|c| c.render_usage().to_string())
            .unwrap_or_default()
    };
    commands::dispatch(name, &resolved, &usage)
}
