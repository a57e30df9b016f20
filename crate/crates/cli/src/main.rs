use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use nereval::formats::OutputFormat;
use nereval::methodology::MethodologyId;
use nereval::metrics::OPolicy;
use nereval::tagging::{DecodeMode, FlattenStrategy, Scheme, TokenClasses};
use nereval::vocab::MarkerConvention;

mod commands;
mod input;

use input::UserError;

/// Evaluate named entity recognition output and related corpus statistics.
#[derive(Debug, Parser)]
#[command(name = "nereval", version, about)]
struct Cli {
    /// Stamp reports with the generation time (unix seconds).
    #[arg(long, global = true)]
    timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one prediction file against gold.
    Evaluate(EvaluateArgs),
    /// Score predictions under several methodologies side by side.
    Compare(CompareArgs),
    /// Mean ± sample std of per-run metrics from a runs JSON file.
    Aggregate(AggregateArgs),
    /// Overlap, fertility and segmentation differences of two vocabularies.
    Vocab(VocabArgs),
    /// Training emissions from GPU count, hours and device power.
    Carbon(CarbonArgs),
}

#[derive(Debug, Args)]
struct TaggingArgs {
    /// Tagging scheme of the CoNLL tag column.
    #[arg(long, value_name = "IOB2|IOB1|BILOU")]
    scheme: Option<Scheme>,
    /// How ill-formed tag transitions are decoded.
    #[arg(long, value_name = "strict|repair")]
    decode: Option<DecodeMode>,
    /// Per-token classes for token-with-O: full tags or entity types.
    #[arg(long, value_name = "raw|collapsed")]
    token_classes: Option<TokenClasses>,
    /// Whether the O class takes part in token-with-O averages.
    #[arg(long, value_name = "include|exclude")]
    o_policy: Option<OPolicy>,
    /// Flatten nested BRAT annotations before offset-exact scoring.
    #[arg(long, value_name = "keep-coarsest|concatenate|error")]
    nested: Option<FlattenStrategy>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, short, default_value = "entity-strict")]
    methodology: MethodologyId,
    #[command(flatten)]
    tagging: TaggingArgs,
    #[arg(long, short, default_value = "markdown")]
    format: OutputFormat,
    /// Gold CoNLL file, or a directory of .ann files for offset-exact.
    gold: PathBuf,
    /// Predicted CoNLL file, or a directory of .ann files for offset-exact.
    pred: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated methodologies, one table row each.
    #[arg(long, short, value_delimiter = ',', default_value = "entity-strict,token-with-O,entity-without-O")]
    methodologies: Vec<MethodologyId>,
    /// Model name shown in the table.
    #[arg(long, default_value = "model")]
    model: String,
    #[command(flatten)]
    tagging: TaggingArgs,
    /// Gold .ann directory, needed for offset-exact.
    #[arg(long, value_name = "DIR")]
    gold_ann: Option<PathBuf>,
    /// Predicted .ann directory per run, in the order of the PRED files.
    #[arg(long, value_name = "DIR")]
    pred_ann: Vec<PathBuf>,
    #[arg(long, short, default_value = "markdown")]
    format: OutputFormat,
    gold: PathBuf,
    /// One file per run; several runs are reported as mean ± std.
    #[arg(required = true)]
    pred: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[arg(long, short, default_value = "markdown")]
    format: OutputFormat,
    /// JSON file of the form {"runs":[{"seed":1,"metrics":{"f1":70.0}}]}.
    runs: PathBuf,
}

#[derive(Debug, Args)]
struct VocabArgs {
    /// Marker convention of both files: none, prefix:<m> or continuation:<m>.
    #[arg(long, conflicts_with_all = ["marker_a", "marker_b"])]
    marker: Option<MarkerConvention>,
    #[arg(long)]
    marker_a: Option<MarkerConvention>,
    #[arg(long)]
    marker_b: Option<MarkerConvention>,
    /// Compare lowercased entries and words.
    #[arg(long)]
    fold_case: bool,
    /// Whitespace-separated words for fertility and the segmentation diff.
    #[arg(long, value_name = "FILE")]
    words: Option<PathBuf>,
    #[arg(long, short, default_value = "markdown")]
    format: OutputFormat,
    /// General-domain vocabulary, one entry per line.
    vocab_a: PathBuf,
    /// Specialized vocabulary, one entry per line.
    vocab_b: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("power_source").required(true).args(["device", "power"])))]
struct CarbonArgs {
    #[arg(long)]
    gpus: u32,
    /// Wall-clock training hours.
    #[arg(long, allow_negative_numbers = true)]
    hours: f64,
    /// Device with a built-in power draw (V100, A100).
    #[arg(long)]
    device: Option<String>,
    /// Per-device power draw in kW.
    #[arg(long, allow_negative_numbers = true)]
    power: Option<f64>,
    /// kg CO2-eq per kWh.
    #[arg(long, allow_negative_numbers = true)]
    intensity: Option<f64>,
    /// Power usage effectiveness of the facility.
    #[arg(long, allow_negative_numbers = true)]
    pue: Option<f64>,
    #[arg(long, short, default_value = "markdown")]
    format: OutputFormat,
}

fn run(cli: Cli) -> anyhow::Result<String> {
    let stamp = cli.timestamp.then(commands::unix_now);
    match cli.command {
        Command::Evaluate(a) => commands::evaluate(a, stamp),
        Command::Compare(a) => commands::compare(a, stamp),
        Command::Aggregate(a) => commands::aggregate(a, stamp),
        Command::Vocab(a) => commands::vocab(a, stamp),
        Command::Carbon(a) => commands::carbon(a, stamp),
    }
}

/// 2 for anything the user can fix (bad flags, files, inputs), 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let user = err.chain().any(|e| e.is::<UserError>() || e.is::<nereval::Error>() || e.is::<io::Error>());
    if user {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Ok(outcome) = std::panic::catch_unwind(|| run(cli)) else {
        return ExitCode::from(1);
    };
    match outcome {
        Ok(report) => {
            let mut out = io::stdout().lock();
            match out.write_all(report.as_bytes()).and_then(|_| out.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: writing report: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
