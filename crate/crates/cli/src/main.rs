//! `numscore`: batch front-end for digit-score metrics, rank evaluation,
//! conversation forging, composite scoring and logit simulation.

mod cmd;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "numscore",
    version,
    about = "Digit-token score metrics and data tooling"
)]
struct Cli {
    /// JSON file of flag defaults; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Map raw scores onto the m-digit grid.
    Quantize(QuantizeArgs),
    /// Per-step NCM, NCM* and cross-entropy from logit records.
    Ncm(NcmArgs),
    /// SRCC/PLCC, per-attribute tables and attribute-MOS rankings.
    Corr(CorrArgs),
    /// Generate numerical sorting trials or score answered ones.
    SortEval(SortEvalArgs),
    /// Forge stage-1 or stage-2 training conversations.
    BuildCot(BuildCotArgs),
    /// Extract scores and attributes from model responses.
    Parse(ParseArgs),
    /// Join MOS records with self-labeled attributes.
    MergeLabels(MergeLabelsArgs),
    /// Fit attribute weights by partial least squares.
    FitPls(FitPlsArgs),
    /// Apply a fitted composite model.
    ScoreComposite(ScoreCompositeArgs),
    /// Emit simulated logit records and training curves.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mask {
    Verbatim,
    Renormalized,
}

impl From<Mask> for numscore::expectation::MaskMode {
    fn from(m: Mask) -> Self {
        match m {
            Mask::Verbatim => Self::Verbatim,
            Mask::Renormalized => Self::Renormalized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Order {
    HighToLow,
    LowToHigh,
}

impl From<Order> for numscore::attributes::LevelOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::HighToLow => Self::HighToLow,
            Order::LowToHigh => Self::LowToHigh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Form {
    Attr,
    Level,
    Mix,
    Q1r1,
    Q2r2,
    Q3r3,
}

impl From<Form> for numscore::cot::Template {
    fn from(f: Form) -> Self {
        use numscore::cot::Template as T;
        match f {
            Form::Attr => T::Attr,
            Form::Level => T::Level,
            Form::Mix => T::Mix,
            Form::Q1r1 => T::Q1r1,
            Form::Q2r2 => T::Q2r2,
            Form::Q3r3 => T::Q3r3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Stage1 {
    Attr,
    Level,
    Mix,
    Union,
}

impl From<Stage1> for numscore::cot::Stage1Mode {
    fn from(s: Stage1) -> Self {
        use numscore::cot::Stage1Mode as M;
        match s {
            Stage1::Attr => M::Attr,
            Stage1::Level => M::Level,
            Stage1::Mix => M::Mix,
            Stage1::Union => M::Union,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Naive,
    Adjacent,
}

impl From<Kind> for numscore::sim::SimKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Naive => Self::Naive,
            Kind::Adjacent => Self::Adjacent,
        }
    }
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (standard output when omitted).
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct QuantizeArgs {
    /// One raw score per line (`-` for standard input).
    #[arg(long, short, default_value = "-")]
    input: PathBuf,
    /// Digit count of the grid.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Lower end of the source scale; with --source-hi, scores are normalized first.
    #[arg(long, requires = "source_hi")]
    source_lo: Option<f64>,
    #[arg(long, requires = "source_lo")]
    source_hi: Option<f64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct NcmArgs {
    /// Logit records `{id, gt, logits, step?}`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "verbatim")]
    mask: Mask,
    /// Steps per window for the first/last comparison.
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Where to write the windowed curve report (standard error when omitted).
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct CorrArgs {
    /// Paired records `{id, pred, mos}`.
    #[arg(long, short, conflicts_with_all = ["pred_attrs", "attrs"])]
    input: Option<PathBuf>,
    /// Predicted attribute records `{id, attributes}`; needs --gt-attrs.
    #[arg(long, requires = "gt_attrs", conflicts_with = "attrs")]
    pred_attrs: Option<PathBuf>,
    /// Ground-truth attribute records `{id, attributes}`.
    #[arg(long, requires = "pred_attrs")]
    gt_attrs: Option<PathBuf>,
    /// Records `{id, attributes, mos}` for the attribute-MOS ranking.
    #[arg(long)]
    attrs: Option<PathBuf>,
    /// Rows kept in the ranking.
    #[arg(long, default_value_t = 3)]
    top: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SortEvalArgs {
    /// Answered trials `{id?, gt, pred}` or `{id?, gt, answer}`.
    #[arg(
        long,
        short,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    input: Option<PathBuf>,
    /// Emit this many random trials with prompts instead of scoring.
    #[arg(long)]
    generate: Option<usize>,
    /// Numbers per generated trial.
    #[arg(long, default_value_t = 10)]
    len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-trial metrics CSV.
    #[arg(long, value_name = "PATH")]
    per_trial: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct BuildCotArgs {
    /// Stage-1 records `{id, attributes, reason}` or stage-2 records `{id, score, attributes?}`.
    #[arg(long, short)]
    input: PathBuf,
    /// 1 for attribute conversations, 2 for scoring conversations.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    stage: u8,
    /// Stage-1 granularity.
    #[arg(long, value_enum, default_value = "union")]
    mode: Stage1,
    /// Stage-2 forms; repeat to emit several per record.
    #[arg(long, value_enum, default_values = ["q1r1"])]
    form: Vec<Form>,
    /// Pick one of the listed forms per record instead of emitting all.
    #[arg(long)]
    sample_form: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "high-to-low")]
    order: Order,
    /// Template bank replacing the built-in one.
    #[arg(long, value_name = "PATH")]
    templates: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ParseArgs {
    /// Response records `{id, response, form?}`.
    #[arg(long, short)]
    input: PathBuf,
    /// Expected form for records without a `form` field.
    #[arg(long, value_enum, default_value = "q1r1")]
    form: Form,
    #[arg(long, value_name = "PATH")]
    templates: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct MergeLabelsArgs {
    /// MOS records `{id, mos}`.
    #[arg(long)]
    mos: PathBuf,
    /// Self-labeled attribute records `{id, attributes}`.
    #[arg(long)]
    attrs: PathBuf,
    #[arg(long)]
    source_lo: f64,
    #[arg(long)]
    source_hi: f64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// CSV of ids present in only one file (standard error when omitted).
    #[arg(long, value_name = "PATH")]
    skipped: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct FitPlsArgs {
    /// Training records `{id, attributes, feedback}`.
    #[arg(long, short)]
    input: PathBuf,
    /// PLS components.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Store a rescale of composites onto the m-digit grid.
    #[arg(long)]
    rescale: bool,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct ScoreCompositeArgs {
    /// Model JSON written by fit-pls.
    #[arg(long)]
    model: PathBuf,
    /// Attribute records `{id, attributes}`.
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "adjacent")]
    kind: Kind,
    #[arg(long, default_value_t = 0.3)]
    start_prob: f64,
    #[arg(long, default_value_t = 0.9)]
    end_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    start_spread: f64,
    #[arg(long, default_value_t = 0.6)]
    end_spread: f64,
    #[arg(long, default_value_t = 200)]
    steps: u64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, value_enum, default_value = "verbatim")]
    mask: Mask,
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Logit records JSONL, readable by `ncm`.
    #[arg(long, value_name = "PATH")]
    records: Option<PathBuf>,
    /// Windowed curve report (standard error when omitted).
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Quantize(a) => cmd::metrics::quantize(a),
        Command::Ncm(a) => cmd::metrics::ncm(a),
        Command::Simulate(a) => cmd::metrics::simulate(a),
        Command::Corr(a) => cmd::rank::corr(a),
        Command::SortEval(a) => cmd::rank::sort_eval(a),
        Command::BuildCot(a) => cmd::cot::build(a),
        Command::Parse(a) => cmd::cot::parse(a),
        Command::MergeLabels(a) => cmd::cot::merge(a),
        Command::FitPls(a) => cmd::composite::fit(a),
        Command::ScoreComposite(a) => cmd::composite::score(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Lines(lines) = &e {
                for l in lines {
                    eprintln!("{l}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
