mod commands;
mod config;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Code-switched English-Hindi text conversion, baselines and evaluation.
#[derive(Debug, Parser)]
#[command(name = "codemix", version)]
pub struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed (split, identifier, models, autotune).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Base directory for every relative path.
    #[arg(long, global = true, default_value = ".")]
    pub workdir: PathBuf,
    /// sarcasm or hate-speech.
    #[arg(long, global = true)]
    pub task: Option<String>,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw dataset into canonical records.
    Ingest(IngestArgs),
    /// Token language counts and the Hindi fraction.
    Stats(StatsArgs),
    /// Token-level language identification.
    #[command(subcommand)]
    Lid(LidCommand),
    /// Rule-based Latin to Devanagari transliteration.
    Translit(TranslitArgs),
    /// Convert a tagged corpus into one of the conversion variants.
    Convert(ConvertArgs),
    /// Write train/val/test record files of a converted corpus.
    Export(ExportArgs),
    /// Train a linear or CNN classifier.
    Train(TrainArgs),
    /// Evaluate a trained model and write a report record.
    Eval(EvalArgs),
    /// Relative deltas of reports against reference rows.
    Compare(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Stats(_) => "stats",
            Command::Lid(LidCommand::Train(_)) => "lid-train",
            Command::Lid(LidCommand::Tag(_)) => "lid-tag",
            Command::Translit(_) => "translit",
            Command::Convert(_) => "convert",
            Command::Export(_) => "export",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Compare(_) => "compare",
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw dataset; defaults to [data] path.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// records or columns; defaults to [data] format.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
    /// Remove hyperlink tokens.
    #[arg(long)]
    pub strip_urls: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Tag untagged tokens with this identifier before counting.
    #[arg(long)]
    pub lid: Option<PathBuf>,
    /// Also write the statistics as JSON.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LidCommand {
    /// Train on the gold-tagged word tokens of a corpus.
    Train(LidTrainArgs),
    /// Fill in missing token tags.
    Tag(LidTagArgs),
}

#[derive(Debug, Args)]
pub struct LidTrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LidTagArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["word", "file", "corpus"])))]
pub struct TranslitArgs {
    /// Print the transliteration of one word.
    #[arg(long)]
    pub word: Option<String>,
    /// One word per line; writes word<TAB>devanagari lines.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Transliterate every word token of a corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Required with --file and --corpus.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub table: TableArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// Rule file; defaults to [translit] rules, else the bundled table.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Write a virama on word-final consonants.
    #[arg(long)]
    pub keep_final_schwa: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// hindi, english or crosslingual; defaults to [convert] variant.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub table: TableArgs,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProviderArgs {
    /// http, mock-echo or mock-dictionary.
    #[arg(long)]
    pub provider: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Response cache file.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Lookup table for mock-dictionary (source<TAB>target lines).
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub converted: PathBuf,
    /// Split file written by an earlier export; shares one split between
    /// variants.
    #[arg(long, conflicts_with = "corpus")]
    pub split: Option<PathBuf>,
    /// Corpus to split with the configured seed and fractions.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Defaults to [output] dir.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("data_source").required(true).args(["corpus", "data"])))]
pub struct DataArgs {
    /// Canonical corpus, split with the configured seed and fractions.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory holding exported train/val/test files.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// linear or cnn.
    #[arg(long)]
    pub model: String,
    /// Random-search trials for the linear model.
    #[arg(long)]
    pub autotune: Option<usize>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write training history (and autotune trials) as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// train, val or test.
    #[arg(long, default_value = "test")]
    pub part: String,
    /// Model name in the report; defaults to the model kind.
    #[arg(long)]
    pub name: Option<String>,
    /// Variant name in the report; defaults to "raw" for --corpus and the
    /// directory name for --data.
    #[arg(long)]
    pub variant: Option<String>,
    /// Report record file (one JSON line).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("subject").required(true).args(["report", "published"])))]
pub struct CompareArgs {
    /// Report records from `eval` or any tool emitting the same schema.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Compare a published reference row instead of a report.
    #[arg(long)]
    pub published: Option<String>,
    /// Reference row to compare against.
    #[arg(long, default_value = "CNN")]
    pub reference: String,
    /// Comparison records (JSON lines).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[E_USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (line, status) = errors::render(&e);
            eprintln!("{line}");
            ExitCode::from(status as u8)
        }
    }
}
