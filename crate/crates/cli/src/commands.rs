//! Subcommand implementations. Each reads its inputs through the run
//! record so that digests land in the manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use codemix::corpus::{self, InputFormat, SplitCorpus};
use codemix::eval::{
    compare, confusion, majority_baseline, metrics, read_reports, reference_as_report, reference_row, render_table,
    EvalReport,
};
use codemix::langid::{tag_corpus, token_accuracy, train_lid};
use codemix::models::linear::Trial;
use codemix::models::{autotune_linear, train, EpochRecord, LabeledText, TextSplits};
use codemix::pipeline::{convert, export_paths, export_records, ExportCounts};
use codemix::providers::{
    Cache, DictionaryProvider, EchoProvider, HttpProvider, Provider, ProviderClient, ProviderError, SystemClock,
};
use codemix::translit::{self, TransliterationTable};
use codemix::{
    ConversionVariant, ConvertedCorpus, Corpus, LidModel, ModelKind, ModelSpec, Task, TokenKind, TrainedModel,
};

use crate::config::Config;
use crate::errors::{usage, ConfigError, MissingInput};
use crate::manifest::Run;
use crate::{
    Cli, Command, CompareArgs, ConvertArgs, DataArgs, EvalArgs, ExportArgs, IngestArgs, LidCommand, LidTagArgs,
    LidTrainArgs, ProviderArgs, StatsArgs, TableArgs, TrainArgs, TranslitArgs,
};

/// Name of the split file written next to exported records.
pub const SPLIT_FILE: &str = "split.json";
/// Name of the export description written next to exported records.
pub const EXPORT_META_FILE: &str = "export.json";

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: Config,
    task: Task,
    run: Run,
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => {
            let full = cli.workdir.join(p);
            if !full.is_file() {
                return Err(MissingInput(full).into());
            }
            Config::load(&full).map_err(|e| ConfigError(format!("{e:#}")))?
        }
        None => Config::default(),
    };
    let task = match &cli.task {
        Some(t) => t.parse::<Task>().map_err(usage)?,
        None => cfg.task().map_err(|e| ConfigError(format!("[data] task: {e}")))?,
    };
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut run = Run::new(&cli.workdir, cli.command.name(), args, cfg.clone());
    if let Some(p) = &cli.config {
        run.input(p)?;
    }
    let mut ctx = Ctx { cli, cfg, task, run };
    match &cli.command {
        Command::Ingest(a) => ingest(&mut ctx, a)?,
        Command::Stats(a) => stats(&mut ctx, a)?,
        Command::Lid(LidCommand::Train(a)) => lid_train(&mut ctx, a)?,
        Command::Lid(LidCommand::Tag(a)) => lid_tag(&mut ctx, a)?,
        Command::Translit(a) => translit_cmd(&mut ctx, a)?,
        Command::Convert(a) => convert_cmd(&mut ctx, a)?,
        Command::Export(a) => export(&mut ctx, a)?,
        Command::Train(a) => train_cmd(&mut ctx, a)?,
        Command::Eval(a) => eval_cmd(&mut ctx, a)?,
        Command::Compare(a) => compare_cmd(&mut ctx, a)?,
    }
    ctx.run.finish()?;
    Ok(())
}

fn write_output(ctx: &mut Ctx, path: &Path, body: &[u8]) -> Result<()> {
    let full = ctx.run.output(path)?;
    codemix::io::write_atomic(&full, body).with_context(|| format!("writing {}", full.display()))
}

fn to_json_line<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    Ok(body)
}

fn load_corpus(ctx: &mut Ctx, path: &Path) -> Result<Corpus> {
    let full = ctx.run.input(path)?;
    let task = ctx.task;
    ctx.run.stage("load-corpus", || {
        corpus::ingest(&full, InputFormat::CanonicalRecords, task).with_context(|| format!("reading {}", full.display()))
    })
}

fn ingest(ctx: &mut Ctx, a: &IngestArgs) -> Result<()> {
    let input = a
        .input
        .clone()
        .or_else(|| ctx.cfg.data.path.clone())
        .ok_or_else(|| usage("no input: pass --input or set [data] path"))?;
    let format: InputFormat = match &a.format {
        Some(f) => f.parse().map_err(usage)?,
        None => ctx.cfg.format().map_err(|e| ConfigError(format!("[data] format: {e}")))?,
    };
    let full = ctx.run.input(&input)?;
    let task = ctx.task;
    let mut corpus = ctx.run.stage("parse", || {
        corpus::ingest(&full, format, task).with_context(|| format!("reading {}", full.display()))
    })?;
    if a.strip_urls {
        let (stripped, report) = corpus::strip_hyperlinks(&corpus);
        log::info!(
            "removed {} hyperlink token(s); dropped {} utterance(s)",
            report.urls_removed,
            report.dropped_utterances.len()
        );
        corpus = stripped;
    }
    log::info!("ingested {} utterances", corpus.len());
    write_output(ctx, &a.output, corpus.to_records().as_bytes())
}

fn stats(ctx: &mut Ctx, a: &StatsArgs) -> Result<()> {
    let mut corpus = load_corpus(ctx, &a.corpus)?;
    if let Some(m) = &a.lid {
        let model = LidModel::load(&ctx.run.input(m)?)?;
        corpus = ctx.run.stage("tag", || Ok(tag_corpus(&model, &corpus)))?;
    }
    let s = corpus::language_stats(&corpus)?;
    println!("utterances\t{}", corpus.len());
    println!("tokens\t{}", s.total());
    println!("hindi\t{}", s.hindi);
    println!("english\t{}", s.english);
    println!("other\t{}", s.other);
    println!("hindi_fraction\t{:.3}%", s.hindi_fraction);
    if let Some(out) = &a.output {
        write_output(ctx, out, &to_json_line(&s)?)?;
    }
    Ok(())
}

fn lid_train(ctx: &mut Ctx, a: &LidTrainArgs) -> Result<()> {
    let corpus = load_corpus(ctx, &a.corpus)?;
    let cfg = ctx.cfg.lid_config(ctx.cli.seed).map_err(|e| ConfigError(format!("{e:#}")))?;
    ctx.run.seed("lid", cfg.seed);
    let model = ctx.run.stage("train", || Ok(train_lid(&corpus, &cfg)?))?;
    log::info!("training token accuracy {:.4}", token_accuracy(&model, &corpus));
    let full = ctx.run.output(&a.output)?;
    model.save(&full)?;
    Ok(())
}

fn lid_tag(ctx: &mut Ctx, a: &LidTagArgs) -> Result<()> {
    let corpus = load_corpus(ctx, &a.corpus)?;
    let model = LidModel::load(&ctx.run.input(&a.model)?)?;
    let tagged = ctx.run.stage("tag", || Ok(tag_corpus(&model, &corpus)))?;
    write_output(ctx, &a.output, tagged.to_records().as_bytes())
}

fn load_table(ctx: &mut Ctx, a: &TableArgs) -> Result<TransliterationTable> {
    let rules = a.rules.clone().or_else(|| ctx.cfg.translit.rules.clone());
    let lexicon = a.lexicon.clone().or_else(|| ctx.cfg.translit.lexicon.clone());
    let mut table = match rules {
        Some(r) => {
            let rules = ctx.run.input(&r)?;
            let lexicon = lexicon.map(|l| ctx.run.input(&l)).transpose()?;
            translit::load_table(&rules, lexicon.as_deref())?
        }
        None if lexicon.is_some() => return Err(usage("a custom lexicon needs a rule file (--rules)")),
        None => TransliterationTable::bundled(),
    };
    table.schwa_final_deletion = ctx.cfg.translit.schwa_deletion && !a.keep_final_schwa;
    Ok(table)
}

fn translit_cmd(ctx: &mut Ctx, a: &TranslitArgs) -> Result<()> {
    let table = load_table(ctx, &a.table)?;
    if let Some(word) = &a.word {
        println!("{}", table.transliterate_word(&word.to_lowercase())?);
        return Ok(());
    }
    let output = a.output.clone().ok_or_else(|| usage("--output is required with --file and --corpus"))?;
    if let Some(file) = &a.file {
        let full = ctx.run.input(file)?;
        let src = std::fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))?;
        let mut body = String::new();
        for (i, line) in src.lines().enumerate() {
            let word = line.trim();
            if word.is_empty() {
                continue;
            }
            let out = table.transliterate_word(&word.to_lowercase()).with_context(|| format!("line {}", i + 1))?;
            body.push_str(&format!("{word}\t{out}\n"));
        }
        return write_output(ctx, &output, body.as_bytes());
    }
    let path = a.corpus.clone().expect("clap requires one source");
    let mut corpus = load_corpus(ctx, &path)?;
    let mut failed = 0usize;
    for u in &mut corpus.utterances {
        for tok in &mut u.tokens {
            if tok.kind != TokenKind::Word || translit::is_devanagari(&tok.text) {
                continue;
            }
            match table.transliterate_token(tok) {
                Ok(t) => *tok = t,
                Err(e) => {
                    failed += 1;
                    log::warn!("{}: kept {:?}: {e}", u.id, tok.text);
                }
            }
        }
    }
    if failed > 0 {
        log::warn!("{failed} token(s) could not be transliterated and were kept");
    }
    write_output(ctx, &output, corpus.to_records().as_bytes())
}

fn build_provider(ctx: &mut Ctx, a: &ProviderArgs, kind: &str) -> Result<Box<dyn Provider>> {
    Ok(match kind {
        "mock-echo" => Box::new(EchoProvider::new()),
        "mock-dictionary" => {
            let path = a
                .dictionary
                .clone()
                .or_else(|| ctx.cfg.provider.dictionary.clone())
                .ok_or_else(|| usage("mock-dictionary needs --dictionary or [provider] dictionary"))?;
            let full = ctx.run.input(&path)?;
            Box::new(DictionaryProvider::from_file(&full).map_err(ProviderError::Config)?)
        }
        "http" => {
            let mut cfg = ctx.cfg.provider_config();
            if let Some(e) = &a.endpoint {
                cfg.endpoint = e.clone();
            }
            Box::new(HttpProvider::new(&cfg)?)
        }
        other => return Err(usage(format!("unknown provider {other:?} (expected http, mock-echo or mock-dictionary)"))),
    })
}

fn convert_cmd(ctx: &mut Ctx, a: &ConvertArgs) -> Result<()> {
    let variant: ConversionVariant = a
        .variant
        .clone()
        .or_else(|| ctx.cfg.convert.variant.clone())
        .ok_or_else(|| usage("no variant: pass --variant or set [convert] variant"))?
        .parse()
        .map_err(usage)?;
    let corpus = load_corpus(ctx, &a.corpus)?;
    let table = load_table(ctx, &a.table)?;
    let converted = if variant.needs_provider() {
        let kind = a
            .provider
            .provider
            .clone()
            .or_else(|| ctx.cfg.provider.kind.clone())
            .ok_or_else(|| usage("the english variant needs --provider or [provider] kind"))?;
        let provider = build_provider(ctx, &a.provider, &kind)?;
        let cache = match a.provider.cache.clone().or_else(|| ctx.cfg.provider.cache.clone()) {
            Some(p) => {
                let full = ctx.run.resolve(&p);
                if let Some(parent) = full.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                Cache::open(&full)?
            }
            None => Cache::in_memory(),
        };
        let mut pcfg = ctx.cfg.provider_config();
        if let Some(e) = &a.provider.endpoint {
            pcfg.endpoint = e.clone();
        }
        let clock = SystemClock::default();
        let client = ProviderClient::new(pcfg, provider.as_ref(), &cache, &clock)?;
        ctx.run.stage("convert", || Ok(convert(&corpus, variant, &table, Some(&client))?))?
    } else {
        ctx.run.stage("convert", || Ok(convert(&corpus, variant, &table, None)?))?
    };
    if !converted.excluded.is_empty() {
        log::warn!("{} utterance(s) excluded during conversion", converted.excluded.len());
    }
    log::info!("converted {} utterances ({variant})", converted.len());
    let full = ctx.run.output(&a.output)?;
    converted.save(&full)?;
    Ok(())
}

/// Description of an export directory, used to label reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub base: String,
    pub task: Task,
    pub variant: ConversionVariant,
    pub split_seed: u64,
    pub counts: ExportCounts,
}

fn export(ctx: &mut Ctx, a: &ExportArgs) -> Result<()> {
    let full = ctx.run.input(&a.converted)?;
    let converted = ConvertedCorpus::load(&full)?;
    let split: SplitCorpus = match (&a.split, &a.corpus) {
        (Some(s), _) => {
            let full = ctx.run.input(s)?;
            let src = std::fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))?;
            serde_json::from_str(&src).with_context(|| format!("parsing split file {}", full.display()))?
        }
        (None, Some(c)) => {
            let corpus = load_corpus(ctx, c)?;
            let opts = ctx.cfg.split_options(ctx.cli.seed);
            corpus::split(&corpus, opts)?
        }
        (None, None) => return Err(usage("export needs --split or --corpus")),
    };
    ctx.run.seed("split", split.seed);
    let dir = a
        .output_dir
        .clone()
        .or_else(|| ctx.cfg.output.dir.clone())
        .ok_or_else(|| usage("no output directory: pass --output-dir or set [output] dir"))?;
    for p in export_paths(&dir) {
        ctx.run.output(&p)?;
    }
    let full_dir = ctx.run.resolve(&dir);
    let counts = ctx.run.stage("export", || Ok(export_records(&converted, &split, &full_dir)?))?;
    log::info!(
        "exported train {} / val {} / test {} ({} excluded)",
        counts.train,
        counts.val,
        counts.test,
        counts.excluded
    );
    let meta = ExportMeta {
        base: converted.base.clone(),
        task: converted.task,
        variant: converted.variant,
        split_seed: split.seed,
        counts,
    };
    write_output(ctx, &dir.join(SPLIT_FILE), &to_json_line(&split)?)?;
    write_output(ctx, &dir.join(EXPORT_META_FILE), &to_json_line(&meta)?)
}

/// Splits plus the labels that end up in an evaluation report.
struct LoadedSplits {
    splits: TextSplits,
    dataset: String,
    variant: String,
    split_seed: u64,
}

fn load_splits(ctx: &mut Ctx, a: &DataArgs) -> Result<LoadedSplits> {
    if let Some(c) = &a.corpus {
        let corpus = load_corpus(ctx, c)?;
        let opts = ctx.cfg.split_options(ctx.cli.seed);
        ctx.run.seed("split", opts.seed);
        let split = corpus::split(&corpus, opts)?;
        let splits = TextSplits::from_corpus(&corpus, &split)?;
        return Ok(LoadedSplits { splits, dataset: corpus.name, variant: "raw".into(), split_seed: opts.seed });
    }
    let dir: PathBuf = a.data.clone().expect("clap requires one data source");
    for p in export_paths(&dir) {
        ctx.run.input(&p)?;
    }
    let splits = TextSplits::read_exported(&ctx.run.resolve(&dir))?;
    let dir_name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let meta_path = dir.join(EXPORT_META_FILE);
    let (dataset, variant, split_seed) = if ctx.run.resolve(&meta_path).is_file() {
        let full = ctx.run.input(&meta_path)?;
        let meta: ExportMeta = serde_json::from_str(&std::fs::read_to_string(&full)?)
            .with_context(|| format!("parsing {}", full.display()))?;
        (meta.base, meta.variant.as_str().to_string(), meta.split_seed)
    } else {
        (dir_name.clone(), dir_name, 0)
    };
    ctx.run.seed("split", split_seed);
    Ok(LoadedSplits { splits, dataset, variant, split_seed })
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    spec: ModelSpec,
    history: Vec<EpochRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    autotune: Option<AutotuneSummary>,
}

#[derive(Debug, Serialize)]
struct AutotuneSummary {
    budget_seed: u64,
    best_index: usize,
    trials: Vec<Trial>,
}

fn train_cmd(ctx: &mut Ctx, a: &TrainArgs) -> Result<()> {
    let kind: ModelKind = a.model.parse().map_err(usage)?;
    if a.autotune.is_some() && kind != ModelKind::Linear {
        return Err(usage("--autotune applies to the linear model only"));
    }
    let loaded = load_splits(ctx, &a.data)?;
    let spec = match kind {
        ModelKind::Linear => ModelSpec::Linear(ctx.cfg.linear_config(ctx.cli.seed).map_err(|e| ConfigError(format!("{e:#}")))?),
        ModelKind::Cnn => {
            ModelSpec::Cnn(ctx.cfg.cnn_config(ctx.task, ctx.cli.seed).map_err(|e| ConfigError(format!("{e:#}")))?)
        }
    };
    let mut autotune = None;
    let model = match (&spec, a.autotune) {
        (ModelSpec::Linear(base), Some(n)) => {
            let budget_seed = ctx.cli.seed.unwrap_or(base.seed);
            ctx.run.seed("autotune", budget_seed);
            let result = ctx.run.stage("autotune", || Ok(autotune_linear(&loaded.splits, n, budget_seed, base)?))?;
            log::info!("best trial {} of {n}", result.best_index + 1);
            autotune = Some(AutotuneSummary { budget_seed, best_index: result.best_index, trials: result.trials });
            TrainedModel::Linear(result.model)
        }
        _ => {
            let seed = match &spec {
                ModelSpec::Linear(c) => c.seed,
                ModelSpec::Cnn(c) => c.seed,
            };
            ctx.run.seed("model", seed);
            ctx.run.stage("train", || Ok(train(&spec, &loaded.splits)?))?
        }
    };
    if let Some(last) = model.history().last() {
        log::info!("epoch {}: val f1 {:.4}, val accuracy {:.4}", last.epoch, last.val_f1, last.val_accuracy);
    }
    let full = ctx.run.output(&a.output)?;
    model.save(&full)?;
    if let Some(path) = &a.summary {
        let summary = TrainSummary { spec: model.spec(), history: model.history().to_vec(), autotune };
        write_output(ctx, path, &to_json_line(&summary)?)?;
    }
    Ok(())
}

fn eval_cmd(ctx: &mut Ctx, a: &EvalArgs) -> Result<()> {
    let model = TrainedModel::load(&ctx.run.input(&a.model)?)?;
    let loaded = load_splits(ctx, &a.data)?;
    let items: &[LabeledText] = match a.part.as_str() {
        "train" => &loaded.splits.train,
        "val" => &loaded.splits.val,
        "test" => &loaded.splits.test,
        other => return Err(usage(format!("unknown part {other:?} (expected train, val or test)"))),
    };
    let preds: Vec<u8> = ctx.run.stage("predict", || Ok(items.iter().map(|it| model.predict(&it.text).label).collect()))?;
    let golds: Vec<u8> = items.iter().map(|it| it.label).collect();
    let name = a.name.clone().unwrap_or_else(|| model.kind().to_string());
    let variant = a.variant.clone().unwrap_or(loaded.variant);
    let mut report =
        EvalReport::new(name, loaded.dataset, variant, a.part.clone(), loaded.split_seed, confusion(&preds, &golds)?)?;
    let train_labels: Vec<u8> = loaded.splits.train.iter().map(|it| it.label).collect();
    report.majority_accuracy = Some(metrics(&majority_baseline(&train_labels, &golds)?)?.accuracy);
    print!("{}", render_table(std::slice::from_ref(&report)));
    if let Some(out) = &a.output {
        let mut line = report.to_record();
        line.push('\n');
        write_output(ctx, out, line.as_bytes())?;
    }
    Ok(())
}

fn compare_cmd(ctx: &mut Ctx, a: &CompareArgs) -> Result<()> {
    let reports = match (&a.report, &a.published) {
        (Some(p), _) => {
            let full = ctx.run.input(p)?;
            let src = std::fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))?;
            let reports = read_reports(&src)?;
            if reports.is_empty() {
                return Err(usage(format!("{} holds no report records", p.display())));
            }
            reports
        }
        (None, Some(model)) => vec![reference_as_report(&reference_row(ctx.task, model)?)],
        (None, None) => return Err(usage("compare needs --report or --published")),
    };
    let reference = reference_row(ctx.task, &a.reference)?;
    let comparisons: Vec<_> = reports.iter().map(|r| compare(r, &reference)).collect();
    println!("{:<16} {:>6} {:<16} {:>6} {:>9}", "model", "f1", "reference", "f1", "delta_f1");
    let mut body = String::new();
    for c in &comparisons {
        println!(
            "{:<16} {:>6.3} {:<16} {:>6.3} {:>+8.1}%",
            c.model,
            c.f1,
            c.reference_model,
            c.reference_f1,
            c.relative_f1 * 100.0
        );
        body.push_str(&serde_json::to_string(c)?);
        body.push('\n');
    }
    if let Some(out) = &a.output {
        write_output(ctx, out, body.as_bytes())?;
    }
    Ok(())
}
