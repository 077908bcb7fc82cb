//! Token-tagged code-switched corpora: ingestion, hyperlink stripping,
//! deterministic train/val/test splits and language statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate utterance id {0:?}")]
    DuplicateId(String),
    #[error("corpus is empty")]
    Empty,
    #[error("corpus has {0} utterances; at least 10 are needed to split")]
    TooSmallToSplit(usize),
    #[error("split fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("split leaves the training part empty")]
    EmptyTrain,
    #[error("{0} token(s) have no language tag; run language identification first")]
    Untagged(usize),
    #[error("no Hindi or English tokens; the Hindi fraction is undefined")]
    NoMarkedTokens,
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LanguageTag {
    #[serde(rename = "hi")]
    Hindi,
    #[serde(rename = "en")]
    English,
    #[serde(rename = "other")]
    Other,
}

impl LanguageTag {
    /// Fixed label order used by the identifier and for tie-breaking.
    pub const ALL: [LanguageTag; 3] = [LanguageTag::Hindi, LanguageTag::English, LanguageTag::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::Hindi => "hi",
            LanguageTag::English => "en",
            LanguageTag::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        match self {
            LanguageTag::Hindi => 0,
            LanguageTag::English => 1,
            LanguageTag::Other => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Lenient parse for third-party tag sets. Unrecognized tags map to
    /// `Other` and are reported through the second tuple element.
    pub fn parse_lenient(raw: &str) -> (LanguageTag, bool) {
        match raw.trim().to_ascii_lowercase().as_str() {
            "hi" | "hin" | "hindi" => (LanguageTag::Hindi, true),
            "en" | "eng" | "english" => (LanguageTag::English, true),
            "other" | "o" | "rest" | "univ" => (LanguageTag::Other, true),
            _ => (LanguageTag::Other, false),
        }
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "hi" => Ok(LanguageTag::Hindi),
            "en" => Ok(LanguageTag::English),
            "other" => Ok(LanguageTag::Other),
            _ => Err(format!("unknown language tag {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Hashtag,
    Mention,
    Url,
    Punct,
    Numeric,
    Emoji,
}

impl TokenKind {
    /// Infers the kind of a surface token.
    ///
    /// Precedence for overlapping patterns: Url > Mention > Hashtag >
    /// Numeric > Punct > Emoji > Word.
    pub fn infer(text: &str) -> TokenKind {
        if is_url(text) {
            TokenKind::Url
        } else if text.len() > 1 && text.starts_with('@') {
            TokenKind::Mention
        } else if text.len() > 1 && text.starts_with('#') {
            TokenKind::Hashtag
        } else if !text.is_empty() && text.chars().all(|c| c.is_ascii_digit()) {
            TokenKind::Numeric
        } else if !text.is_empty() && text.chars().all(|c| !c.is_alphanumeric() && !is_emoji(c)) {
            TokenKind::Punct
        } else if text.chars().any(is_emoji) && !text.chars().any(char::is_alphanumeric) {
            TokenKind::Emoji
        } else {
            TokenKind::Word
        }
    }

    /// Kinds whose language is fixed to `Other`.
    pub fn forces_other(self) -> bool {
        matches!(self, TokenKind::Hashtag | TokenKind::Mention | TokenKind::Punct)
    }
}

fn is_url(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    if lower.starts_with("www.") && lower.len() > 4 {
        return true;
    }
    match lower.find("://") {
        Some(pos) if pos > 0 && pos + 3 < lower.len() => {
            let scheme = &lower[..pos];
            scheme.starts_with(|c: char| c.is_ascii_alphabetic())
                && scheme
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
        }
        _ => false,
    }
}

pub(crate) fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF
        | 0x2600..=0x27BF
        | 0x2B00..=0x2BFF
        | 0xFE0F
        | 0x200D
        | 0x2190..=0x21FF
        | 0x2300..=0x23FF)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    /// `None` means the language is not yet identified.
    pub lang: Option<LanguageTag>,
    pub kind: TokenKind,
}

impl Token {
    /// Builds a token, inferring its kind. Tokens of a kind that forces
    /// `Other` get that tag regardless of `lang`.
    pub fn new(text: impl Into<String>, lang: Option<LanguageTag>) -> Token {
        let text = text.into();
        let kind = TokenKind::infer(&text);
        let lang = if kind.forces_other() { Some(LanguageTag::Other) } else { lang };
        Token { text, lang, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub id: String,
    pub tokens: Vec<Token>,
    pub label: u8,
}

impl Utterance {
    pub fn text(&self) -> String {
        join_tokens(self.tokens.iter().map(|t| t.text.as_str()))
    }
}

pub(crate) fn join_tokens<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    parts.collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Sarcasm,
    HateSpeech,
}

impl Task {
    pub fn label_names(self) -> BTreeMap<u8, String> {
        let (neg, pos) = match self {
            Task::Sarcasm => ("non-sarcastic", "sarcastic"),
            Task::HateSpeech => ("non-hate", "hate"),
        };
        BTreeMap::from([(0, neg.to_string()), (1, pos.to_string())])
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sarcasm => "sarcasm",
            Task::HateSpeech => "hate-speech",
        }
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sarcasm" => Ok(Task::Sarcasm),
            "hate" | "hate-speech" | "hatespeech" => Ok(Task::HateSpeech),
            _ => Err(format!("unknown task {s:?} (expected sarcasm or hate-speech)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub task: Task,
    pub utterances: Vec<Utterance>,
    pub label_names: BTreeMap<u8, String>,
}

impl Corpus {
    /// Validates id uniqueness and non-emptiness.
    pub fn new(name: impl Into<String>, task: Task, utterances: Vec<Utterance>) -> Result<Corpus> {
        if utterances.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut seen = HashSet::with_capacity(utterances.len());
        for u in &utterances {
            if !seen.insert(u.id.as_str()) {
                return Err(CorpusError::DuplicateId(u.id.clone()));
            }
        }
        Ok(Corpus { name: name.into(), task, utterances, label_names: task.label_names() })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    pub fn index_by_id(&self) -> std::collections::HashMap<&str, &Utterance> {
        self.utterances.iter().map(|u| (u.id.as_str(), u)).collect()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.utterances.iter().flat_map(|u| u.tokens.iter())
    }

    /// Serializes in the canonical one-record-per-line format.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            out.push_str(&record_line(u));
            out.push('\n');
        }
        out
    }

    pub fn write_records(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_records().as_bytes()).map_err(|e| io_err(path, e))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source }
}

// Canonical record encoding.

#[derive(Serialize, Deserialize)]
pub(crate) struct RecordToken {
    pub t: String,
    pub l: Option<LanguageTag>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecordTokenIn {
    Bare(String),
    Tagged { t: String, l: Option<String> },
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    label: u8,
    tokens: Vec<RecordToken>,
}

#[derive(Deserialize)]
struct RecordIn {
    id: String,
    label: u8,
    tokens: Vec<RecordTokenIn>,
}

pub(crate) fn record_tokens(tokens: &[Token]) -> Vec<RecordToken> {
    tokens.iter().map(|t| RecordToken { t: t.text.clone(), l: t.lang }).collect()
}

fn record_line(u: &Utterance) -> String {
    let rec = RecordOut { id: &u.id, label: u.label, tokens: record_tokens(&u.tokens) };
    serde_json::to_string(&rec).expect("record serialization is infallible")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    CanonicalRecords,
    TokenTagColumns,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "canonical-records" | "records" | "jsonl" => Ok(InputFormat::CanonicalRecords),
            "token-tag-columns" | "columns" | "conll" => Ok(InputFormat::TokenTagColumns),
            _ => Err(format!("unknown input format {s:?}")),
        }
    }
}

pub fn ingest(path: &Path, format: InputFormat, task: Task) -> Result<Corpus> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    ingest_str(&content, format, name, task)
}

pub fn ingest_str(content: &str, format: InputFormat, name: impl Into<String>, task: Task) -> Result<Corpus> {
    let utterances = match format {
        InputFormat::CanonicalRecords => parse_records(content)?,
        InputFormat::TokenTagColumns => parse_columns(content)?,
    };
    Corpus::new(name, task, utterances)
}

fn check_label(label: u8, line: usize) -> Result<u8> {
    if label > 1 {
        return Err(CorpusError::Malformed { line, message: format!("label must be 0 or 1, got {label}") });
    }
    Ok(label)
}

fn check_token_text(text: &str, line: usize) -> Result<()> {
    if text.is_empty() {
        return Err(CorpusError::Malformed { line, message: "empty token".into() });
    }
    if text.chars().any(char::is_whitespace) {
        return Err(CorpusError::Malformed { line, message: format!("token {text:?} contains whitespace") });
    }
    Ok(())
}

fn parse_records(content: &str) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    let mut unknown_tags = 0usize;
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: RecordIn = serde_json::from_str(raw)
            .map_err(|e| CorpusError::Malformed { line, message: e.to_string() })?;
        let label = check_label(rec.label, line)?;
        if rec.tokens.is_empty() {
            return Err(CorpusError::Malformed { line, message: "utterance has no tokens".into() });
        }
        let mut tokens = Vec::with_capacity(rec.tokens.len());
        for tok in rec.tokens {
            let (text, tag) = match tok {
                RecordTokenIn::Bare(t) => (t, None),
                RecordTokenIn::Tagged { t, l } => (t, l),
            };
            check_token_text(&text, line)?;
            let lang = tag.map(|raw| {
                let (tag, known) = LanguageTag::parse_lenient(&raw);
                if !known {
                    unknown_tags += 1;
                }
                tag
            });
            tokens.push(Token::new(text, lang));
        }
        out.push(Utterance { id: rec.id, tokens, label });
    }
    if unknown_tags > 0 {
        log::warn!("{unknown_tags} unrecognized language tag(s) mapped to other");
    }
    Ok(out)
}

fn parse_columns(content: &str) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    let mut current: Option<(String, u8, Vec<Token>, usize)> = None;
    let mut unknown_tags = 0usize;

    let flush = |cur: &mut Option<(String, u8, Vec<Token>, usize)>, out: &mut Vec<Utterance>| -> Result<()> {
        if let Some((id, label, tokens, header_line)) = cur.take() {
            if tokens.is_empty() {
                return Err(CorpusError::Malformed { line: header_line, message: format!("utterance {id:?} has no tokens") });
            }
            out.push(Utterance { id, tokens, label });
        }
        Ok(())
    };

    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            flush(&mut current, &mut out)?;
            continue;
        }
        if let Some(header) = trimmed.strip_prefix("# ") {
            flush(&mut current, &mut out)?;
            let (id, label) = parse_header(header, line)?;
            current = Some((id, label, Vec::new(), line));
            continue;
        }
        let Some((_, _, tokens, _)) = current.as_mut() else {
            return Err(CorpusError::Malformed { line, message: "token line before any utterance header".into() });
        };
        let mut cols = trimmed.split('\t');
        let text = cols.next().unwrap_or_default();
        check_token_text(text, line)?;
        let lang = match cols.next().map(str::trim) {
            None | Some("") => None,
            Some(raw_tag) => {
                let (tag, known) = LanguageTag::parse_lenient(raw_tag);
                if !known {
                    unknown_tags += 1;
                    log::debug!("line {line}: unrecognized tag {raw_tag:?} mapped to other");
                }
                Some(tag)
            }
        };
        if cols.next().is_some() {
            return Err(CorpusError::Malformed { line, message: "expected at most two tab-separated columns".into() });
        }
        tokens.push(Token::new(text, lang));
    }
    flush(&mut current, &mut out)?;
    if unknown_tags > 0 {
        log::warn!("{unknown_tags} unrecognized language tag(s) mapped to other");
    }
    Ok(out)
}

fn parse_header(header: &str, line: usize) -> Result<(String, u8)> {
    let mut id = None;
    let mut label = None;
    for field in header.split_whitespace() {
        if let Some(v) = field.strip_prefix("id=") {
            id = Some(v.to_string());
        } else if let Some(v) = field.strip_prefix("label=") {
            let parsed: u8 = v
                .parse()
                .map_err(|_| CorpusError::Malformed { line, message: format!("bad label {v:?}") })?;
            label = Some(check_label(parsed, line)?);
        }
    }
    match (id, label) {
        (Some(id), Some(label)) if !id.is_empty() => Ok((id, label)),
        _ => Err(CorpusError::Malformed { line, message: "header must be \"# id=<id> label=<0|1>\"".into() }),
    }
}

/// Serializes a corpus in the two-column token/tag layout.
pub fn to_columns(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, u) in corpus.utterances.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# id={} label={}\n", u.id, u.label));
        for t in &u.tokens {
            out.push_str(&t.text);
            if let Some(l) = t.lang {
                out.push('\t');
                out.push_str(l.as_str());
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StripReport {
    pub urls_removed: usize,
    pub dropped_utterances: Vec<String>,
}

/// Removes `Url` tokens. Utterances left without tokens are dropped and
/// listed in the report.
pub fn strip_hyperlinks(corpus: &Corpus) -> (Corpus, StripReport) {
    let mut report = StripReport::default();
    let mut utterances = Vec::with_capacity(corpus.len());
    for u in &corpus.utterances {
        let before = u.tokens.len();
        let tokens: Vec<Token> = u.tokens.iter().filter(|t| t.kind != TokenKind::Url).cloned().collect();
        report.urls_removed += before - tokens.len();
        if tokens.is_empty() {
            report.dropped_utterances.push(u.id.clone());
        } else {
            utterances.push(Utterance { id: u.id.clone(), tokens, label: u.label });
        }
    }
    let stripped = Corpus {
        name: corpus.name.clone(),
        task: corpus.task,
        utterances,
        label_names: corpus.label_names.clone(),
    };
    (stripped, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCorpus {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
    pub test_frac: f64,
    pub val_frac: f64,
    pub stratified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    pub seed: u64,
    pub test_frac: f64,
    pub val_frac: f64,
    pub stratify: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions { seed: 42, test_frac: 0.10, val_frac: 0.10, stratify: false }
    }
}

pub(crate) fn round_half_up(x: f64) -> usize {
    // Guard against 0.1 * n landing a hair under .5 in binary.
    (x + 0.5 + 1e-9).floor() as usize
}

/// Sizes of (test, val) for `n` utterances.
pub fn split_sizes(n: usize, test_frac: f64, val_frac: f64) -> (usize, usize) {
    let n_test = round_half_up(test_frac * n as f64);
    let n_val = round_half_up(val_frac * (n - n_test) as f64);
    (n_test, n_val)
}

/// Deterministic train/val/test partition. The test part is drawn first
/// from the whole corpus, the validation part from the remainder. Each
/// returned list keeps corpus order.
pub fn split(corpus: &Corpus, opts: SplitOptions) -> Result<SplitCorpus> {
    for frac in [opts.test_frac, opts.val_frac] {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(CorpusError::BadFraction(frac));
        }
    }
    let n = corpus.len();
    if n < 10 {
        return Err(CorpusError::TooSmallToSplit(n));
    }
    let (n_test, n_val) = split_sizes(n, opts.test_frac, opts.val_frac);
    if n_test + n_val >= n {
        return Err(CorpusError::EmptyTrain);
    }

    let labels: Vec<u8> = corpus.utterances.iter().map(|u| u.label).collect();
    let part = assign_parts(&labels, n_test, n_val, opts);

    let mut out = SplitCorpus {
        train: Vec::with_capacity(n - n_test - n_val),
        val: Vec::with_capacity(n_val),
        test: Vec::with_capacity(n_test),
        seed: opts.seed,
        test_frac: opts.test_frac,
        val_frac: opts.val_frac,
        stratified: opts.stratify,
    };
    for (u, p) in corpus.utterances.iter().zip(part) {
        let dst = match p {
            0 => &mut out.train,
            1 => &mut out.val,
            _ => &mut out.test,
        };
        dst.push(u.id.clone());
    }
    Ok(out)
}

/// Assigns each item to a part (0 = train, 1 = val, 2 = test) with the
/// given part sizes, optionally stratified by label.
pub(crate) fn assign_parts(labels: &[u8], n_test: usize, n_val: usize, opts: SplitOptions) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // part[i]: 0 = train, 1 = val, 2 = test
    let n = labels.len();
    let mut part = vec![0u8; n];
    if opts.stratify {
        let mut by_label: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, &label) in labels.iter().enumerate() {
            by_label.entry(label).or_default().push(i);
        }
        let counts: Vec<usize> = by_label.values().map(Vec::len).collect();
        let test_quota = apportion(n_test, &counts);
        let rest: Vec<usize> = counts.iter().zip(&test_quota).map(|(c, t)| c - t).collect();
        let val_quota = apportion(n_val, &rest);
        for ((members, tq), vq) in by_label.values_mut().zip(test_quota).zip(val_quota) {
            members.shuffle(&mut rng);
            for &i in &members[..tq] {
                part[i] = 2;
            }
            for &i in &members[tq..tq + vq] {
                part[i] = 1;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &i in &order[..n_test] {
            part[i] = 2;
        }
        for &i in &order[n_test..n_test + n_val] {
            part[i] = 1;
        }
    }
    part
}

/// Largest-remainder apportionment of `total` across groups in proportion
/// to `counts`. Ties on the remainder go to the earlier group.
fn apportion(total: usize, counts: &[usize]) -> Vec<usize> {
    let sum: usize = counts.iter().sum();
    if sum == 0 {
        return vec![0; counts.len()];
    }
    let mut quota: Vec<usize> = counts.iter().map(|&c| c * total / sum).collect();
    let mut assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(counts[i] * total % sum));
    for &i in order.iter().cycle() {
        if assigned >= total {
            break;
        }
        if quota[i] < counts[i] {
            quota[i] += 1;
            assigned += 1;
        }
    }
    quota
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageStats {
    pub hindi: usize,
    pub english: usize,
    pub other: usize,
    /// hi / (hi + en) * 100
    pub hindi_fraction: f64,
}

impl LanguageStats {
    pub fn total(&self) -> usize {
        self.hindi + self.english + self.other
    }
}

pub fn language_stats(corpus: &Corpus) -> Result<LanguageStats> {
    let mut counts = [0usize; 3];
    let mut untagged = 0usize;
    for t in corpus.tokens() {
        match t.lang {
            Some(l) => counts[l.index()] += 1,
            None => untagged += 1,
        }
    }
    if untagged > 0 {
        return Err(CorpusError::Untagged(untagged));
    }
    let marked = counts[0] + counts[1];
    if marked == 0 {
        return Err(CorpusError::NoMarkedTokens);
    }
    Ok(LanguageStats {
        hindi: counts[0],
        english: counts[1],
        other: counts[2],
        hindi_fraction: counts[0] as f64 / marked as f64 * 100.0,
    })
}
