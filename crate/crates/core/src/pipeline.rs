//! Conversion of a tagged code-switched corpus into one of three target
//! representations, and export of converted splits.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{join_tokens, record_tokens, Corpus, LanguageTag, SplitCorpus, Task, Token, TokenKind};
use crate::providers::{ProviderClient, ProviderError, Request, Service};
use crate::translit::TransliterationTable;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("corpus is empty")]
    Empty,
    #[error("utterance {id} has an untagged token at position {index}")]
    Untagged { id: String, index: usize },
    #[error("every utterance was excluded during conversion")]
    NothingConverted,
    #[error("translation provider failed: {0}")]
    Provider(#[from] ProviderError),
    #[error("split references id {0} that is neither converted nor excluded")]
    UnknownId(String),
    #[error("converted utterance {0} is not assigned to any split")]
    Unassigned(String),
    #[error("test split is empty")]
    EmptyTest,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad converted corpus file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConversionVariant {
    #[serde(rename = "hindi")]
    HindiTarget,
    #[serde(rename = "english")]
    EnglishTarget,
    #[serde(rename = "crosslingual")]
    CrossLingual,
}

impl ConversionVariant {
    pub const ALL: [ConversionVariant; 3] =
        [ConversionVariant::HindiTarget, ConversionVariant::EnglishTarget, ConversionVariant::CrossLingual];

    pub fn as_str(self) -> &'static str {
        match self {
            ConversionVariant::HindiTarget => "hindi",
            ConversionVariant::EnglishTarget => "english",
            ConversionVariant::CrossLingual => "crosslingual",
        }
    }

    /// Whether conversion calls a translation provider.
    pub fn needs_provider(self) -> bool {
        self == ConversionVariant::EnglishTarget
    }
}

impl fmt::Display for ConversionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConversionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "hindi" | "hinditarget" | "hi" => Ok(ConversionVariant::HindiTarget),
            "english" | "englishtarget" | "en" => Ok(ConversionVariant::EnglishTarget),
            "crosslingual" | "cross" | "xl" => Ok(ConversionVariant::CrossLingual),
            _ => Err(format!("unknown variant {s:?} (expected hindi, english or crosslingual)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvertedText {
    Tokens(Vec<ConvertedToken>),
    Sentence(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertedToken {
    pub t: String,
    pub l: Option<LanguageTag>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Positions of tokens that were transliterated.
    pub transliterated: Vec<usize>,
    /// Number of translation calls whose output this utterance holds.
    pub translated: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertedUtterance {
    pub id: String,
    pub label: u8,
    pub text: ConvertedText,
    pub provenance: Provenance,
}

impl ConvertedUtterance {
    /// Flat text: tokens joined by single spaces, or the sentence.
    pub fn flat_text(&self) -> String {
        match &self.text {
            ConvertedText::Tokens(ts) => join_tokens(ts.iter().map(|t| t.t.as_str())),
            ConvertedText::Sentence(s) => s.clone(),
        }
    }

    pub fn token_count(&self) -> Option<usize> {
        match &self.text {
            ConvertedText::Tokens(ts) => Some(ts.len()),
            ConvertedText::Sentence(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvertedCorpus {
    pub base: String,
    pub task: Task,
    pub variant: ConversionVariant,
    pub utterances: Vec<ConvertedUtterance>,
    pub excluded: Vec<Exclusion>,
}

impl ConvertedCorpus {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("converted corpus serializes")
    }

    pub fn from_json(src: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(src).map_err(|e| PipelineError::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        crate::io::write_atomic(path, self.to_json().as_bytes()).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let src = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&src)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io { path: path.display().to_string(), source }
}

fn check_tagged(corpus: &Corpus) -> Result<(), PipelineError> {
    if corpus.is_empty() {
        return Err(PipelineError::Empty);
    }
    for u in &corpus.utterances {
        if let Some(index) = u.tokens.iter().position(|t| t.lang.is_none()) {
            return Err(PipelineError::Untagged { id: u.id.clone(), index });
        }
    }
    Ok(())
}

/// Transliterates word tokens whose tag satisfies `select`.
fn transliterate_selected(
    corpus: &Corpus,
    table: &TransliterationTable,
    variant: ConversionVariant,
    select: impl Fn(LanguageTag) -> bool,
) -> Result<ConvertedCorpus, PipelineError> {
    check_tagged(corpus)?;
    let mut utterances = Vec::with_capacity(corpus.len());
    let mut excluded = Vec::new();
    'utt: for u in &corpus.utterances {
        let mut tokens: Vec<Token> = Vec::with_capacity(u.tokens.len());
        let mut prov = Provenance::default();
        for (i, tok) in u.tokens.iter().enumerate() {
            let marked = tok.kind == TokenKind::Word && tok.lang.is_some_and(&select);
            if !marked {
                tokens.push(tok.clone());
                continue;
            }
            match table.transliterate_token(tok) {
                Ok(t) => {
                    if t.text != tok.text {
                        prov.transliterated.push(i);
                    }
                    tokens.push(t);
                }
                Err(e) => {
                    log::debug!("excluding {}: token {i}: {e}", u.id);
                    excluded.push(Exclusion { id: u.id.clone(), reason: format!("token {i} {:?}: {e}", tok.text) });
                    continue 'utt;
                }
            }
        }
        let text = ConvertedText::Tokens(record_tokens(&tokens).into_iter().map(|r| ConvertedToken { t: r.t, l: r.l }).collect());
        utterances.push(ConvertedUtterance { id: u.id.clone(), label: u.label, text, provenance: prov });
    }
    Ok(ConvertedCorpus { base: corpus.name.clone(), task: corpus.task, variant, utterances, excluded })
}

/// Transliterates every Hindi- or English-tagged word into Devanagari.
pub fn convert_hindi(corpus: &Corpus, table: &TransliterationTable) -> Result<ConvertedCorpus, PipelineError> {
    transliterate_selected(corpus, table, ConversionVariant::HindiTarget, |l| l != LanguageTag::Other)
}

/// Transliterates only Hindi-tagged words; everything else is untouched.
pub fn convert_crosslingual(corpus: &Corpus, table: &TransliterationTable) -> Result<ConvertedCorpus, PipelineError> {
    transliterate_selected(corpus, table, ConversionVariant::CrossLingual, |l| l == LanguageTag::Hindi)
}

/// Hindi-target conversion followed by sentence translation into English.
/// Sentences are sent in corpus order.
pub fn convert_english(
    corpus: &Corpus,
    table: &TransliterationTable,
    client: &ProviderClient<'_>,
) -> Result<ConvertedCorpus, PipelineError> {
    let hindi = convert_hindi(corpus, table)?;
    if hindi.is_empty() {
        return Err(PipelineError::NothingConverted);
    }
    let sentences: Vec<String> = hindi.utterances.iter().map(ConvertedUtterance::flat_text).collect();
    let request = Request { service: Service::Translate, source: "hi", target: "en" };
    let translated = client.run_partial(&request, &sentences)?;

    let mut utterances = Vec::with_capacity(hindi.len());
    let mut excluded = hindi.excluded;
    for (u, out) in hindi.utterances.into_iter().zip(translated) {
        match out {
            Some(sentence) => utterances.push(ConvertedUtterance {
                id: u.id,
                label: u.label,
                text: ConvertedText::Sentence(sentence),
                provenance: Provenance { transliterated: u.provenance.transliterated, translated: 1 },
            }),
            None => excluded.push(Exclusion { id: u.id, reason: "translation failed after retries".into() }),
        }
    }
    Ok(ConvertedCorpus {
        base: hindi.base,
        task: hindi.task,
        variant: ConversionVariant::EnglishTarget,
        utterances,
        excluded,
    })
}

/// Dispatches on `variant`. `client` is required for the English target.
pub fn convert(
    corpus: &Corpus,
    variant: ConversionVariant,
    table: &TransliterationTable,
    client: Option<&ProviderClient<'_>>,
) -> Result<ConvertedCorpus, PipelineError> {
    match variant {
        ConversionVariant::HindiTarget => convert_hindi(corpus, table),
        ConversionVariant::CrossLingual => convert_crosslingual(corpus, table),
        ConversionVariant::EnglishTarget => {
            let client = client.ok_or_else(|| {
                PipelineError::Provider(ProviderError::Config("english variant needs a translation provider".into()))
            })?;
            convert_english(corpus, table, client)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Split ids skipped because conversion excluded them.
    pub excluded: usize,
}

#[derive(Serialize)]
struct ExportRecord<'a> {
    id: &'a str,
    label: u8,
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<&'a [ConvertedToken]>,
}

pub fn export_record_line(u: &ConvertedUtterance) -> String {
    let tokens = match &u.text {
        ConvertedText::Tokens(ts) => Some(ts.as_slice()),
        ConvertedText::Sentence(_) => None,
    };
    let rec = ExportRecord { id: &u.id, label: u.label, text: u.flat_text(), tokens };
    serde_json::to_string(&rec).expect("export record serializes")
}

pub fn export_paths(out_dir: &Path) -> [PathBuf; 3] {
    ["train", "val", "test"].map(|s| out_dir.join(format!("{s}.jsonl")))
}

/// Writes `train.jsonl`, `val.jsonl` and `test.jsonl` under `out_dir`,
/// each listing utterances in split order.
pub fn export_records(cc: &ConvertedCorpus, split: &SplitCorpus, out_dir: &Path) -> Result<ExportCounts, PipelineError> {
    if split.test.is_empty() {
        return Err(PipelineError::EmptyTest);
    }
    let by_id: HashMap<&str, &ConvertedUtterance> = cc.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
    let excluded: HashSet<&str> = cc.excluded.iter().map(|e| e.id.as_str()).collect();
    let assigned: HashSet<&str> = split.train.iter().chain(&split.val).chain(&split.test).map(String::as_str).collect();
    if let Some(u) = cc.utterances.iter().find(|u| !assigned.contains(u.id.as_str())) {
        return Err(PipelineError::Unassigned(u.id.clone()));
    }

    let mut counts = ExportCounts::default();
    let mut bodies: Vec<String> = Vec::with_capacity(3);
    for ids in [&split.train, &split.val, &split.test] {
        let mut body = String::new();
        for id in ids {
            match by_id.get(id.as_str()) {
                Some(u) => {
                    body.push_str(&export_record_line(u));
                    body.push('\n');
                }
                None if excluded.contains(id.as_str()) => counts.excluded += 1,
                None => return Err(PipelineError::UnknownId(id.clone())),
            }
        }
        bodies.push(body);
    }
    let lines = |b: &String| b.lines().count();
    (counts.train, counts.val, counts.test) = (lines(&bodies[0]), lines(&bodies[1]), lines(&bodies[2]));
    if counts.test == 0 {
        return Err(PipelineError::EmptyTest);
    }
    for (path, body) in export_paths(out_dir).iter().zip(&bodies) {
        crate::io::write_atomic(path, body.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    Ok(counts)
}
