//! Rule-based romanized Hindi to Devanagari transliteration.
//!
//! A word is segmented into rule graphemes by greedy longest match and then
//! emitted position by position:
//!
//! * a vowel at the start of the word, or after another vowel, takes its
//!   independent form;
//! * a vowel after a consonant takes its matra (empty for the inherent "a");
//! * a consonant followed by a consonant gets a virama;
//! * a word-final consonant is left bare (schwa deletion), or gets a virama
//!   when schwa deletion is switched off.
//!
//! Whole-word lexicon entries bypass the rules entirely.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use crate::corpus::{Token, TokenKind};

pub const VIRAMA: char = '\u{094D}';

const DEFAULT_RULES: &str = include_str!("../data/translit_rules.tsv");
const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TranslitError {
    #[error("rule file contains no rules")]
    EmptyTable,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate rule {latin:?} on lines {first} and {second}")]
    DuplicateRule { latin: String, first: usize, second: usize },
    #[error("line {line}: output codepoint U+{codepoint:04X} is outside the Devanagari block")]
    NonDevanagari { line: usize, codepoint: u32 },
    #[error("empty word")]
    EmptyWord,
    #[error("non-Latin character {ch:?} at offset {offset} in {word:?}")]
    NonLatin { word: String, offset: usize, ch: char },
    #[error("no rule matches {word:?} at offset {offset}")]
    Unmatchable { word: String, offset: usize },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, TranslitError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleClass {
    Consonant,
    Vowel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransliterationRule {
    pub latin: String,
    pub class: RuleClass,
    pub devanagari_base: String,
    pub devanagari_matra: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransliterationTable {
    /// Sorted by descending latin length, then lexicographically.
    rules: Vec<TransliterationRule>,
    index: HashMap<String, usize>,
    max_len: usize,
    pub lexicon: BTreeMap<String, String>,
    pub schwa_final_deletion: bool,
}

pub fn in_devanagari_block(c: char) -> bool {
    ('\u{0900}'..='\u{097F}').contains(&c)
}

/// True when every character is in the Devanagari block (joiners allowed).
pub fn is_devanagari(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| in_devanagari_block(c) || c == '\u{200C}' || c == '\u{200D}')
}

#[cfg(test)]
thread_local! {
    static RULE_ENGINE_CALLS: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

impl TransliterationTable {
    pub fn new(rules: Vec<TransliterationRule>, lexicon: BTreeMap<String, String>) -> Result<Self> {
        if rules.is_empty() {
            return Err(TranslitError::EmptyTable);
        }
        let mut rules = rules;
        rules.sort_by(|a, b| b.latin.len().cmp(&a.latin.len()).then_with(|| a.latin.cmp(&b.latin)));
        let mut index = HashMap::with_capacity(rules.len());
        for (i, r) in rules.iter().enumerate() {
            if index.insert(r.latin.clone(), i).is_some() {
                return Err(TranslitError::DuplicateRule { latin: r.latin.clone(), first: 0, second: 0 });
            }
        }
        let max_len = rules.iter().map(|r| r.latin.len()).max().unwrap_or(1);
        Ok(TransliterationTable { rules, index, max_len, lexicon, schwa_final_deletion: true })
    }

    /// The shipped rule table and lexicon.
    pub fn bundled() -> Self {
        let rules = parse_rules(DEFAULT_RULES).expect("bundled rule file is valid");
        let lexicon = parse_lexicon(DEFAULT_LEXICON).expect("bundled lexicon is valid");
        TransliterationTable::new(rules, lexicon).expect("bundled table is valid")
    }

    pub fn rules(&self) -> &[TransliterationRule] {
        &self.rules
    }

    pub fn rule(&self, latin: &str) -> Option<&TransliterationRule> {
        self.index.get(latin).map(|&i| &self.rules[i])
    }

    pub fn max_rule_len(&self) -> usize {
        self.max_len
    }

    /// Greedy longest-match segmentation of a lowercase Latin word.
    pub fn segment<'a>(&'a self, word: &str) -> Result<Vec<&'a TransliterationRule>> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < word.len() {
            let longest = self.max_len.min(word.len() - pos);
            let hit = (1..=longest).rev().find_map(|n| self.rule(&word[pos..pos + n]));
            match hit {
                Some(rule) => {
                    pos += rule.latin.len();
                    out.push(rule);
                }
                None => return Err(TranslitError::Unmatchable { word: word.to_string(), offset: pos }),
            }
        }
        Ok(out)
    }

    /// Emits Devanagari for an already segmented word.
    pub fn emit(&self, segments: &[&TransliterationRule]) -> String {
        let mut out = String::new();
        for (i, seg) in segments.iter().enumerate() {
            let prev = i.checked_sub(1).map(|p| segments[p].class);
            let next = segments.get(i + 1).map(|s| s.class);
            match seg.class {
                RuleClass::Vowel => {
                    if prev == Some(RuleClass::Consonant) {
                        out.push_str(&seg.devanagari_matra);
                    } else {
                        out.push_str(&seg.devanagari_base);
                    }
                }
                RuleClass::Consonant => {
                    out.push_str(&seg.devanagari_base);
                    match next {
                        Some(RuleClass::Consonant) => out.push(VIRAMA),
                        Some(RuleClass::Vowel) => {}
                        None if !self.schwa_final_deletion => out.push(VIRAMA),
                        None => {}
                    }
                }
            }
        }
        out
    }

    fn apply_rules(&self, word: &str) -> Result<String> {
        #[cfg(test)]
        RULE_ENGINE_CALLS.with(|c| c.set(c.get() + 1));
        let segments = self.segment(word)?;
        Ok(self.emit(&segments))
    }

    /// Transliterates one word. Input is lowercased first; lexicon entries
    /// take precedence over the rules.
    pub fn transliterate_word(&self, word: &str) -> Result<String> {
        if word.is_empty() {
            return Err(TranslitError::EmptyWord);
        }
        let lower = word.to_lowercase();
        if let Some((offset, ch)) = lower.char_indices().find(|(_, c)| !c.is_ascii_lowercase()) {
            return Err(TranslitError::NonLatin { word: word.to_string(), offset, ch });
        }
        if let Some(hit) = self.lexicon.get(&lower) {
            return Ok(hit.clone());
        }
        self.apply_rules(&lower)
    }

    /// Transliterates a `Word` token; other kinds and tokens already in
    /// Devanagari are returned unchanged. Apostrophes are dropped before
    /// transliteration since they carry no sound.
    pub fn transliterate_token(&self, token: &Token) -> Result<Token> {
        if token.kind != TokenKind::Word || is_devanagari(&token.text) {
            return Ok(token.clone());
        }
        let cleaned: String = token.text.chars().filter(|c| !matches!(c, '\'' | '\u{2019}')).collect();
        let text = self.transliterate_word(if cleaned.is_empty() { &token.text } else { &cleaned })?;
        Ok(Token { text, lang: token.lang, kind: token.kind })
    }
}

fn check_block(s: &str, line: usize) -> Result<()> {
    match s.chars().find(|&c| !in_devanagari_block(c)) {
        Some(c) => Err(TranslitError::NonDevanagari { line, codepoint: c as u32 }),
        None => Ok(()),
    }
}

fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim_end_matches('\r');
        let content = l.split_once('#').map_or(l, |(before, _)| before);
        if content.trim().is_empty() {
            None
        } else {
            Some((i + 1, content.trim_end_matches([' ']).trim_start()))
        }
    })
}

/// Parses the rule file format: `latin TAB class TAB base TAB matra`.
pub fn parse_rules(src: &str) -> Result<Vec<TransliterationRule>> {
    let mut rules = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (line, content) in content_lines(src) {
        let fields: Vec<&str> = content.split('\t').map(str::trim).collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(TranslitError::Malformed { line, message: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()) });
        }
        let latin = fields[0];
        if latin.is_empty() || latin.len() > 4 || !latin.chars().all(|c| c.is_ascii_lowercase()) {
            return Err(TranslitError::Malformed { line, message: format!("latin grapheme {latin:?} must be 1-4 lowercase letters") });
        }
        let class = match fields[1] {
            "C" => RuleClass::Consonant,
            "V" => RuleClass::Vowel,
            other => return Err(TranslitError::Malformed { line, message: format!("class must be C or V, got {other:?}") }),
        };
        let base = fields[2];
        if base.is_empty() {
            return Err(TranslitError::Malformed { line, message: "empty Devanagari base".into() });
        }
        let matra = match fields.get(3).copied() {
            None | Some("-") | Some("") => "",
            Some(m) => m,
        };
        if class == RuleClass::Consonant && !matra.is_empty() {
            return Err(TranslitError::Malformed { line, message: "consonant rules cannot carry a matra".into() });
        }
        check_block(base, line)?;
        check_block(matra, line)?;
        if let Some(&first) = first_seen.get(latin) {
            return Err(TranslitError::DuplicateRule { latin: latin.to_string(), first, second: line });
        }
        first_seen.insert(latin.to_string(), line);
        rules.push(TransliterationRule {
            latin: latin.to_string(),
            class,
            devanagari_base: base.to_string(),
            devanagari_matra: matra.to_string(),
        });
    }
    if rules.is_empty() {
        return Err(TranslitError::EmptyTable);
    }
    Ok(rules)
}

/// Parses the lexicon format: `latin TAB devanagari`.
pub fn parse_lexicon(src: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (line, content) in content_lines(src) {
        let Some((latin, deva)) = content.split_once('\t') else {
            return Err(TranslitError::Malformed { line, message: "expected latin<TAB>devanagari".into() });
        };
        let (latin, deva) = (latin.trim().to_lowercase(), deva.trim());
        if latin.is_empty() || !latin.chars().all(|c| c.is_ascii_lowercase()) || deva.is_empty() {
            return Err(TranslitError::Malformed { line, message: format!("bad lexicon entry {latin:?}") });
        }
        check_block(deva, line)?;
        out.insert(latin, deva.to_string());
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| TranslitError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// Loads a rule file and an optional lexicon file.
pub fn load_table(rules_path: &Path, lexicon_path: Option<&Path>) -> Result<TransliterationTable> {
    let rules = parse_rules(&read(rules_path)?)?;
    let lexicon = match lexicon_path {
        Some(p) => parse_lexicon(&read(p)?)?,
        None => BTreeMap::new(),
    };
    TransliterationTable::new(rules, lexicon)
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleClass::Consonant => "C",
            RuleClass::Vowel => "V",
        })
    }
}
