//! Deterministic offline providers.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{CallError, Provider, Request};

/// Returns every input unchanged.
#[derive(Debug, Default)]
pub struct EchoProvider {
    calls: AtomicUsize,
    items: AtomicUsize,
    batch_sizes: Mutex<Vec<usize>>,
}

impl EchoProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn items_seen(&self) -> usize {
        self.items.load(Ordering::SeqCst)
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batch_sizes.lock().expect("mock poisoned").clone()
    }
}

impl Provider for EchoProvider {
    fn kind(&self) -> &str {
        "mock-echo"
    }

    fn call(&self, _: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, CallError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.items.fetch_add(inputs.len(), Ordering::SeqCst);
        self.batch_sizes.lock().expect("mock poisoned").push(inputs.len());
        Ok(inputs.iter().cloned().map(Some).collect())
    }
}

/// Lookup-table provider. A full-input match wins; otherwise, unless
/// strict, each whitespace-separated word is looked up and unknown words
/// pass through unchanged. In strict mode a miss is an item failure.
#[derive(Debug, Default)]
pub struct DictionaryProvider {
    table: HashMap<String, String>,
    strict: bool,
    calls: AtomicUsize,
}

impl DictionaryProvider {
    pub fn new<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        DictionaryProvider {
            table: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
            strict: false,
            calls: AtomicUsize::new(0),
        }
    }

    /// Parses `source TAB target` lines; `#` starts a comment line.
    pub fn parse(content: &str) -> Result<Self, String> {
        let mut pairs = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('\t').ok_or_else(|| format!("line {}: expected source<TAB>target", i + 1))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self::new(pairs))
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let content = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&content)
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn lookup(&self, input: &str) -> Option<String> {
        if let Some(v) = self.table.get(input.trim()) {
            return Some(v.clone());
        }
        if self.strict {
            return None;
        }
        let words: Vec<&str> = input
            .split_whitespace()
            .map(|w| self.table.get(w).map(String::as_str).unwrap_or(w))
            .collect();
        Some(words.join(" "))
    }
}

impl Provider for DictionaryProvider {
    fn kind(&self) -> &str {
        "mock-dictionary"
    }

    fn call(&self, _: &Request<'_>, inputs: &[String]) -> Result<Vec<Option<String>>, CallError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(inputs.iter().map(|s| self.lookup(s)).collect())
    }
}
