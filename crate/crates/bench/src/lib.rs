//! Workloads shared by the benchmarks.

use codemix::corpus::SplitOptions;
use codemix::models::{synthetic, TextSplits};
use codemix::TransliterationTable;

/// Romanized words built from every rule of the bundled table, cycling
/// through rule combinations of two to four pieces.
pub fn romanized_words(n: usize) -> Vec<String> {
    let table = TransliterationTable::bundled();
    let latin: Vec<&str> = table.rules().iter().map(|r| r.latin.as_str()).collect();
    (0..n)
        .map(|i| {
            let pieces = 2 + i % 3;
            (0..pieces).map(|k| latin[(i * 7 + k * 13) % latin.len()]).collect()
        })
        .collect()
}

/// Separable two-class corpus with `per_class` items per class, split with
/// the default options.
pub fn separable_splits(per_class: usize) -> TextSplits {
    TextSplits::from_items(synthetic::separable_corpus(per_class, 1), SplitOptions::default())
}
