//! Conversion of English-Hindi code-switched text into its constituent
//! languages, plus native baseline classifiers and an evaluation harness.

pub mod bag;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod io;
pub mod langid;
pub mod models;
pub mod pipeline;
pub mod providers;
pub mod translit;

pub use corpus::{Corpus, LanguageStats, LanguageTag, SplitCorpus, Task, Token, TokenKind, Utterance};
pub use langid::{LidConfig, LidModel};
pub use models::{ModelKind, ModelSpec, TrainedModel};
pub use pipeline::{ConversionVariant, ConvertedCorpus};
pub use translit::TransliterationTable;
