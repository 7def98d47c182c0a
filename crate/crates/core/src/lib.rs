//! Lexicon-based fake news detection.
//!
//! Documents are tokenized and analyzed into (raw, root, POS, suffix) tuples,
//! four kinds of terms are extracted from them (RAW, ROOT, RAW_POS, SUFFIX),
//! and per-class lexicons store how often each term occurs in fake and in
//! valid training news. A document is labeled by comparing the summed fake
//! and valid scores of its terms.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod lexicon;
pub mod morph;
pub mod scorer;

pub use config::RunConfig;
pub use corpus::{load_corpus, Dataset, Document, Label};
pub use eval::{confusion, cross_validate, evaluate_models, metrics, ConfusionMatrix, Metrics};
pub use lexicon::{build_lexicon, load_lexicon, save_lexicon, CountMode, Lexicon, ModelClass};
pub use morph::{tokenize, AnalyzerRuleTable, Locale, MorphAnalysis, SuffixStripper};
pub use scorer::{score_document, DocumentScore, TermSetMode};
