//! Document scoring: sum the fake and valid scores of a document's terms and
//! label it VALID only when the valid sum is strictly larger.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, Document, Label};
use crate::lexicon::{display_term, extract_terms, Lexicon, ModelClass, ScoreTable};
use crate::morph::{analyze_document, Analyzer, MorphAnalysis, MorphError, TextOptions};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("more than one {0} lexicon supplied")]
    DuplicateClass(ModelClass),
    #[error("explain needs top_n >= 1")]
    ZeroTopN,
    #[error(transparent)]
    Analysis(#[from] MorphError),
}

/// Whether a term repeated inside a document counts once or per occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TermSetMode {
    #[default]
    Distinct,
    Multiset,
}

impl FromStr for TermSetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DISTINCT" => Ok(TermSetMode::Distinct),
            "MULTISET" => Ok(TermSetMode::Multiset),
            other => Err(format!("unknown term set mode {other:?}")),
        }
    }
}

impl fmt::Display for TermSetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TermSetMode::Distinct => "DISTINCT",
            TermSetMode::Multiset => "MULTISET",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub fake_score: f64,
    pub valid_score: f64,
    pub label: Label,
    pub class: ModelClass,
    pub unknown_terms: usize,
}

/// VALID only on a strict win; ties, including two zeros, are FAKE.
pub fn label_for(fake_score: f64, valid_score: f64) -> Label {
    if valid_score > fake_score {
        Label::Valid
    } else {
        Label::Fake
    }
}

/// Scores a term list. In DISTINCT mode terms are summed once each in sorted
/// order; in MULTISET mode every occurrence is summed in document order.
pub fn score_terms<T: ScoreTable + ?Sized>(
    terms: &[String],
    table: &T,
    mode: TermSetMode,
) -> DocumentScore {
    let (mut fake, mut valid, mut unknown) = (0.0, 0.0, 0);
    let mut add = |t: &str| match table.term_scores(t) {
        Some((f, v)) => {
            fake += f;
            valid += v;
        }
        None => unknown += 1,
    };
    match mode {
        TermSetMode::Distinct => {
            let mut distinct: Vec<&str> = terms.iter().map(String::as_str).collect();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.into_iter().for_each(&mut add);
        }
        TermSetMode::Multiset => terms.iter().for_each(|t| add(t)),
    }
    DocumentScore {
        fake_score: fake,
        valid_score: valid,
        label: label_for(fake, valid),
        class: table.model_class(),
        unknown_terms: unknown,
    }
}

pub fn score_analyses<T: ScoreTable + ?Sized>(
    analyses: &[MorphAnalysis],
    table: &T,
    mode: TermSetMode,
) -> DocumentScore {
    score_terms(&extract_terms(analyses, table.model_class()), table, mode)
}

pub fn score_document<T: ScoreTable + ?Sized>(
    doc: &Document,
    table: &T,
    mode: TermSetMode,
    analyzer: &dyn Analyzer,
    text: &TextOptions,
) -> Result<DocumentScore, ScoreError> {
    let analyses = analyze_document(doc, analyzer, text)?;
    Ok(score_analyses(&analyses, table, mode))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermContribution {
    pub term: String,
    pub fake_score: f64,
    pub valid_score: f64,
    pub delta: f64,
}

/// The document's known terms ranked by |fake - valid|, largest first, ties
/// in term order.
pub fn explain_terms<T: ScoreTable + ?Sized>(
    terms: &[String],
    table: &T,
    top_n: usize,
) -> Result<Vec<TermContribution>, ScoreError> {
    if top_n == 0 {
        return Err(ScoreError::ZeroTopN);
    }
    let distinct: HashSet<&str> = terms.iter().map(String::as_str).collect();
    let mut out: Vec<TermContribution> = distinct
        .into_iter()
        .filter_map(|t| {
            table.term_scores(t).map(|(f, v)| TermContribution {
                term: t.to_string(),
                fake_score: f,
                valid_score: v,
                delta: f - v,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then_with(|| a.term.cmp(&b.term))
    });
    out.truncate(top_n);
    Ok(out)
}

pub fn explain(
    doc: &Document,
    lex: &Lexicon,
    top_n: usize,
    analyzer: &dyn Analyzer,
    text: &TextOptions,
) -> Result<Vec<TermContribution>, ScoreError> {
    let analyses = analyze_document(doc, analyzer, text)?;
    explain_terms(&extract_terms(&analyses, lex.model_class()), lex, top_n)
}

/// Scores of one document under each lexicon, in lexicon order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDocument {
    pub id: String,
    pub scores: Vec<DocumentScore>,
}

pub fn check_distinct_classes(lexicons: &[Lexicon]) -> Result<(), ScoreError> {
    let mut seen = HashSet::new();
    for lex in lexicons {
        if !seen.insert(lex.model_class()) {
            return Err(ScoreError::DuplicateClass(lex.model_class()));
        }
    }
    Ok(())
}

/// Scores every document against every lexicon. Documents are analyzed once
/// and processed in parallel; output keeps document order.
pub fn score_batch(
    docs: &Dataset,
    lexicons: &[Lexicon],
    mode: TermSetMode,
    analyzer: &dyn Analyzer,
    text: &TextOptions,
) -> Result<Vec<ScoredDocument>, ScoreError> {
    check_distinct_classes(lexicons)?;
    docs.documents()
        .par_iter()
        .map(|doc| {
            let analyses = analyze_document(doc, analyzer, text)?;
            Ok(ScoredDocument {
                id: doc.id.clone(),
                scores: lexicons
                    .iter()
                    .map(|lex| score_analyses(&analyses, lex, mode))
                    .collect(),
            })
        })
        .collect()
}

/// One line of score output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub class: ModelClass,
    pub fake_score: f64,
    pub valid_score: f64,
    pub label: Label,
    pub unknown_terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain: Option<Vec<TermContribution>>,
}

impl ScoreRecord {
    pub fn new(id: &str, s: &DocumentScore) -> Self {
        Self {
            id: id.to_string(),
            class: s.class,
            fake_score: s.fake_score,
            valid_score: s.valid_score,
            label: s.label,
            unknown_terms: s.unknown_terms,
            explain: None,
        }
    }
}

/// Text rendering of contributions with scores multiplied by `scale`.
pub fn render_contributions(contribs: &[TermContribution], scale: f64) -> String {
    let mut out = String::from("Term\tFake score\tValid score\tDelta\n");
    for c in contribs {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\n",
            display_term(&c.term),
            c.fake_score * scale,
            c.valid_score * scale,
            c.delta * scale
        ));
    }
    out
}
