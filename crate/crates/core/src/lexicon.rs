//! Fake/valid term lexicons.
//!
//! A lexicon stores, for every term of one model class, how often it occurs in
//! the fake and the valid training split. A term's fake score is its fake
//! count divided by the total fake count of all terms, and likewise for the
//! valid side, so each side's scores sum to one. Counts are the stored truth;
//! scores are always derived from them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Dataset, Label};
use crate::morph::{analyze_dataset, Analyzer, MorphAnalysis, MorphError, TextOptions};

/// Joins raw form and POS tag in RAW_POS terms. Never produced by the
/// tokenizer, so a pair cannot collide with a surface form.
pub const RAW_POS_SEPARATOR: char = '\u{1}';
/// Joins suffix tags in SUFFIX terms.
pub const SUFFIX_JOINER: &str = "-";

pub const FORMAT_NAME: &str = "fanlex-lexicon";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("empty training split: no {0} terms")]
    EmptySplit(Label),
    #[error("document {id:?} is labeled {found} but was given as {expected} training data")]
    LabelMismatch {
        id: String,
        expected: Label,
        found: Label,
    },
    #[error("cannot merge {a} lexicon with {b} lexicon")]
    Mismatch { a: String, b: String },
    #[error("invalid smoothing {0}; must be finite and non-negative")]
    InvalidSmoothing(f64),
    #[error(transparent)]
    Analysis(#[from] MorphError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported lexicon version {found} (supported: {FORMAT_VERSION})")]
    Version { path: String, found: String },
    #[error("{path}: checksum mismatch (header {expected}, content {actual})")]
    Checksum {
        path: String,
        expected: String,
        actual: String,
    },
    #[error("{path}: inconsistent lexicon: {message}")]
    Inconsistent { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelClass {
    #[serde(rename = "RAW")]
    Raw,
    #[serde(rename = "ROOT")]
    Root,
    #[serde(rename = "RAW_POS")]
    RawPos,
    #[serde(rename = "SUFFIX")]
    Suffix,
}

impl ModelClass {
    pub const ALL: [ModelClass; 4] = [
        ModelClass::Raw,
        ModelClass::Root,
        ModelClass::RawPos,
        ModelClass::Suffix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelClass::Raw => "RAW",
            ModelClass::Root => "ROOT",
            ModelClass::RawPos => "RAW_POS",
            ModelClass::Suffix => "SUFFIX",
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RAW" => Ok(ModelClass::Raw),
            "ROOT" | "STEM" => Ok(ModelClass::Root),
            "RAW_POS" | "RAW+POS" | "RAWPOS" => Ok(ModelClass::RawPos),
            "SUFFIX" | "SUFFIXES" => Ok(ModelClass::Suffix),
            other => Err(format!("unknown model class {other:?}")),
        }
    }
}

/// What one document contributes to a term's count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CountMode {
    /// Number of occurrences in the document.
    #[default]
    TokenFreq,
    /// 1 if the term occurs in the document at all.
    DocPresence,
}

impl FromStr for CountMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "TOKEN_FREQ" => Ok(CountMode::TokenFreq),
            "DOC_PRESENCE" => Ok(CountMode::DocPresence),
            other => Err(format!("unknown count mode {other:?}")),
        }
    }
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::TokenFreq => "TOKEN_FREQ",
            CountMode::DocPresence => "DOC_PRESENCE",
        })
    }
}

/// Contiguous non-empty runs of `suffixes`, shortest first and left to right
/// within a length: for `[a, b, c]` that is `a, b, c, ab, bc, abc`.
pub fn expand_suffix_subsequences<T>(suffixes: &[T]) -> Vec<&[T]> {
    let k = suffixes.len();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for len in 1..=k {
        for start in 0..=k - len {
            out.push(&suffixes[start..start + len]);
        }
    }
    out
}

pub fn raw_pos_term(raw: &str, pos: &str) -> String {
    let mut t = String::with_capacity(raw.len() + pos.len() + 1);
    t.push_str(raw);
    t.push(RAW_POS_SEPARATOR);
    t.push_str(pos);
    t
}

/// Human-readable form of a term: RAW_POS pairs are shown as `raw (pos)`.
pub fn display_term(term: &str) -> String {
    match term.split_once(RAW_POS_SEPARATOR) {
        Some((raw, pos)) => format!("{raw} ({pos})"),
        None => term.to_string(),
    }
}

/// Terms of `class` in token order; repeated terms are repeated.
pub fn extract_terms(analyses: &[MorphAnalysis], class: ModelClass) -> Vec<String> {
    match class {
        ModelClass::Raw => analyses.iter().map(|a| a.raw.clone()).collect(),
        ModelClass::Root => analyses.iter().map(|a| a.root.clone()).collect(),
        ModelClass::RawPos => analyses
            .iter()
            .map(|a| raw_pos_term(&a.raw, &a.pos))
            .collect(),
        ModelClass::Suffix => analyses
            .iter()
            .flat_map(|a| {
                expand_suffix_subsequences(&a.suffixes)
                    .into_iter()
                    .map(|run| run.join(SUFFIX_JOINER))
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TermCounts {
    pub fake: u64,
    pub valid: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermEntry {
    pub term: String,
    pub fake_count: u64,
    pub valid_count: u64,
    pub fake_score: f64,
    pub valid_score: f64,
}

/// Read access to per-term (fake, valid) scores.
pub trait ScoreTable {
    fn model_class(&self) -> ModelClass;
    /// `None` for terms the table has never seen.
    fn term_scores(&self, term: &str) -> Option<(f64, f64)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    model_class: ModelClass,
    count_mode: CountMode,
    entries: BTreeMap<String, TermCounts>,
    fake_total: u64,
    valid_total: u64,
    smoothing: f64,
}

impl Lexicon {
    /// Builds a lexicon from per-term counts. Zero-evidence entries are
    /// dropped; both sides must have a positive total.
    pub fn from_counts(
        model_class: ModelClass,
        count_mode: CountMode,
        counts: impl IntoIterator<Item = (String, TermCounts)>,
    ) -> Result<Self, LexiconError> {
        let entries: BTreeMap<String, TermCounts> = counts
            .into_iter()
            .filter(|(_, c)| c.fake + c.valid > 0)
            .collect();
        let fake_total = entries.values().map(|c| c.fake).sum();
        let valid_total = entries.values().map(|c| c.valid).sum();
        if fake_total == 0 {
            return Err(LexiconError::EmptySplit(Label::Fake));
        }
        if valid_total == 0 {
            return Err(LexiconError::EmptySplit(Label::Valid));
        }
        Ok(Self {
            model_class,
            count_mode,
            entries,
            fake_total,
            valid_total,
            smoothing: 0.0,
        })
    }

    /// Additive smoothing applied to scores (not counts).
    pub fn with_smoothing(mut self, smoothing: f64) -> Result<Self, LexiconError> {
        if !smoothing.is_finite() || smoothing < 0.0 {
            return Err(LexiconError::InvalidSmoothing(smoothing));
        }
        self.smoothing = smoothing;
        Ok(self)
    }

    pub fn model_class(&self) -> ModelClass {
        self.model_class
    }

    pub fn count_mode(&self) -> CountMode {
        self.count_mode
    }

    pub fn fake_total(&self) -> u64 {
        self.fake_total
    }

    pub fn valid_total(&self) -> u64 {
        self.valid_total
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn counts(&self, term: &str) -> Option<TermCounts> {
        self.entries.get(term).copied()
    }

    fn score_pair(&self, c: TermCounts) -> (f64, f64) {
        let vocab = self.entries.len() as f64;
        let a = self.smoothing;
        (
            (c.fake as f64 + a) / (self.fake_total as f64 + a * vocab),
            (c.valid as f64 + a) / (self.valid_total as f64 + a * vocab),
        )
    }

    fn entry(&self, term: &str, c: TermCounts) -> TermEntry {
        let (fake_score, valid_score) = self.score_pair(c);
        TermEntry {
            term: term.to_string(),
            fake_count: c.fake,
            valid_count: c.valid,
            fake_score,
            valid_score,
        }
    }

    pub fn get(&self, term: &str) -> Option<TermEntry> {
        self.entries.get(term).map(|&c| self.entry(term, c))
    }

    /// Entries in term order.
    pub fn iter(&self) -> impl Iterator<Item = TermEntry> + '_ {
        self.entries.iter().map(|(t, &c)| self.entry(t, c))
    }

    pub fn raw_counts(&self) -> impl Iterator<Item = (&str, TermCounts)> {
        self.entries.iter().map(|(t, &c)| (t.as_str(), c))
    }

    /// Entries whose term starts with `prefix`, in term order.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = TermEntry> + 'a {
        self.entries
            .range::<str, _>((
                std::ops::Bound::Included(prefix),
                std::ops::Bound::Unbounded,
            ))
            .take_while(move |(t, _)| t.starts_with(prefix))
            .map(|(t, &c)| self.entry(t, c))
    }
}

impl ScoreTable for Lexicon {
    fn model_class(&self) -> ModelClass {
        self.model_class
    }

    fn term_scores(&self, term: &str) -> Option<(f64, f64)> {
        self.entries.get(term).map(|&c| self.score_pair(c))
    }
}

/// Per-term count contributions of a set of documents.
pub fn count_terms<'a>(
    docs: impl IntoParallelIterator<Item = &'a [MorphAnalysis]>,
    class: ModelClass,
    mode: CountMode,
) -> HashMap<String, u64> {
    docs.into_par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u64>, analyses| {
            let terms = extract_terms(analyses, class);
            match mode {
                CountMode::TokenFreq => {
                    for t in terms {
                        *acc.entry(t).or_default() += 1;
                    }
                }
                CountMode::DocPresence => {
                    let distinct: HashSet<String> = terms.into_iter().collect();
                    for t in distinct {
                        *acc.entry(t).or_default() += 1;
                    }
                }
            }
            acc
        })
        .reduce(HashMap::new, merge_count_maps)
}

fn merge_count_maps(mut a: HashMap<String, u64>, b: HashMap<String, u64>) -> HashMap<String, u64> {
    if a.len() < b.len() {
        return merge_count_maps(b, a);
    }
    for (t, c) in b {
        *a.entry(t).or_default() += c;
    }
    a
}

/// Builds a lexicon from already-analyzed training documents.
pub fn build_from_analyses(
    fake: &[&[MorphAnalysis]],
    valid: &[&[MorphAnalysis]],
    class: ModelClass,
    mode: CountMode,
) -> Result<Lexicon, LexiconError> {
    if fake.is_empty() {
        return Err(LexiconError::EmptySplit(Label::Fake));
    }
    if valid.is_empty() {
        return Err(LexiconError::EmptySplit(Label::Valid));
    }
    let (fake_counts, valid_counts) = rayon::join(
        || count_terms(fake.par_iter().copied(), class, mode),
        || count_terms(valid.par_iter().copied(), class, mode),
    );
    let mut merged: HashMap<String, TermCounts> = HashMap::with_capacity(valid_counts.len());
    for (t, c) in fake_counts {
        merged.entry(t).or_default().fake = c;
    }
    for (t, c) in valid_counts {
        merged.entry(t).or_default().valid = c;
    }
    Lexicon::from_counts(class, mode, merged)
}

fn check_labels(ds: &Dataset, expected: Label) -> Result<(), LexiconError> {
    match ds.documents().iter().find(|d| d.label != expected) {
        Some(d) => Err(LexiconError::LabelMismatch {
            id: d.id.clone(),
            expected,
            found: d.label,
        }),
        None => Ok(()),
    }
}

/// Analyzes both training splits once and builds one lexicon per class.
pub fn build_lexicons(
    fake_train: &Dataset,
    valid_train: &Dataset,
    classes: &[ModelClass],
    mode: CountMode,
    analyzer: &dyn Analyzer,
    text: &TextOptions,
) -> Result<Vec<Lexicon>, LexiconError> {
    check_labels(fake_train, Label::Fake)?;
    check_labels(valid_train, Label::Valid)?;
    if fake_train.is_empty() {
        return Err(LexiconError::EmptySplit(Label::Fake));
    }
    if valid_train.is_empty() {
        return Err(LexiconError::EmptySplit(Label::Valid));
    }
    let fake = analyze_dataset(fake_train, analyzer, text)?;
    let valid = analyze_dataset(valid_train, analyzer, text)?;
    let fake: Vec<&[MorphAnalysis]> = fake.iter().map(|d| d.analyses.as_slice()).collect();
    let valid: Vec<&[MorphAnalysis]> = valid.iter().map(|d| d.analyses.as_slice()).collect();
    classes
        .iter()
        .map(|&class| build_from_analyses(&fake, &valid, class, mode))
        .collect()
}

pub fn build_lexicon(
    fake_train: &Dataset,
    valid_train: &Dataset,
    class: ModelClass,
    mode: CountMode,
    analyzer: &dyn Analyzer,
    text: &TextOptions,
) -> Result<Lexicon, LexiconError> {
    let mut built = build_lexicons(fake_train, valid_train, &[class], mode, analyzer, text)?;
    Ok(built.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconStats {
    pub unique_terms: usize,
    pub common_terms: usize,
    pub only_fake: usize,
    pub only_valid: usize,
}

pub fn lexicon_stats(lex: &Lexicon) -> LexiconStats {
    let mut stats = LexiconStats {
        unique_terms: lex.len(),
        common_terms: 0,
        only_fake: 0,
        only_valid: 0,
    };
    for c in lex.entries.values() {
        match (c.fake > 0, c.valid > 0) {
            (true, true) => stats.common_terms += 1,
            (true, false) => stats.only_fake += 1,
            _ => stats.only_valid += 1,
        }
    }
    stats
}

pub fn render_stats_table(rows: &[(ModelClass, LexiconStats)]) -> String {
    let mut out = String::from("Model\tUnique Term\tCommon Term\tOnly in Fake\tOnly in Valid\n");
    for (class, s) in rows {
        out.push_str(&format!(
            "{class}\t{}\t{}\t{}\t{}\n",
            s.unique_terms, s.common_terms, s.only_fake, s.only_valid
        ));
    }
    out
}

/// Term-wise sum of two lexicons of the same class and count mode.
pub fn merge_lexicons(a: &Lexicon, b: &Lexicon) -> Result<Lexicon, LexiconError> {
    if a.model_class != b.model_class || a.count_mode != b.count_mode {
        return Err(LexiconError::Mismatch {
            a: format!("{}/{}", a.model_class, a.count_mode),
            b: format!("{}/{}", b.model_class, b.count_mode),
        });
    }
    if a.smoothing != b.smoothing {
        return Err(LexiconError::Mismatch {
            a: format!("smoothing {}", a.smoothing),
            b: format!("smoothing {}", b.smoothing),
        });
    }
    let mut entries = a.entries.clone();
    for (t, c) in &b.entries {
        let e = entries.entry(t.clone()).or_default();
        e.fake += c.fake;
        e.valid += c.valid;
    }
    Ok(Lexicon {
        model_class: a.model_class,
        count_mode: a.count_mode,
        entries,
        fake_total: a.fake_total + b.fake_total,
        valid_total: a.valid_total + b.valid_total,
        smoothing: a.smoothing,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: serde_json::Value,
    class: ModelClass,
    count_mode: CountMode,
    fake_total: u64,
    valid_total: u64,
    #[serde(default, skip_serializing_if = "is_zero")]
    smoothing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checksum: Option<String>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryLine {
    t: String,
    fc: u64,
    vc: u64,
}

fn entry_lines(lex: &Lexicon) -> Vec<u8> {
    let mut body = Vec::new();
    for (t, c) in &lex.entries {
        serde_json::to_writer(
            &mut body,
            &EntryLine {
                t: t.clone(),
                fc: c.fake,
                vc: c.valid,
            },
        )
        .expect("in-memory write");
        body.push(b'\n');
    }
    body
}

/// Writes the header line followed by one entry per line in term order. The
/// checksum is SHA-256 over the entry lines exactly as written.
pub fn write_lexicon<W: Write>(lex: &Lexicon, mut out: W) -> std::io::Result<()> {
    let body = entry_lines(lex);
    let header = Header {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION.into(),
        class: lex.model_class,
        count_mode: lex.count_mode,
        fake_total: lex.fake_total,
        valid_total: lex.valid_total,
        smoothing: lex.smoothing,
        entries: Some(lex.entries.len()),
        checksum: Some(hex::encode(Sha256::digest(&body))),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    out.write_all(&body)?;
    out.flush()
}

pub fn save_lexicon(lex: &Lexicon, path: &Path) -> Result<(), LexiconError> {
    let io_err = |source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_lexicon(lex, BufWriter::new(file)).map_err(io_err)
}

/// Reads a lexicon, checking format, version, checksum and that the header
/// totals equal the summed counts.
pub fn read_lexicon<R: BufRead>(reader: R, origin: &str) -> Result<Lexicon, LexiconError> {
    let format_err = |line: usize, message: String| LexiconError::Format {
        path: origin.to_string(),
        line,
        message,
    };
    let io_err = |source| LexiconError::Io {
        path: origin.to_string(),
        source,
    };
    let mut lines = reader.split(b'\n');
    let header_line = lines
        .next()
        .ok_or_else(|| format_err(1, "missing header".into()))?
        .map_err(io_err)?;
    let raw: serde_json::Value = serde_json::from_slice(&header_line)
        .map_err(|e| format_err(1, format!("bad header: {e}")))?;
    if raw.get("format").and_then(|f| f.as_str()) != Some(FORMAT_NAME) {
        return Err(format_err(1, format!("not a {FORMAT_NAME} file")));
    }
    match raw.get("version") {
        Some(v) if v.as_u64() == Some(FORMAT_VERSION as u64) => {}
        other => {
            return Err(LexiconError::Version {
                path: origin.to_string(),
                found: other.map_or_else(|| "<missing>".to_string(), |v| v.to_string()),
            })
        }
    }
    let header: Header =
        serde_json::from_value(raw).map_err(|e| format_err(1, format!("bad header: {e}")))?;

    let mut hasher = Sha256::new();
    let mut entries = BTreeMap::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(io_err)?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        hasher.update(&line);
        hasher.update(b"\n");
        let e: EntryLine = serde_json::from_slice(&line)
            .map_err(|err| format_err(line_no, format!("bad entry: {err}")))?;
        if e.fc + e.vc == 0 {
            return Err(format_err(
                line_no,
                format!("zero-evidence entry {:?}", e.t),
            ));
        }
        if entries
            .insert(
                e.t.clone(),
                TermCounts {
                    fake: e.fc,
                    valid: e.vc,
                },
            )
            .is_some()
        {
            return Err(format_err(line_no, format!("duplicate term {:?}", e.t)));
        }
    }
    if let Some(expected) = header.checksum {
        let actual = hex::encode(hasher.finalize());
        if !expected.eq_ignore_ascii_case(&actual) {
            return Err(LexiconError::Checksum {
                path: origin.to_string(),
                expected,
                actual,
            });
        }
    }
    let inconsistent = |message: String| LexiconError::Inconsistent {
        path: origin.to_string(),
        message,
    };
    if let Some(n) = header.entries {
        if n != entries.len() {
            return Err(inconsistent(format!(
                "header lists {n} entries, file has {}",
                entries.len()
            )));
        }
    }
    let fake_sum: u64 = entries.values().map(|c: &TermCounts| c.fake).sum();
    let valid_sum: u64 = entries.values().map(|c: &TermCounts| c.valid).sum();
    if fake_sum != header.fake_total || valid_sum != header.valid_total {
        return Err(inconsistent(format!(
            "header totals fake={} valid={} but entries sum to fake={fake_sum} valid={valid_sum}",
            header.fake_total, header.valid_total
        )));
    }
    let lex = Lexicon::from_counts(header.class, header.count_mode, entries)
        .map_err(|e| inconsistent(e.to_string()))?;
    lex.with_smoothing(header.smoothing)
        .map_err(|e| inconsistent(e.to_string()))
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| LexiconError::Io {
        path: display.clone(),
        source,
    })?;
    read_lexicon(BufReader::new(file), &display)
}
