//! Labeled document collections: JSONL ingestion, corpus and verification
//! statistics, and stratified cross-validation folds.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::morph::{is_numeral, normalize, tokenize, Locale, MorphAnalysis, TextOptions};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate document id {id:?}")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("no sentences in dataset")]
    NoSentences,
    #[error("{0} word list is empty")]
    EmptyWordList(&'static str),
    #[error("folds must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("label {label} has {count} documents, fewer than {k} folds")]
    TooFewDocuments {
        label: Label,
        count: usize,
        k: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Fake,
    Valid,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Fake, Label::Valid];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "FAKE",
            Label::Valid => "VALID",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FAKE" => Ok(Label::Fake),
            "VALID" => Ok(Label::Valid),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Split {
    Train,
    Test,
    #[default]
    Unsplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyses: Option<Vec<MorphAnalysis>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        Self {
            id: id.into(),
            title: None,
            text: text.into(),
            label,
            source: None,
            analyses: None,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::InvalidDocument("empty id".into()));
        }
        if let Some(analyses) = &self.analyses {
            for a in analyses {
                a.validate().map_err(|e| {
                    CorpusError::InvalidDocument(format!("document {:?}: {e}", self.id))
                })?;
            }
        }
        Ok(())
    }

    /// Body text, prefixed by the title as its own sentence when asked.
    pub fn full_text(&self, include_title: bool) -> String {
        match &self.title {
            Some(title) if include_title && !title.trim().is_empty() => {
                let title = title.trim_end();
                let sep = if title.ends_with(TERMINALS) {
                    " "
                } else {
                    ". "
                };
                format!("{title}{sep}{}", self.text)
            }
            _ => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    documents: Vec<Document>,
    split: Split,
}

impl Dataset {
    pub fn new(documents: Vec<Document>, split: Split) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            doc.validate()?;
            if !seen.insert(doc.id.as_str()) {
                return Err(CorpusError::InvalidDocument(format!(
                    "duplicate document id {:?}",
                    doc.id
                )));
            }
        }
        Ok(Self { documents, split })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Documents carrying `label`, in order.
    pub fn with_label(&self, label: Label) -> Dataset {
        Dataset {
            documents: self
                .documents
                .iter()
                .filter(|d| d.label == label)
                .cloned()
                .collect(),
            split: self.split,
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }
}

/// Reads a JSONL corpus. Blank lines are skipped; line numbers in errors are
/// 1-based physical lines.
pub fn read_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Dataset, CorpusError> {
    let mut documents = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: origin.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| CorpusError::Parse {
            path: origin.to_string(),
            line: line_no,
            message,
        };
        let doc: Document = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        doc.validate().map_err(|e| parse_err(e.to_string()))?;
        if seen.insert(doc.id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateId {
                path: origin.to_string(),
                line: line_no,
                id: doc.id,
            });
        }
        documents.push(doc);
    }
    Ok(Dataset {
        documents,
        split: Split::Unsplit,
    })
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Dataset, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    match format {
        CorpusFormat::Jsonl => read_corpus(BufReader::new(file), &display),
    }
}

/// One JSON object per line, fields in schema order.
pub fn write_corpus<W: Write>(ds: &Dataset, mut out: W) -> std::io::Result<()> {
    for doc in ds.documents() {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count_by_label: BTreeMap<Label, usize>,
    pub mean_tokens_per_doc: f64,
    pub mean_sentences_per_doc: f64,
    pub token_total: usize,
    pub sentence_total: usize,
}

impl CorpusStats {
    pub fn doc_count(&self) -> usize {
        self.doc_count_by_label.values().sum()
    }
}

pub fn corpus_stats(ds: &Dataset, include_title: bool) -> CorpusStats {
    let splitter = SentenceSplitter::default();
    let mut by_label: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    let mut token_total = 0;
    let mut sentence_total = 0;
    for doc in ds.documents() {
        *by_label.entry(doc.label).or_default() += 1;
        let text = doc.full_text(include_title);
        token_total += tokenize(&text).len();
        sentence_total += splitter.split(&text).len();
    }
    let n = ds.len();
    let mean = |total: usize| if n == 0 { 0.0 } else { total as f64 / n as f64 };
    CorpusStats {
        doc_count_by_label: by_label,
        mean_tokens_per_doc: mean(token_total),
        mean_sentences_per_doc: mean(sentence_total),
        token_total,
        sentence_total,
    }
}

const TERMINALS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '\'', '”', '’', ')', ']', '»'];

/// Abbreviations that end in a period without ending a sentence.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "dr.", "prof.", "doç.", "yrd.", "av.", "op.", "uzm.", "sn.", "bkz.", "vb.", "vs.", "vd.",
    "örn.", "no.", "nu.", "cad.", "sok.", "mah.", "apt.", "st.", "mr.", "mrs.", "ms.", "jr.",
    "e.g.", "i.e.", "etc.",
];

/// Splits on terminal punctuation followed by whitespace or end of text.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::new(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    pub fn new<'a>(abbreviations: impl IntoIterator<Item = &'a str>) -> Self {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| lowercase_generic(a.trim()))
                .collect(),
        }
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            if !TERMINALS.contains(&c) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < chars.len()
                && (TERMINALS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1))
            {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
            if at_boundary
                && !(c == '.' && j == i + 1 && self.ends_with_abbreviation(&text[start..end]))
            {
                push_sentence(&mut sentences, &text[start..end]);
                start = end;
            }
            i = j;
        }
        push_sentence(&mut sentences, &text[start..]);
        sentences
    }

    fn ends_with_abbreviation(&self, candidate: &str) -> bool {
        candidate
            .split_whitespace()
            .next_back()
            .is_some_and(|w| self.abbreviations.contains(&lowercase_generic(w)))
    }
}

fn lowercase_generic(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

fn push_sentence(out: &mut Vec<String>, raw: &str) {
    let s = raw.trim();
    if s.chars().any(char::is_alphanumeric) {
        out.push(s.to_string());
    }
}

pub fn split_sentences(text: &str) -> Vec<String> {
    SentenceSplitter::default().split(text)
}

/// A normalized word list; entries may be multi-word phrases.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    words: HashSet<String>,
    phrases: Vec<Vec<String>>,
}

impl WordList {
    pub fn new<'a>(entries: impl IntoIterator<Item = &'a str>, locale: Locale) -> Self {
        let mut list = WordList::default();
        let mut seen = HashSet::new();
        for entry in entries {
            let tokens: Vec<String> = tokenize(entry)
                .iter()
                .map(|t| normalize(t, locale))
                .filter(|t| !t.is_empty())
                .collect();
            match tokens.len() {
                0 => {}
                1 => {
                    list.words.extend(tokens);
                }
                _ => {
                    if seen.insert(tokens.clone()) {
                        list.phrases.push(tokens);
                    }
                }
            }
        }
        // Longest phrases first so greedy matching prefers them.
        list.phrases
            .sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        list
    }

    /// One entry per line; blank lines and `#` comments are ignored.
    pub fn load(path: &Path, locale: Locale) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
            locale,
        ))
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty() && self.phrases.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.len() + self.phrases.len()
    }

    /// Length of the longest entry matching at `tokens[at..]`.
    fn match_at(&self, tokens: &[String], at: usize) -> Option<usize> {
        let rest = &tokens[at..];
        self.phrases
            .iter()
            .find(|p| rest.starts_with(p))
            .map(Vec::len)
            .or_else(|| self.words.contains(&rest[0]).then_some(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub slang_per_sentence: f64,
    pub misspelling_per_sentence: f64,
    pub sentences: usize,
    pub slang_hits: usize,
    pub misspellings: usize,
}

/// Mean slang occurrences and out-of-dictionary tokens per sentence.
///
/// Slang entries are matched greedily left to right within each sentence,
/// longest phrase first; a matched phrase counts once and its tokens are not
/// checked for spelling. Numerals are never counted as misspellings.
pub fn verify_stats(
    ds: &Dataset,
    slang: &WordList,
    dictionary: &WordList,
    opts: &TextOptions,
) -> Result<VerificationReport, CorpusError> {
    if slang.is_empty() {
        return Err(CorpusError::EmptyWordList("slang"));
    }
    if dictionary.is_empty() {
        return Err(CorpusError::EmptyWordList("dictionary"));
    }
    let splitter = SentenceSplitter::default();
    let (mut sentences, mut slang_hits, mut misspellings) = (0usize, 0usize, 0usize);
    for doc in ds.documents() {
        for sentence in splitter.split(&doc.full_text(opts.include_title)) {
            sentences += 1;
            let tokens: Vec<String> = tokenize(&sentence)
                .iter()
                .map(|t| normalize(t, opts.locale))
                .filter(|t| !t.is_empty())
                .collect();
            let mut i = 0;
            while i < tokens.len() {
                if let Some(len) = slang.match_at(&tokens, i) {
                    slang_hits += 1;
                    i += len;
                    continue;
                }
                let t = &tokens[i];
                if !is_numeral(t) && !dictionary.contains_word(t) {
                    misspellings += 1;
                }
                i += 1;
            }
        }
    }
    if sentences == 0 {
        return Err(CorpusError::NoSentences);
    }
    Ok(VerificationReport {
        slang_per_sentence: slang_hits as f64 / sentences as f64,
        misspelling_per_sentence: misspellings as f64 / sentences as f64,
        sentences,
        slang_hits,
        misspellings,
    })
}

/// Renders named verification reports as a tab-separated table.
pub fn render_verification_table(rows: &[(String, VerificationReport)]) -> String {
    let mut out = String::from(
        "Dataset\tSlang words occurrence per sentences\tMisspelling of words per sentences\n",
    );
    for (name, r) in rows {
        out.push_str(&format!(
            "{name}\t{:.3}\t{:.3}\n",
            r.slang_per_sentence, r.misspelling_per_sentence
        ));
    }
    out
}

pub fn render_corpus_stats(name: &str, stats: &CorpusStats) -> String {
    let mut out = String::from("Dataset\tClass\tCount\tMean tokens\tMean sentences\n");
    for (label, count) in &stats.doc_count_by_label {
        out.push_str(&format!("{name}\t{label}\t{count}\t\t\n"));
    }
    out.push_str(&format!(
        "{name}\tALL\t{}\t{:.2}\t{:.2}\n",
        stats.doc_count(),
        stats.mean_tokens_per_doc,
        stats.mean_sentences_per_doc
    ));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: Dataset,
    pub test: Dataset,
}

/// Stratified k-fold split with a seeded shuffle.
///
/// Each label's documents are shuffled and dealt round-robin over the folds,
/// continuing where the previous label stopped, so per-label fold sizes
/// differ by at most one. Documents keep dataset order inside each part.
pub fn stratified_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    if k < 2 {
        return Err(CorpusError::TooFewFolds(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; ds.len()];
    let mut offset = 0;
    for label in Label::ALL {
        let mut idx: Vec<usize> = ds
            .documents()
            .iter()
            .enumerate()
            .filter(|(_, d)| d.label == label)
            .map(|(i, _)| i)
            .collect();
        if idx.len() < k {
            return Err(CorpusError::TooFewDocuments {
                label,
                count: idx.len(),
                k,
            });
        }
        idx.shuffle(&mut rng);
        for (n, &i) in idx.iter().enumerate() {
            fold_of[i] = (offset + n) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) = ds
                .documents()
                .iter()
                .zip(&fold_of)
                .partition(|(_, &fold)| fold == f);
            let unzip = |v: Vec<(&Document, &usize)>, split| Dataset {
                documents: v.into_iter().map(|(d, _)| d.clone()).collect(),
                split,
            };
            Fold {
                train: unzip(train, Split::Train),
                test: unzip(test, Split::Test),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str, label: Label) -> Document {
        Document::new(id, text, label)
    }

    fn labeled(fake: usize, valid: usize) -> Dataset {
        let docs = (0..fake)
            .map(|i| doc(&format!("f{i}"), "x", Label::Fake))
            .chain((0..valid).map(|i| doc(&format!("v{i}"), "y", Label::Valid)))
            .collect();
        Dataset::new(docs, Split::Unsplit).unwrap()
    }

    #[test]
    fn read_three_lines() {
        let input = r#"{"id":"a","text":"x","label":"FAKE"}
{"id":"b","text":"y","label":"VALID","title":"T"}
{"id":"c","text":"z","label":"VALID","analyses":[{"raw":"z","root":"z","pos":"Noun","suffixes":[]}]}
"#;
        let ds = read_corpus(input.as_bytes(), "mem").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.ids().collect::<Vec<_>>(), ["a", "b", "c"]);
    }

    #[test]
    fn duplicate_id_cites_later_line() {
        let input = [
            r#"{"id":"d0","text":"x","label":"FAKE"}"#,
            r#"{"id":"d1","text":"x","label":"FAKE"}"#,
            r#"{"id":"d2","text":"x","label":"FAKE"}"#,
            r#"{"id":"d3","text":"x","label":"FAKE"}"#,
            r#"{"id":"d1","text":"x","label":"VALID"}"#,
        ]
        .join("\n");
        match read_corpus(input.as_bytes(), "mem") {
            Err(CorpusError::DuplicateId { line, id, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(id, "d1");
            }
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_label_is_parse_error_on_line_one() {
        let input = r#"{"id":"a","text":"x"}"#;
        match read_corpus(input.as_bytes(), "mem") {
            Err(CorpusError::Parse { line, message, .. }) => {
                assert_eq!(line, 1);
                assert!(message.contains("label"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_id_and_bad_analyses() {
        assert!(read_corpus(r#"{"id":"","text":"x","label":"FAKE"}"#.as_bytes(), "m").is_err());
        let bad = r#"{"id":"a","text":"x","label":"FAKE","analyses":[{"raw":"","root":"r","pos":"N","suffixes":[]}]}"#;
        assert!(matches!(
            read_corpus(bad.as_bytes(), "m"),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn stats_examples() {
        let empty = corpus_stats(&Dataset::default(), true);
        assert_eq!(empty.doc_count(), 0);
        assert_eq!(empty.mean_tokens_per_doc, 0.0);
        assert_eq!(empty.mean_sentences_per_doc, 0.0);

        let ds = Dataset::new(
            vec![
                doc("1", "a b. c d.", Label::Fake),
                doc("2", "e f.", Label::Valid),
            ],
            Split::Unsplit,
        )
        .unwrap();
        let stats = corpus_stats(&ds, true);
        assert_eq!(stats.mean_tokens_per_doc, 3.0);
        assert_eq!(stats.mean_sentences_per_doc, 1.5);
        assert_eq!(stats.token_total, 6);
    }

    #[test]
    fn stats_label_counts() {
        let stats = corpus_stats(&labeled(902, 1_000), true);
        assert_eq!(stats.doc_count_by_label[&Label::Fake], 902);
        assert_eq!(stats.doc_count_by_label[&Label::Valid], 1_000);
    }

    #[test]
    fn sentence_examples() {
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("Vergi yok. Gezin görün!"),
            ["Vergi yok.", "Gezin görün!"]
        );
        assert_eq!(split_sentences("Dr. Ali geldi."), ["Dr. Ali geldi."]);
        assert_eq!(split_sentences("başlık yok"), ["başlık yok"]);
        assert_eq!(
            split_sentences("Ne?! Oldu… \"Bitti.\" Son"),
            ["Ne?!", "Oldu…", "\"Bitti.\"", "Son"]
        );
        assert_eq!(split_sentences("Oran 3.5 oldu."), ["Oran 3.5 oldu."]);
    }

    #[test]
    fn title_joined_as_sentence() {
        let mut d = doc("t", "Ta Küba!", Label::Fake);
        d.title = Some("İNANILMAZ AMA DOĞRU".into());
        assert_eq!(d.full_text(true), "İNANILMAZ AMA DOĞRU. Ta Küba!");
        assert_eq!(d.full_text(false), "Ta Küba!");
        assert_eq!(split_sentences(&d.full_text(true)).len(), 2);
    }

    #[test]
    fn verify_direct_count() {
        let slang = WordList::new(["lan"], Locale::Turkish);
        let dict = WordList::new(["bu", "iş", "bitti", "tamam"], Locale::Turkish);
        let ds = Dataset::new(
            vec![doc("1", "Bu iş bitti lan. Tamam!", Label::Fake)],
            Split::Unsplit,
        )
        .unwrap();
        let r = verify_stats(&ds, &slang, &dict, &TextOptions::default()).unwrap();
        assert_eq!(
            (r.slang_per_sentence, r.misspelling_per_sentence),
            (0.5, 0.0)
        );
    }

    #[test]
    fn verify_phrases_and_errors() {
        let slang = WordList::new(["hadi be", "be"], Locale::Turkish);
        let dict = WordList::new(["hadi", "git"], Locale::Turkish);
        let ds = Dataset::new(
            vec![doc("1", "Hadi be git be. 1923 gitt.", Label::Fake)],
            Split::Unsplit,
        )
        .unwrap();
        let r = verify_stats(&ds, &slang, &dict, &TextOptions::default()).unwrap();
        assert_eq!(r.slang_hits, 2);
        assert_eq!(r.misspellings, 1);
        assert_eq!(r.sentences, 2);

        let none = verify_stats(
            &Dataset::new(vec![doc("x", "git hadi.", Label::Valid)], Split::Unsplit).unwrap(),
            &slang,
            &dict,
            &TextOptions::default(),
        )
        .unwrap();
        assert_eq!(none.slang_per_sentence, 0.0);

        let empty = Dataset::new(vec![doc("e", "", Label::Valid)], Split::Unsplit).unwrap();
        assert!(matches!(
            verify_stats(&empty, &slang, &dict, &TextOptions::default()),
            Err(CorpusError::NoSentences)
        ));
        assert!(matches!(
            verify_stats(&empty, &WordList::default(), &dict, &TextOptions::default()),
            Err(CorpusError::EmptyWordList("slang"))
        ));
    }

    #[test]
    fn folds_are_stratified() {
        let ds = labeled(10, 10);
        let folds = stratified_folds(&ds, 5, 7).unwrap();
        assert_eq!(folds.len(), 5);
        for f in &folds {
            assert_eq!(f.test.with_label(Label::Fake).len(), 2);
            assert_eq!(f.test.with_label(Label::Valid).len(), 2);
            assert_eq!(f.train.len(), 16);
        }
        assert_eq!(folds, stratified_folds(&ds, 5, 7).unwrap());
    }

    #[test]
    fn folds_preconditions() {
        assert!(matches!(
            stratified_folds(&labeled(3, 10), 5, 1),
            Err(CorpusError::TooFewDocuments {
                label: Label::Fake,
                count: 3,
                k: 5
            })
        ));
        assert!(matches!(
            stratified_folds(&labeled(3, 3), 1, 1),
            Err(CorpusError::TooFewFolds(1))
        ));
    }

    fn arb_document() -> impl Strategy<Value = Document> {
        (
            "[a-z0-9]{1,6}",
            proptest::option::of("\\PC{0,10}"),
            "\\PC{0,30}",
            any::<bool>(),
            proptest::option::of("[A-Za-z]{0,5}"),
        )
            .prop_map(|(id, title, text, fake, source)| Document {
                id,
                title,
                text,
                label: if fake { Label::Fake } else { Label::Valid },
                source,
                analyses: None,
            })
    }

    proptest! {
        #[test]
        fn corpus_serialization_round_trips(docs in proptest::collection::vec(arb_document(), 0..8)) {
            let mut uniq = HashSet::new();
            let docs: Vec<_> = docs.into_iter().filter(|d| uniq.insert(d.id.clone())).collect();
            let ds = Dataset::new(docs, Split::Unsplit).unwrap();
            let mut bytes = Vec::new();
            write_corpus(&ds, &mut bytes).unwrap();
            let back = read_corpus(bytes.as_slice(), "mem").unwrap();
            prop_assert_eq!(&back, &ds);
            let mut again = Vec::new();
            write_corpus(&back, &mut again).unwrap();
            prop_assert_eq!(again, bytes);
        }

        #[test]
        fn folds_partition_dataset(fake in 5usize..30, valid in 5usize..30, k in 2usize..6, seed in any::<u64>()) {
            let ds = labeled(fake, valid);
            let folds = stratified_folds(&ds, k, seed).unwrap();
            let mut all_test: Vec<String> = Vec::new();
            for f in &folds {
                prop_assert_eq!(f.train.len() + f.test.len(), ds.len());
                let train: HashSet<_> = f.train.ids().collect();
                prop_assert!(f.test.ids().all(|id| !train.contains(id)));
                all_test.extend(f.test.ids().map(str::to_string));
            }
            all_test.sort();
            let mut ids: Vec<String> = ds.ids().map(str::to_string).collect();
            ids.sort();
            prop_assert_eq!(all_test, ids);
            for label in Label::ALL {
                let sizes: Vec<usize> = folds.iter().map(|f| f.test.with_label(label).len()).collect();
                let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                prop_assert!(max - min <= 1);
            }
        }

        #[test]
        fn stats_permutation_invariant(texts in proptest::collection::vec("[a-z .!]{0,20}", 1..10), seed in any::<u64>()) {
            let docs: Vec<_> = texts.iter().enumerate()
                .map(|(i, t)| doc(&i.to_string(), t, if i % 2 == 0 { Label::Fake } else { Label::Valid }))
                .collect();
            let mut shuffled = docs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = corpus_stats(&Dataset::new(docs, Split::Unsplit).unwrap(), true);
            let b = corpus_stats(&Dataset::new(shuffled, Split::Unsplit).unwrap(), true);
            prop_assert_eq!(a.token_total, b.token_total);
            prop_assert_eq!(a.sentence_total, b.sentence_total);
            prop_assert_eq!(a.doc_count_by_label, b.doc_count_by_label);
        }

        #[test]
        fn verify_means_unchanged_by_duplication(texts in proptest::collection::vec("(lan|bu|xq|iş)( (lan|bu|xq|iş)){0,5}[.!]", 1..6)) {
            let slang = WordList::new(["lan"], Locale::Turkish);
            let dict = WordList::new(["bu", "iş"], Locale::Turkish);
            let docs: Vec<_> = texts.iter().enumerate().map(|(i, t)| doc(&format!("a{i}"), t, Label::Fake)).collect();
            let doubled: Vec<_> = docs.iter().cloned()
                .chain(docs.iter().map(|d| Document { id: format!("{}-dup", d.id), ..d.clone() }))
                .collect();
            let opts = TextOptions::default();
            let a = verify_stats(&Dataset::new(docs, Split::Unsplit).unwrap(), &slang, &dict, &opts).unwrap();
            let b = verify_stats(&Dataset::new(doubled, Split::Unsplit).unwrap(), &slang, &dict, &opts).unwrap();
            prop_assert_eq!(a.slang_per_sentence, b.slang_per_sentence);
            prop_assert_eq!(a.misspelling_per_sentence, b.misspelling_per_sentence);
        }
    }
}
