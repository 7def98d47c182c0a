//! Tokenization, Turkish-aware normalization and morphological analysis.
//!
//! A token is analyzed into its surface form, root, POS tag and the ordered
//! suffix tags that follow the root. Analyses come from one of three places:
//! pre-analyzed documents, an [`AnalyzerRuleTable`] lookup, or the fallback
//! [`SuffixStripper`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, Document, Label};

/// POS tag assigned by the fallback stripper.
pub const UNKNOWN_POS: &str = "Unknown";

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("token {token:?} normalizes to an empty string")]
    EmptyToken { token: String },
    #[error("document {doc_id}: token {position}: {source}")]
    Token {
        doc_id: String,
        position: usize,
        #[source]
        source: Box<MorphError>,
    },
    #[error("invalid analysis: {0}")]
    InvalidAnalysis(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One analyzed token: `raw = root + suffixes`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MorphAnalysis {
    pub raw: String,
    pub root: String,
    pub pos: String,
    #[serde(default)]
    pub suffixes: Vec<String>,
}

impl MorphAnalysis {
    pub fn new(
        raw: impl Into<String>,
        root: impl Into<String>,
        pos: impl Into<String>,
        suffixes: Vec<String>,
    ) -> Self {
        Self {
            raw: raw.into(),
            root: root.into(),
            pos: pos.into(),
            suffixes,
        }
    }

    pub fn validate(&self) -> Result<(), MorphError> {
        if self.raw.is_empty() {
            return Err(MorphError::InvalidAnalysis("empty raw form".into()));
        }
        if self.root.is_empty() {
            return Err(MorphError::InvalidAnalysis(format!(
                "empty root for {:?}",
                self.raw
            )));
        }
        if self.suffixes.iter().any(String::is_empty) {
            return Err(MorphError::InvalidAnalysis(format!(
                "empty suffix tag in analysis of {:?}",
                self.raw
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Locale {
    #[default]
    Turkish,
    Generic,
}

impl FromStr for Locale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TURKISH" | "TR" => Ok(Locale::Turkish),
            "GENERIC" => Ok(Locale::Generic),
            other => Err(format!("unknown locale {other:?}")),
        }
    }
}

/// How a document's text is assembled before tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextOptions {
    pub locale: Locale,
    pub include_title: bool,
}

impl Default for TextOptions {
    fn default() -> Self {
        Self {
            locale: Locale::Turkish,
            include_title: true,
        }
    }
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-' | '‐')
}

/// Splits text into word tokens.
///
/// Letters, digits and combining marks form tokens. Apostrophes and hyphens
/// stay attached when they sit between two word characters ("Küba'ya",
/// "bilgi-işlem"); every other character separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let joined = is_joiner(c)
            && !current.is_empty()
            && chars.get(i + 1).copied().is_some_and(is_word_char);
        if is_word_char(c) || joined {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn is_combining_mark(c: char) -> bool {
    matches!(c, '\u{0300}'..='\u{036F}')
}

fn lowercase(token: &str, locale: Locale) -> String {
    match locale {
        Locale::Generic => token.to_lowercase(),
        Locale::Turkish => {
            let mut out = String::with_capacity(token.len());
            for c in token.chars() {
                match c {
                    'I' => out.push('ı'),
                    'İ' => out.push('i'),
                    _ => out.extend(c.to_lowercase()),
                }
            }
            out
        }
    }
}

/// Lowercases (with Turkish dotted/dotless i rules when asked) and strips
/// leading and trailing non-word characters. Idempotent.
pub fn normalize(token: &str, locale: Locale) -> String {
    let lowered = lowercase(token, locale);
    let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric());
    trimmed.to_string()
}

/// True for tokens made only of digits; they are kept by the tokenizer but
/// never analyzed.
pub fn is_numeral(token: &str) -> bool {
    !token.is_empty() && token.chars().all(char::is_numeric)
}

/// Produces an analysis for an already-normalized, non-empty token.
pub trait Analyzer: Send + Sync {
    fn analyze_normalized(&self, token: &str) -> MorphAnalysis;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixRule {
    pub surface: String,
    pub tag: String,
}

/// Greedy right-to-left suffix stripper.
///
/// Rules are kept longest-surface-first; at each step the longest rule whose
/// surface ends the remaining word is removed, as long as something is left
/// for the root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuffixStripper {
    rules: Vec<SuffixRule>,
}

impl SuffixStripper {
    pub fn new(rules: impl IntoIterator<Item = SuffixRule>) -> Result<Self, MorphError> {
        let mut rules: Vec<SuffixRule> = rules.into_iter().collect();
        if let Some(bad) = rules
            .iter()
            .find(|r| r.surface.is_empty() || r.tag.is_empty())
        {
            return Err(MorphError::InvalidAnalysis(format!(
                "suffix rule with empty surface or tag: {bad:?}"
            )));
        }
        // Stable, so equal-length rules keep file order.
        rules.sort_by_key(|r| std::cmp::Reverse(r.surface.chars().count()));
        Ok(Self { rules })
    }

    /// A small inflectional suffix set for Turkish: plural, case and a few
    /// possessive endings. Meant as a fallback, not a morphology.
    pub fn turkish_default() -> Self {
        const RULES: &[(&str, &str)] = &[
            ("lar", "A3pl"),
            ("ler", "A3pl"),
            ("dan", "Abl"),
            ("den", "Abl"),
            ("tan", "Abl"),
            ("ten", "Abl"),
            ("nın", "Gen"),
            ("nin", "Gen"),
            ("nun", "Gen"),
            ("nün", "Gen"),
            ("da", "Loc"),
            ("de", "Loc"),
            ("ta", "Loc"),
            ("te", "Loc"),
            ("ya", "Dat"),
            ("ye", "Dat"),
            ("yı", "Acc"),
            ("yi", "Acc"),
            ("yu", "Acc"),
            ("yü", "Acc"),
            ("ları", "P3pl"),
            ("leri", "P3pl"),
            ("ımız", "P1pl"),
            ("imiz", "P1pl"),
            ("umuz", "P1pl"),
            ("ümüz", "P1pl"),
        ];
        Self::new(RULES.iter().map(|(s, t)| SuffixRule {
            surface: (*s).to_string(),
            tag: (*t).to_string(),
        }))
        .expect("built-in rules are well-formed")
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }

    /// Reads a `surface<TAB>tag` file. Blank lines and `#` comments are skipped.
    pub fn load_tsv(path: &Path) -> Result<Self, MorphError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| MorphError::Io {
            path: display.clone(),
            source,
        })?;
        let mut rules = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| MorphError::Io {
                path: display.clone(),
                source,
            })?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = trimmed.split('\t');
            let (Some(surface), Some(tag), None) = (parts.next(), parts.next(), parts.next())
            else {
                return Err(MorphError::Parse {
                    path: display,
                    line: idx + 1,
                    message: "expected `surface<TAB>tag`".into(),
                });
            };
            let (surface, tag) = (surface.trim(), tag.trim());
            if surface.is_empty() || tag.is_empty() {
                return Err(MorphError::Parse {
                    path: display,
                    line: idx + 1,
                    message: "empty surface or tag".into(),
                });
            }
            rules.push(SuffixRule {
                surface: surface.to_string(),
                tag: tag.to_string(),
            });
        }
        Self::new(rules)
    }

    /// Strips suffixes from `word`; returns the root and the matched rules in
    /// word order.
    pub fn strip<'a>(&'a self, word: &'a str) -> (&'a str, Vec<&'a SuffixRule>) {
        let mut rest = word;
        let mut matched = Vec::new();
        'outer: loop {
            for rule in &self.rules {
                if rest.len() > rule.surface.len() && rest.ends_with(rule.surface.as_str()) {
                    rest = &rest[..rest.len() - rule.surface.len()];
                    matched.push(rule);
                    continue 'outer;
                }
            }
            break;
        }
        matched.reverse();
        (rest, matched)
    }
}

impl Analyzer for SuffixStripper {
    fn analyze_normalized(&self, token: &str) -> MorphAnalysis {
        let (root, matched) = self.strip(token);
        MorphAnalysis {
            raw: token.to_string(),
            root: root.to_string(),
            pos: UNKNOWN_POS.to_string(),
            suffixes: matched.into_iter().map(|r| r.tag.clone()).collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RuleTableLine {
    surface: String,
    analyses: Vec<RuleTableAnalysis>,
}

#[derive(Debug, Deserialize)]
struct RuleTableAnalysis {
    root: String,
    pos: String,
    #[serde(default)]
    suffixes: Vec<String>,
}

/// Surface-form lookup table backed by a fallback suffix stripper.
///
/// When a surface has several analyses the first one wins.
#[derive(Debug, Clone, Default)]
pub struct AnalyzerRuleTable {
    entries: HashMap<String, Vec<MorphAnalysis>>,
    stripper: SuffixStripper,
}

impl AnalyzerRuleTable {
    pub fn new(stripper: SuffixStripper) -> Self {
        Self {
            entries: HashMap::new(),
            stripper,
        }
    }

    /// Adds analyses for a normalized surface form, appending to any already
    /// present.
    pub fn insert(
        &mut self,
        surface: impl Into<String>,
        analyses: impl IntoIterator<Item = MorphAnalysis>,
    ) -> Result<(), MorphError> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(MorphError::InvalidAnalysis("empty surface".into()));
        }
        let analyses: Vec<MorphAnalysis> = analyses.into_iter().collect();
        for a in &analyses {
            a.validate()?;
        }
        if analyses.is_empty() {
            return Err(MorphError::InvalidAnalysis(format!(
                "no analyses for surface {surface:?}"
            )));
        }
        self.entries.entry(surface).or_default().extend(analyses);
        Ok(())
    }

    /// Loads a JSONL table; surfaces are normalized with `locale`.
    pub fn load_jsonl(
        path: &Path,
        locale: Locale,
        stripper: SuffixStripper,
    ) -> Result<Self, MorphError> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|source| MorphError::Io {
            path: display.clone(),
            source,
        })?;
        let mut table = Self::new(stripper);
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| MorphError::Io {
                path: display.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| MorphError::Parse {
                path: display.clone(),
                line: idx + 1,
                message,
            };
            let parsed: RuleTableLine =
                serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            let surface = normalize(&parsed.surface, locale);
            let analyses: Vec<MorphAnalysis> = parsed
                .analyses
                .into_iter()
                .map(|a| MorphAnalysis {
                    raw: surface.clone(),
                    root: a.root,
                    pos: a.pos,
                    suffixes: a.suffixes,
                })
                .collect();
            table
                .insert(surface, analyses)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn analyses(&self, surface: &str) -> Option<&[MorphAnalysis]> {
        self.entries.get(surface).map(Vec::as_slice)
    }

    pub fn stripper(&self) -> &SuffixStripper {
        &self.stripper
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Analyzer for AnalyzerRuleTable {
    fn analyze_normalized(&self, token: &str) -> MorphAnalysis {
        match self.entries.get(token).and_then(|a| a.first()) {
            Some(first) => first.clone(),
            None => self.stripper.analyze_normalized(token),
        }
    }
}

/// Normalizes `token` and analyzes it.
pub fn analyze_token(
    token: &str,
    analyzer: &dyn Analyzer,
    locale: Locale,
) -> Result<MorphAnalysis, MorphError> {
    let normalized = normalize(token, locale);
    if normalized.is_empty() {
        return Err(MorphError::EmptyToken {
            token: token.to_string(),
        });
    }
    Ok(analyzer.analyze_normalized(&normalized))
}

/// Analyses for a document, in text order. Pre-analyzed documents are passed
/// through untouched; numerals are skipped.
pub fn analyze_document(
    doc: &Document,
    analyzer: &dyn Analyzer,
    opts: &TextOptions,
) -> Result<Vec<MorphAnalysis>, MorphError> {
    if let Some(analyses) = &doc.analyses {
        return Ok(analyses.clone());
    }
    let text = doc.full_text(opts.include_title);
    tokenize(&text)
        .iter()
        .enumerate()
        .filter(|(_, t)| !is_numeral(t))
        .map(|(position, token)| {
            analyze_token(token, analyzer, opts.locale).map_err(|e| MorphError::Token {
                doc_id: doc.id.clone(),
                position,
                source: Box::new(e),
            })
        })
        .collect()
}

/// A document reduced to what the lexicon and scorer need.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedDocument {
    pub id: String,
    pub label: Label,
    pub analyses: Vec<MorphAnalysis>,
}

/// Analyzes every document of a dataset in parallel, preserving order.
pub fn analyze_dataset(
    ds: &Dataset,
    analyzer: &dyn Analyzer,
    opts: &TextOptions,
) -> Result<Vec<AnalyzedDocument>, MorphError> {
    ds.documents()
        .par_iter()
        .map(|doc| {
            Ok(AnalyzedDocument {
                id: doc.id.clone(),
                label: doc.label,
                analyses: analyze_document(doc, analyzer, opts)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rule(surface: &str, tag: &str) -> SuffixRule {
        SuffixRule {
            surface: surface.into(),
            tag: tag.into(),
        }
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("Ta Küba! Kim gidecek demeyin!"),
            ["Ta", "Küba", "Kim", "gidecek", "demeyin"]
        );
        assert_eq!(tokenize("47 yıldır"), ["47", "yıldır"]);
    }

    #[test]
    fn tokenize_keeps_intra_word_joiners() {
        assert_eq!(
            tokenize("Küba'ya gitti, bilgi-işlem 'alıntı' - son"),
            ["Küba'ya", "gitti", "bilgi-işlem", "alıntı", "son"]
        );
        assert_eq!(tokenize("...!!"), Vec::<String>::new());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("Bile", Locale::Turkish), "bile");
        assert_eq!(normalize("İNANILMAZ", Locale::Turkish), "inanılmaz");
        assert_eq!(normalize("ISPARTA", Locale::Turkish), "ısparta");
        assert_eq!(normalize("ISPARTA", Locale::Generic), "isparta");
        assert_eq!(normalize("\"Zaten,", Locale::Turkish), "zaten");
        assert_eq!(normalize("...", Locale::Turkish), "");
    }

    #[test]
    fn table_lookup_takes_first_analysis() {
        let mut table = AnalyzerRuleTable::default();
        let first = MorphAnalysis::new(
            "demeyin",
            "de",
            "Verb",
            vec!["Neg".into(), "Imp".into(), "A2pl".into()],
        );
        let second = MorphAnalysis::new("demeyin", "deme", "Noun", vec![]);
        table.insert("demeyin", [first.clone(), second]).unwrap();
        assert_eq!(
            analyze_token("Demeyin", &table, Locale::Turkish).unwrap(),
            first
        );
    }

    #[test]
    fn stripper_examples() {
        let stripper = SuffixStripper::new([rule("lar", "A3pl")]).unwrap();
        let a = analyze_token("xyzlar", &stripper, Locale::Turkish).unwrap();
        assert_eq!(
            a,
            MorphAnalysis::new("xyzlar", "xyz", UNKNOWN_POS, vec!["A3pl".into()])
        );

        let plain = analyze_token("kalem", &stripper, Locale::Turkish).unwrap();
        assert_eq!(plain.root, "kalem");
        assert!(plain.suffixes.is_empty());
    }

    #[test]
    fn stripper_emits_tags_in_word_order_and_keeps_a_root() {
        let stripper =
            SuffixStripper::new([rule("a", "Dat"), rule("lar", "A3pl"), rule("insan", "X")])
                .unwrap();
        let a = stripper.analyze_normalized("insanlara");
        assert_eq!(a.root, "insan");
        assert_eq!(a.suffixes, ["A3pl", "Dat"]);
        // A rule that would consume the whole word is not applied.
        assert_eq!(stripper.analyze_normalized("insan").root, "insan");
    }

    #[test]
    fn rules_sorted_longest_first() {
        let s = SuffixStripper::new([rule("a", "A"), rule("lara", "B"), rule("ra", "C")]).unwrap();
        let surfaces: Vec<_> = s.rules().iter().map(|r| r.surface.as_str()).collect();
        assert_eq!(surfaces, ["lara", "ra", "a"]);
    }

    #[test]
    fn empty_token_is_an_error() {
        let err = analyze_token("?!", &SuffixStripper::default(), Locale::Turkish).unwrap_err();
        assert!(matches!(err, MorphError::EmptyToken { .. }));
    }

    #[test]
    fn analyze_document_paths() {
        let stripper = SuffixStripper::default();
        let opts = TextOptions::default();
        let mut doc = Document::new("d1", "Vergi yok.", Label::Fake);
        let analyses = analyze_document(&doc, &stripper, &opts).unwrap();
        let raws: Vec<_> = analyses.iter().map(|a| a.raw.as_str()).collect();
        assert_eq!(raws, ["vergi", "yok"]);

        doc.text.clear();
        assert!(analyze_document(&doc, &stripper, &opts).unwrap().is_empty());

        let gold = vec![MorphAnalysis::new(
            "Vergi",
            "vergi",
            "Noun",
            vec!["A3sg".into()],
        )];
        doc.analyses = Some(gold.clone());
        assert_eq!(analyze_document(&doc, &stripper, &opts).unwrap(), gold);
    }

    #[test]
    fn analyze_document_skips_numerals_and_uses_title() {
        let mut doc = Document::new("d", "47 yıldır", Label::Fake);
        doc.title = Some("İNANILMAZ AMA DOĞRU".into());
        let stripper = SuffixStripper::default();
        let with_title = analyze_document(&doc, &stripper, &TextOptions::default()).unwrap();
        let raws: Vec<_> = with_title.iter().map(|a| a.raw.as_str()).collect();
        assert_eq!(raws, ["inanılmaz", "ama", "doğru", "yıldır"]);
        let opts = TextOptions {
            include_title: false,
            ..TextOptions::default()
        };
        assert_eq!(analyze_document(&doc, &stripper, &opts).unwrap().len(), 1);
    }

    #[test]
    fn load_rule_files() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = dir.path().join("rules.tsv");
        std::fs::write(&tsv, "# comment\nlar\tA3pl\na\tDat\n\n").unwrap();
        let stripper = SuffixStripper::load_tsv(&tsv).unwrap();
        assert_eq!(stripper.rules().len(), 2);

        let jsonl = dir.path().join("table.jsonl");
        std::fs::write(
            &jsonl,
            r#"{"surface":"Telaşına","analyses":[{"root":"telaş","pos":"Noun","suffixes":["A3sg","P3sg","Dat"]},{"root":"telaş","pos":"Noun","suffixes":["A2sg","P2sg","Dat"]}]}"#,
        )
        .unwrap();
        let table = AnalyzerRuleTable::load_jsonl(&jsonl, Locale::Turkish, stripper).unwrap();
        let a = table.analyze_normalized("telaşına");
        assert_eq!(a.suffixes, ["A3sg", "P3sg", "Dat"]);
        assert_eq!(
            table.analyze_normalized("kitaplara").suffixes,
            ["A3pl", "Dat"]
        );

        std::fs::write(&tsv, "lar A3pl\n").unwrap();
        let err = SuffixStripper::load_tsv(&tsv).unwrap_err();
        assert!(matches!(err, MorphError::Parse { line: 1, .. }));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,12}", turkish in any::<bool>()) {
            let locale = if turkish { Locale::Turkish } else { Locale::Generic };
            let once = normalize(&s, locale);
            prop_assert_eq!(normalize(&once, locale), once);
        }

        #[test]
        fn stripper_reconstructs_token(word in "[a-zçğıöşü]{1,14}") {
            let stripper = SuffixStripper::turkish_default();
            let (root, matched) = stripper.strip(&word);
            let rebuilt: String = std::iter::once(root)
                .chain(matched.iter().map(|r| r.surface.as_str()))
                .collect();
            prop_assert_eq!(&rebuilt, &word);
            prop_assert!(!root.is_empty());
        }

        #[test]
        fn analysis_count_matches_token_count(words in proptest::collection::vec("[A-Za-zİıŞş]{1,8}", 0..20)) {
            let text = words.join(" ");
            let doc = Document::new("p", text.clone(), Label::Valid);
            let analyses = analyze_document(&doc, &SuffixStripper::turkish_default(), &TextOptions::default()).unwrap();
            prop_assert_eq!(analyses.len(), tokenize(&text).len());
        }
    }
}
