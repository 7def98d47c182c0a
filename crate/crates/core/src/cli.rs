//! The `fanlex` command line.
//!
//! Machine-readable output (JSON / JSONL) goes to stdout or `--out`; human
//! tables go to stderr or `--report`. Exit codes: 0 success, 2 usage or I/O,
//! 3 domain precondition, 4 file format or version.

use std::ffi::OsString;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigError, RunConfig, CONFIG_ENV};
use crate::corpus::{
    corpus_stats, load_corpus, render_corpus_stats, render_verification_table, verify_stats,
    CorpusError, CorpusFormat, Dataset, Label, WordList,
};
use crate::eval::{
    cross_validate, evaluate_models, render_confusion, render_cv_table, render_fold_table,
    EvalError,
};
use crate::lexicon::{
    build_lexicons, display_term, lexicon_stats, load_lexicon, raw_pos_term, render_stats_table,
    save_lexicon, Lexicon, LexiconError, ModelClass, TermEntry, RAW_POS_SEPARATOR,
};
use crate::morph::{normalize, Analyzer, AnalyzerRuleTable, Locale, MorphError, SuffixStripper};
use crate::scorer::{
    explain_terms, render_contributions, score_batch, ScoreError, ScoreRecord, TermSetMode,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fanlex",
    version,
    about = "Lexicon-based fake news detection toolkit"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// TURKISH or GENERIC casing rules.
    #[arg(long, global = true)]
    locale: Option<Locale>,
    /// TOKEN_FREQ or DOC_PRESENCE.
    #[arg(long, global = true)]
    count_mode: Option<crate::lexicon::CountMode>,
    /// DISTINCT or MULTISET.
    #[arg(long, global = true)]
    term_set_mode: Option<TermSetMode>,
    #[arg(long, global = true)]
    smoothing: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Prepend document titles to the body text (true/false).
    #[arg(long, global = true)]
    include_title: Option<bool>,
    /// Multiplier for scores in human-readable tables only.
    #[arg(long, global = true)]
    display_scale: Option<f64>,
    /// JSONL surface-form analysis table.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// TSV suffix rules (`surface<TAB>tag`) for the fallback stripper.
    #[arg(long, global = true)]
    suffix_rules: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a lexicon from fake and valid training corpora.
    BuildLexicon {
        #[arg(long)]
        fake: PathBuf,
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        class: ModelClass,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score documents against one or more lexicons.
    Score {
        #[arg(long = "lexicon", required = true)]
        lexicons: Vec<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Attach the N terms with the largest fake/valid difference.
        #[arg(long)]
        explain: Option<usize>,
    },
    /// Train on labeled splits and evaluate on a held-out test corpus.
    Evaluate {
        #[arg(long)]
        train_fake: PathBuf,
        #[arg(long)]
        train_valid: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, value_delimiter = ',', default_values = ["RAW", "ROOT", "RAW_POS", "SUFFIX"])]
        classes: Vec<ModelClass>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation over one labeled corpus.
    CrossValidate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, value_delimiter = ',', default_values = ["RAW", "ROOT", "RAW_POS", "SUFFIX"])]
        classes: Vec<ModelClass>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Document counts and mean token/sentence counts.
    CorpusStats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Slang and misspelling rates per sentence.
    VerifyCorpus {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        slang: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Show a term's scores in one or more lexicons.
    InspectTerm {
        #[arg(long)]
        term: String,
        /// POS tag for RAW_POS lexicons; without it every POS of the term is listed.
        #[arg(long)]
        pos: Option<String>,
        #[arg(long = "lexicon", required = true)]
        lexicons: Vec<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_USAGE, format!("{}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        let code = match e {
            CorpusError::Io { .. }
            | CorpusError::Parse { .. }
            | CorpusError::DuplicateId { .. }
            | CorpusError::InvalidDocument(_) => EXIT_USAGE,
            CorpusError::NoSentences
            | CorpusError::EmptyWordList(_)
            | CorpusError::TooFewFolds(_)
            | CorpusError::TooFewDocuments { .. } => EXIT_DOMAIN,
        };
        Self::new(code, e.to_string())
    }
}

impl From<MorphError> for CliError {
    fn from(e: MorphError) -> Self {
        let code = match e {
            MorphError::Io { .. } | MorphError::Parse { .. } => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Self::new(code, e.to_string())
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        let code = match e {
            LexiconError::Io { .. } => EXIT_USAGE,
            LexiconError::Analysis(inner) => return inner.into(),
            LexiconError::Format { .. }
            | LexiconError::Version { .. }
            | LexiconError::Checksum { .. }
            | LexiconError::Inconsistent { .. } => EXIT_FORMAT,
            LexiconError::EmptySplit(_)
            | LexiconError::LabelMismatch { .. }
            | LexiconError::Mismatch { .. }
            | LexiconError::InvalidSmoothing(_) => EXIT_DOMAIN,
        };
        Self::new(code, e.to_string())
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Analysis(inner) => inner.into(),
            other => Self::new(EXIT_DOMAIN, other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Corpus(inner) => inner.into(),
            EvalError::Lexicon(inner) => inner.into(),
            EvalError::Analysis(inner) => inner.into(),
            other => Self::new(EXIT_DOMAIN, other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(EXIT_USAGE, e.to_string())
    }
}

type CliResult = Result<(), CliError>;

struct Context<'a> {
    cfg: RunConfig,
    analyzer: Box<dyn Analyzer>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Context<'_> {
    fn write_out(&mut self, path: Option<&Path>, bytes: &[u8]) -> CliResult {
        match path {
            Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
            None => self
                .stdout
                .write_all(bytes)
                .map_err(|e| CliError::new(EXIT_USAGE, e.to_string())),
        }
    }

    fn report(&mut self, path: Option<&Path>, text: &str) -> CliResult {
        match path {
            Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
            None => self
                .stderr
                .write_all(text.as_bytes())
                .map_err(|e| CliError::new(EXIT_USAGE, e.to_string())),
        }
    }

    fn json<T: Serialize>(&mut self, value: &T) -> CliResult {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
        bytes.push(b'\n');
        self.write_out(None, &bytes)
    }
}

fn resolve_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = g.locale {
        cfg.locale = v;
    }
    if let Some(v) = g.count_mode {
        cfg.count_mode = v;
    }
    if let Some(v) = g.term_set_mode {
        cfg.term_set_mode = v;
    }
    if let Some(v) = g.smoothing {
        cfg.smoothing = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.include_title {
        cfg.include_title = v;
    }
    if let Some(v) = g.display_scale {
        cfg.display_scale = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_analyzer(g: &GlobalArgs, cfg: &RunConfig) -> Result<Box<dyn Analyzer>, CliError> {
    let stripper = match (&g.suffix_rules, cfg.locale) {
        (Some(path), _) => SuffixStripper::load_tsv(path)?,
        (None, Locale::Turkish) => SuffixStripper::turkish_default(),
        (None, Locale::Generic) => SuffixStripper::default(),
    };
    Ok(match &g.rules {
        Some(path) => Box::new(AnalyzerRuleTable::load_jsonl(path, cfg.locale, stripper)?),
        None => Box::new(stripper),
    })
}

fn corpus(path: &Path) -> Result<Dataset, CliError> {
    Ok(load_corpus(path, CorpusFormat::Jsonl)?)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve_config(&cli.global).and_then(|cfg| {
        let analyzer = resolve_analyzer(&cli.global, &cfg)?;
        let mut ctx = Context {
            cfg,
            analyzer,
            stdout,
            stderr,
        };
        dispatch(cli.command, &mut ctx)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = stderr.lock();
    let code = run(args, &mut out, &mut err);
    if out.flush().is_err() {
        return EXIT_USAGE;
    }
    code
}

fn dispatch(command: Command, ctx: &mut Context<'_>) -> CliResult {
    match command {
        Command::BuildLexicon {
            fake,
            valid,
            class,
            out,
        } => cmd_build_lexicon(ctx, &fake, &valid, class, &out),
        Command::Score {
            lexicons,
            input,
            out,
            explain,
        } => cmd_score(ctx, &lexicons, &input, out.as_deref(), explain),
        Command::Evaluate {
            train_fake,
            train_valid,
            test,
            classes,
            report,
        } => cmd_evaluate(
            ctx,
            &train_fake,
            &train_valid,
            &test,
            &classes,
            report.as_deref(),
        ),
        Command::CrossValidate {
            corpus,
            folds,
            classes,
            report,
        } => cmd_cross_validate(ctx, &corpus, folds, &classes, report.as_deref()),
        Command::CorpusStats { corpus, name } => cmd_corpus_stats(ctx, &corpus, name),
        Command::VerifyCorpus {
            corpus,
            slang,
            dictionary,
            name,
        } => cmd_verify_corpus(ctx, &corpus, &slang, &dictionary, name),
        Command::InspectTerm {
            term,
            pos,
            lexicons,
        } => cmd_inspect_term(ctx, &term, pos.as_deref(), &lexicons),
    }
}

#[derive(Serialize)]
struct BuildSummary<'a> {
    class: ModelClass,
    out: String,
    fake_docs: usize,
    valid_docs: usize,
    fake_total: u64,
    valid_total: u64,
    stats: crate::lexicon::LexiconStats,
    config: &'a RunConfig,
}

fn cmd_build_lexicon(
    ctx: &mut Context<'_>,
    fake: &Path,
    valid: &Path,
    class: ModelClass,
    out: &Path,
) -> CliResult {
    let fake_ds = corpus(fake)?;
    let valid_ds = corpus(valid)?;
    let lex = build_lexicons(
        &fake_ds,
        &valid_ds,
        &[class],
        ctx.cfg.count_mode,
        ctx.analyzer.as_ref(),
        &ctx.cfg.text_options(),
    )
    .map_err(|e| match e {
        LexiconError::LabelMismatch { .. } | LexiconError::EmptySplit(_) => {
            let path = match &e {
                LexiconError::EmptySplit(Label::Fake) => fake,
                LexiconError::EmptySplit(Label::Valid) => valid,
                LexiconError::LabelMismatch { expected, .. } if *expected == Label::Fake => fake,
                _ => valid,
            };
            CliError::new(EXIT_DOMAIN, format!("{}: {e}", path.display()))
        }
        other => other.into(),
    })?
    .remove(0)
    .with_smoothing(ctx.cfg.smoothing)?;
    save_lexicon(&lex, out)?;
    let stats = lexicon_stats(&lex);
    let cfg = ctx.cfg.clone();
    ctx.json(&BuildSummary {
        class,
        out: out.display().to_string(),
        fake_docs: fake_ds.len(),
        valid_docs: valid_ds.len(),
        fake_total: lex.fake_total(),
        valid_total: lex.valid_total(),
        stats,
        config: &cfg,
    })?;
    ctx.report(None, &render_stats_table(&[(class, stats)]))
}

fn cmd_score(
    ctx: &mut Context<'_>,
    lexicon_paths: &[PathBuf],
    input: &Path,
    out: Option<&Path>,
    explain: Option<usize>,
) -> CliResult {
    let lexicons = lexicon_paths
        .iter()
        .map(|p| load_lexicon(p))
        .collect::<Result<Vec<_>, _>>()?;
    let lexicons = lexicons
        .into_iter()
        .map(|l| {
            let smoothing = if l.smoothing() > 0.0 {
                l.smoothing()
            } else {
                ctx.cfg.smoothing
            };
            l.with_smoothing(smoothing)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let docs = corpus(input)?;
    let text = ctx.cfg.text_options();
    let rows = score_batch(
        &docs,
        &lexicons,
        ctx.cfg.term_set_mode,
        ctx.analyzer.as_ref(),
        &text,
    )?;

    let mut buf = Vec::new();
    let mut rendered = String::new();
    for (doc, row) in docs.documents().iter().zip(&rows) {
        let analyses = match explain {
            Some(_) => Some(crate::morph::analyze_document(
                doc,
                ctx.analyzer.as_ref(),
                &text,
            )?),
            None => None,
        };
        for (lex, s) in lexicons.iter().zip(&row.scores) {
            let mut record = ScoreRecord::new(&row.id, s);
            if let (Some(n), Some(analyses)) = (explain, &analyses) {
                let terms = crate::lexicon::extract_terms(analyses, lex.model_class());
                let contribs = explain_terms(&terms, lex, n)?;
                rendered.push_str(&format!(
                    "# {} {} fake={:.4} valid={:.4} label={}\n",
                    row.id,
                    s.class,
                    s.fake_score * ctx.cfg.display_scale,
                    s.valid_score * ctx.cfg.display_scale,
                    s.label
                ));
                rendered.push_str(&render_contributions(&contribs, ctx.cfg.display_scale));
                record.explain = Some(contribs);
            }
            serde_json::to_writer(&mut buf, &record)
                .map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
            buf.push(b'\n');
        }
    }
    ctx.write_out(out, &buf)?;
    if !rendered.is_empty() {
        ctx.report(None, &rendered)?;
    }
    Ok(())
}

fn cmd_evaluate(
    ctx: &mut Context<'_>,
    train_fake: &Path,
    train_valid: &Path,
    test: &Path,
    classes: &[ModelClass],
    report: Option<&Path>,
) -> CliResult {
    let fake = corpus(train_fake)?;
    let valid = corpus(train_valid)?;
    let test = corpus(test)?;
    let result = evaluate_models(
        &fake,
        &valid,
        &test,
        classes,
        &ctx.cfg,
        ctx.analyzer.as_ref(),
    )?;
    ctx.json(&result)?;
    let text: String = result.results.iter().map(render_confusion).collect();
    ctx.report(report, &text)
}

fn cmd_cross_validate(
    ctx: &mut Context<'_>,
    path: &Path,
    folds: usize,
    classes: &[ModelClass],
    report: Option<&Path>,
) -> CliResult {
    let ds = corpus(path)?;
    let seed = ctx.cfg.seed;
    let result = cross_validate(&ds, folds, classes, seed, &ctx.cfg, ctx.analyzer.as_ref())?;
    ctx.json(&result)?;
    let text = format!(
        "{}\n{}",
        render_cv_table(&result),
        render_fold_table(&result)
    );
    ctx.report(report, &text)
}

#[derive(Serialize)]
struct NamedStats<T: Serialize> {
    name: String,
    #[serde(flatten)]
    stats: T,
}

fn dataset_name(name: Option<String>, path: &Path) -> String {
    name.unwrap_or_else(|| {
        path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        )
    })
}

fn cmd_corpus_stats(ctx: &mut Context<'_>, path: &Path, name: Option<String>) -> CliResult {
    let ds = corpus(path)?;
    let stats = corpus_stats(&ds, ctx.cfg.include_title);
    let name = dataset_name(name, path);
    let table = render_corpus_stats(&name, &stats);
    ctx.json(&NamedStats { name, stats })?;
    ctx.report(None, &table)
}

fn cmd_verify_corpus(
    ctx: &mut Context<'_>,
    path: &Path,
    slang: &Path,
    dictionary: &Path,
    name: Option<String>,
) -> CliResult {
    let ds = corpus(path)?;
    let slang = WordList::load(slang, ctx.cfg.locale)?;
    let dictionary = WordList::load(dictionary, ctx.cfg.locale)?;
    let report = verify_stats(&ds, &slang, &dictionary, &ctx.cfg.text_options())?;
    let name = dataset_name(name, path);
    let table = render_verification_table(&[(name.clone(), report)]);
    ctx.json(&NamedStats {
        name,
        stats: report,
    })?;
    ctx.report(None, &table)
}

#[derive(Serialize)]
struct InspectRecord {
    lexicon: String,
    class: ModelClass,
    term: String,
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    fake_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    valid_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fake_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    valid_score: Option<f64>,
}

fn lookup(
    lex: &Lexicon,
    term: &str,
    pos: Option<&str>,
    locale: Locale,
) -> (String, Vec<TermEntry>) {
    match lex.model_class() {
        ModelClass::Suffix => (term.to_string(), lex.get(term).into_iter().collect()),
        ModelClass::Raw | ModelClass::Root => {
            let t = normalize(term, locale);
            let found = lex.get(&t).into_iter().collect();
            (t, found)
        }
        ModelClass::RawPos => {
            let raw = normalize(term, locale);
            match pos {
                Some(pos) => {
                    let t = raw_pos_term(&raw, pos);
                    let found = lex.get(&t).into_iter().collect();
                    (t, found)
                }
                None => {
                    let prefix = format!("{raw}{RAW_POS_SEPARATOR}");
                    let found = lex.with_prefix(&prefix).collect();
                    (raw, found)
                }
            }
        }
    }
}

fn cmd_inspect_term(
    ctx: &mut Context<'_>,
    term: &str,
    pos: Option<&str>,
    paths: &[PathBuf],
) -> CliResult {
    let scale = ctx.cfg.display_scale;
    let mut buf = Vec::new();
    let mut table = String::from("Lexicon\tClass\tTerm\tFake score\tValid score\n");
    for path in paths {
        let lex = load_lexicon(path)?.with_smoothing(ctx.cfg.smoothing)?;
        let (query, found) = lookup(&lex, term, pos, ctx.cfg.locale);
        let lexicon = path.display().to_string();
        let mut records: Vec<InspectRecord> = found
            .iter()
            .map(|e| InspectRecord {
                lexicon: lexicon.clone(),
                class: lex.model_class(),
                term: e.term.clone(),
                found: true,
                fake_count: Some(e.fake_count),
                valid_count: Some(e.valid_count),
                fake_score: Some(e.fake_score),
                valid_score: Some(e.valid_score),
            })
            .collect();
        if records.is_empty() {
            records.push(InspectRecord {
                lexicon: lexicon.clone(),
                class: lex.model_class(),
                term: query.clone(),
                found: false,
                fake_count: None,
                valid_count: None,
                fake_score: None,
                valid_score: None,
            });
        }
        for r in &records {
            serde_json::to_writer(&mut buf, r)
                .map_err(|e| CliError::new(EXIT_USAGE, e.to_string()))?;
            buf.push(b'\n');
            match (r.fake_score, r.valid_score) {
                (Some(f), Some(v)) => table.push_str(&format!(
                    "{lexicon}\t{}\t{}\t{:.2}\t{:.2}\n",
                    r.class,
                    display_term(&r.term),
                    f * scale,
                    v * scale
                )),
                _ => table.push_str(&format!(
                    "{lexicon}\t{}\t{}\tnot found\t\n",
                    r.class,
                    display_term(&r.term)
                )),
            }
        }
    }
    ctx.write_out(None, &buf)?;
    ctx.report(None, &table)
}
