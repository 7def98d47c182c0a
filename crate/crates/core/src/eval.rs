//! Confusion matrices, precision/recall/accuracy/F1, held-out evaluation and
//! stratified k-fold cross-validation. FAKE is the positive class.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::corpus::{stratified_folds, CorpusError, Dataset, Label};
use crate::lexicon::{build_from_analyses, build_lexicons, Lexicon, LexiconError, ModelClass};
use crate::morph::{analyze_dataset, AnalyzedDocument, Analyzer, MorphAnalysis, MorphError};
use crate::scorer::score_analyses;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predicted has {predicted} labels, actual has {actual}")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("document {0:?} appears in both training and test data")]
    Leakage(String),
    #[error("no model classes requested")]
    NoClasses,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Analysis(#[from] MorphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Actual FAKE, predicted FAKE.
    pub tp: usize,
    /// Actual FAKE, predicted VALID.
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Actual VALID, predicted FAKE.
    pub fp: usize,
    /// Actual VALID, predicted VALID.
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    fn record(&mut self, predicted: Label, actual: Label) {
        match (actual, predicted) {
            (Label::Fake, Label::Fake) => self.tp += 1,
            (Label::Fake, Label::Valid) => self.fn_ += 1,
            (Label::Valid, Label::Fake) => self.fp += 1,
            (Label::Valid, Label::Valid) => self.tn += 1,
        }
    }
}

pub fn confusion(predicted: &[Label], actual: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        cm.record(p, a);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision and recall fall back to 0 when their denominators are 0; so
/// does F1 when precision + recall is 0.
pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        precision,
        recall,
        accuracy: ratio(cm.tp + cm.tn, total),
        f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvaluation {
    pub class: ModelClass,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub train_fake: usize,
    pub train_valid: usize,
    pub test: usize,
    pub results: Vec<ClassEvaluation>,
}

fn check_disjoint<'a>(
    train: impl IntoIterator<Item = &'a str>,
    test: impl IntoIterator<Item = &'a str>,
) -> Result<(), EvalError> {
    let train: HashSet<&str> = train.into_iter().collect();
    for id in test {
        if train.contains(id) {
            return Err(EvalError::Leakage(id.to_string()));
        }
    }
    Ok(())
}

fn evaluate_lexicons(
    lexicons: &[Lexicon],
    test: &[&AnalyzedDocument],
    cfg: &RunConfig,
) -> Result<Vec<ClassEvaluation>, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Empty);
    }
    let actual: Vec<Label> = test.iter().map(|d| d.label).collect();
    lexicons
        .iter()
        .map(|lex| {
            let predicted: Vec<Label> = test
                .par_iter()
                .map(|d| score_analyses(&d.analyses, lex, cfg.term_set_mode).label)
                .collect();
            let cm = confusion(&predicted, &actual)?;
            Ok(ClassEvaluation {
                class: lex.model_class(),
                confusion: cm,
                metrics: metrics(&cm)?,
            })
        })
        .collect()
}

fn smoothed(lexicons: Vec<Lexicon>, cfg: &RunConfig) -> Result<Vec<Lexicon>, EvalError> {
    lexicons
        .into_iter()
        .map(|l| l.with_smoothing(cfg.smoothing).map_err(EvalError::from))
        .collect()
}

/// Trains one lexicon per class on the training splits and evaluates each on
/// the test set.
pub fn evaluate_models(
    train_fake: &Dataset,
    train_valid: &Dataset,
    test: &Dataset,
    classes: &[ModelClass],
    cfg: &RunConfig,
    analyzer: &dyn Analyzer,
) -> Result<EvalReport, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::NoClasses);
    }
    if test.is_empty() {
        return Err(EvalError::Empty);
    }
    check_disjoint(train_fake.ids().chain(train_valid.ids()), test.ids())?;
    let text = cfg.text_options();
    let lexicons = smoothed(
        build_lexicons(
            train_fake,
            train_valid,
            classes,
            cfg.count_mode,
            analyzer,
            &text,
        )?,
        cfg,
    )?;
    let analyzed = analyze_dataset(test, analyzer, &text)?;
    let refs: Vec<&AnalyzedDocument> = analyzed.iter().collect();
    Ok(EvalReport {
        config: cfg.clone(),
        train_fake: train_fake.len(),
        train_valid: train_valid.len(),
        test: test.len(),
        results: evaluate_lexicons(&lexicons, &refs, cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub class: ModelClass,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMeans {
    pub class: ModelClass,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub per_fold: Vec<FoldResult>,
    pub means: Vec<ClassMeans>,
}

/// Arithmetic mean of each metric over the given folds.
pub fn mean_metrics(per_fold: &[Metrics]) -> Metrics {
    let n = per_fold.len() as f64;
    if per_fold.is_empty() {
        return Metrics::default();
    }
    let sum = per_fold.iter().fold(Metrics::default(), |acc, m| Metrics {
        precision: acc.precision + m.precision,
        recall: acc.recall + m.recall,
        accuracy: acc.accuracy + m.accuracy,
        f1: acc.f1 + m.f1,
    });
    Metrics {
        precision: sum.precision / n,
        recall: sum.recall / n,
        accuracy: sum.accuracy / n,
        f1: sum.f1 / n,
    }
}

/// k-fold cross-validation over `ds`. Documents are analyzed once; folds run
/// in parallel and are reported in fold order.
pub fn cross_validate(
    ds: &Dataset,
    k: usize,
    classes: &[ModelClass],
    seed: u64,
    cfg: &RunConfig,
    analyzer: &dyn Analyzer,
) -> Result<CvReport, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::NoClasses);
    }
    let folds = stratified_folds(ds, k, seed)?;
    let analyzed = analyze_dataset(ds, analyzer, &cfg.text_options())?;
    let by_id: HashMap<&str, &AnalyzedDocument> =
        analyzed.iter().map(|d| (d.id.as_str(), d)).collect();

    let per_fold: Vec<Vec<FoldResult>> = folds
        .par_iter()
        .enumerate()
        .map(|(fold, f)| {
            let pick = |part: &Dataset| -> Vec<&AnalyzedDocument> {
                part.ids().map(|id| by_id[id]).collect()
            };
            let train = pick(&f.train);
            let test = pick(&f.test);
            let side = |label: Label| -> Vec<&[MorphAnalysis]> {
                train
                    .iter()
                    .filter(|d| d.label == label)
                    .map(|d| d.analyses.as_slice())
                    .collect()
            };
            let (fake, valid) = (side(Label::Fake), side(Label::Valid));
            let lexicons = classes
                .iter()
                .map(|&c| build_from_analyses(&fake, &valid, c, cfg.count_mode))
                .collect::<Result<Vec<_>, _>>()?;
            let lexicons = smoothed(lexicons, cfg)?;
            Ok(evaluate_lexicons(&lexicons, &test, cfg)?
                .into_iter()
                .map(|e| FoldResult {
                    fold,
                    class: e.class,
                    confusion: e.confusion,
                    metrics: e.metrics,
                })
                .collect())
        })
        .collect::<Result<_, EvalError>>()?;
    let per_fold: Vec<FoldResult> = per_fold.into_iter().flatten().collect();

    let means = classes
        .iter()
        .map(|&class| {
            let ms: Vec<Metrics> = per_fold
                .iter()
                .filter(|r| r.class == class)
                .map(|r| r.metrics)
                .collect();
            ClassMeans {
                class,
                metrics: mean_metrics(&ms),
            }
        })
        .collect();
    Ok(CvReport {
        folds: k,
        seed,
        config: cfg.clone(),
        per_fold,
        means,
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Mean fold metrics per class, in percent.
pub fn render_cv_table(report: &CvReport) -> String {
    let mut out = String::from("Model\tPrecision\tRecall\tAccuracy\tF1 Score\n");
    for m in &report.means {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            m.class,
            pct(m.metrics.precision),
            pct(m.metrics.recall),
            pct(m.metrics.accuracy),
            pct(m.metrics.f1)
        ));
    }
    out
}

/// Every fold's metrics, in percent.
pub fn render_fold_table(report: &CvReport) -> String {
    let mut out = String::from("Fold\tModel\tPrecision\tRecall\tAccuracy\tF1 Score\n");
    for r in &report.per_fold {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.fold + 1,
            r.class,
            pct(r.metrics.precision),
            pct(r.metrics.recall),
            pct(r.metrics.accuracy),
            pct(r.metrics.f1)
        ));
    }
    out
}

/// Confusion matrix with metrics as ratios to three decimals.
pub fn render_confusion(e: &ClassEvaluation) -> String {
    let (cm, m) = (&e.confusion, &e.metrics);
    format!(
        "{} model\n\
         Prediction\tActual Fake\tActual Valid\tPrecision\tRecall\tAccuracy\tF1 Score\n\
         Fake\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\n\
         Valid\t{}\t{}\n",
        e.class, cm.tp, cm.fp, m.precision, m.recall, m.accuracy, m.f1, cm.fn_, cm.tn
    )
}
