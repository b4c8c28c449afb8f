//! Confusion matrices, precision/recall/F1 and stratified cross-validation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::model::LinearModel;
use crate::svm::TrainConfig;
use crate::text::normalize;

/// Document counts for one class taken as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same predictions seen with the other class as positive.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix { tp: self.tn, tn: self.tp, fp: self.fn_, fn_: self.fp }
    }

    /// Adds one (actual, predicted) outcome with `positive` as the positive class.
    pub fn record(&mut self, positive: Label, actual: Label, predicted: Label) {
        match (actual == positive, predicted == positive) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total()).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Some ratio was 0/0 and was taken as 0.
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(p: f64, r: f64) -> Option<f64> {
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

/// Precision `tp/(tp+fp)`, recall `tp/(tp+fn)` and their harmonic mean.
pub fn metrics(m: &ConfusionMatrix) -> Metrics {
    let p = ratio(m.tp, m.tp + m.fp);
    let r = ratio(m.tp, m.tp + m.fn_);
    let (precision, recall) = (p.unwrap_or(0.0), r.unwrap_or(0.0));
    let f1 = harmonic(precision, recall);
    Metrics {
        precision,
        recall,
        f1: f1.unwrap_or(0.0),
        degenerate: p.is_none() || r.is_none() || f1.is_none(),
    }
}

/// HATE-as-positive and SAFE-as-positive matrices of one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMatrices {
    pub hate: ConfusionMatrix,
    pub safe: ConfusionMatrix,
}

impl ClassMatrices {
    pub fn from_hate(hate: ConfusionMatrix) -> Self {
        ClassMatrices { hate, safe: hate.swapped() }
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        self.hate.record(Label::Hate, actual, predicted);
        self.safe.record(Label::Safe, actual, predicted);
    }

    /// Precision and recall averaged over the two classes.
    pub fn macro_metrics(&self) -> Metrics {
        let (h, s) = (metrics(&self.hate), metrics(&self.safe));
        let precision = (h.precision + s.precision) / 2.0;
        let recall = (h.recall + s.recall) / 2.0;
        let f1 = harmonic(precision, recall);
        Metrics {
            precision,
            recall,
            f1: f1.unwrap_or(0.0),
            degenerate: h.degenerate || s.degenerate || f1.is_none(),
        }
    }
}

/// Averages class-averaged precision and recall over folds; F1 is the
/// harmonic mean of the two averages.
pub fn macro_metrics(folds: &[ClassMatrices]) -> Result<Metrics> {
    if folds.is_empty() {
        return Err(Error::EmptyFoldList);
    }
    let per_fold: Vec<Metrics> = folds.iter().map(ClassMatrices::macro_metrics).collect();
    let n = per_fold.len() as f64;
    let precision = per_fold.iter().map(|m| m.precision).sum::<f64>() / n;
    let recall = per_fold.iter().map(|m| m.recall).sum::<f64>() / n;
    let f1 = harmonic(precision, recall);
    Ok(Metrics {
        precision,
        recall,
        f1: f1.unwrap_or(0.0),
        degenerate: per_fold.iter().any(|m| m.degenerate) || f1.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub validation_size: usize,
    pub vocabulary_size: usize,
    pub class_matrices: ClassMatrices,
    pub metrics: Metrics,
    pub converged: bool,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LanguageReport {
    pub documents: usize,
    pub class_matrices: ClassMatrices,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvReport {
    pub k: usize,
    pub folds: Vec<FoldReport>,
    #[cfg_attr(feature = "serde", serde(rename = "macro"))]
    pub macro_avg: Metrics,
    /// Validation predictions pooled over folds, grouped by language tag.
    pub per_language: BTreeMap<String, LanguageReport>,
}

/// Assigns each position a fold in `0..k`, stratified by label.
///
/// Within each class the positions are shuffled with `seed` and dealt
/// round-robin, so every fold's class counts differ by at most one. The deal
/// continues across classes so fold sizes also differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in [Label::Hate, Label::Safe, Label::Unlabeled] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % k;
            next += 1;
        }
    }
    assignment
}

/// Stratified k-fold cross-validation. The vocabulary is refit on each
/// training portion; fold `f` trains with seed `config.seed + f`.
pub fn cross_validate(
    corpus: &Corpus,
    k: usize,
    config: &TrainConfig,
    min_df: usize,
) -> Result<CvReport> {
    let unlabeled: Vec<u64> = corpus.with_label(Label::Unlabeled).map(|r| r.id).collect();
    if !unlabeled.is_empty() {
        return Err(Error::UnlabeledRecords(unlabeled));
    }
    let counts = corpus.counts();
    for label in [Label::Hate, Label::Safe] {
        if counts.get(label) == 0 {
            return Err(Error::MissingClass(label));
        }
    }
    let smallest = counts.hate.min(counts.safe);
    if k < 2 || k > smallest {
        return Err(Error::InvalidFoldCount { k, max: smallest });
    }
    config.validate()?;

    let texts: Vec<String> = corpus.iter().map(|r| normalize(&r.text)).collect();
    let labels: Vec<Label> = corpus.iter().map(|r| r.label).collect();
    let assignment = stratified_folds(&labels, k, config.seed);

    let mut folds = Vec::with_capacity(k);
    let mut per_language: BTreeMap<String, LanguageReport> = BTreeMap::new();
    for fold in 0..k {
        let (mut train_texts, mut train_labels) = (Vec::new(), Vec::new());
        for (i, &f) in assignment.iter().enumerate() {
            if f != fold {
                train_texts.push(texts[i].clone());
                train_labels.push(labels[i]);
            }
        }
        let fold_config = TrainConfig { seed: config.seed.wrapping_add(fold as u64), ..*config };
        let (model, stats) =
            LinearModel::fit_normalized(&train_texts, &train_labels, &fold_config, min_df)?;

        let mut matrices = ClassMatrices::default();
        let mut validation_size = 0;
        for (i, record) in corpus.iter().enumerate().filter(|&(i, _)| assignment[i] == fold) {
            let predicted = model.predict_normalized(&texts[i]).label;
            matrices.record(record.label, predicted);
            validation_size += 1;
            if let Some(lang) = &record.lang {
                let entry = per_language.entry(lang.clone()).or_insert_with(|| LanguageReport {
                    documents: 0,
                    class_matrices: ClassMatrices::default(),
                    metrics: Metrics::default(),
                });
                entry.documents += 1;
                entry.class_matrices.record(record.label, predicted);
            }
        }
        folds.push(FoldReport {
            fold,
            train_size: train_texts.len(),
            validation_size,
            vocabulary_size: model.vocabulary().len(),
            class_matrices: matrices,
            metrics: matrices.macro_metrics(),
            converged: stats.converged,
            epochs: stats.epochs,
        });
    }
    for report in per_language.values_mut() {
        report.metrics = report.class_matrices.macro_metrics();
    }
    let matrices: Vec<ClassMatrices> = folds.iter().map(|f| f.class_matrices).collect();
    Ok(CvReport { k, folds, macro_avg: macro_metrics(&matrices)?, per_language })
}

/// Out-of-domain evaluation of a trained model on a labeled corpus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainReport {
    pub documents: usize,
    pub accuracy: f64,
    /// Share of true HATE records predicted HATE; `None` without HATE records.
    pub flag_rate_hate: Option<f64>,
    /// Share of true SAFE records predicted HATE; `None` without SAFE records.
    pub flag_rate_safe: Option<f64>,
    pub class_matrices: ClassMatrices,
}

pub fn cross_domain_eval(model: &LinearModel, corpus: &Corpus) -> Result<DomainReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let unlabeled: Vec<u64> = corpus.with_label(Label::Unlabeled).map(|r| r.id).collect();
    if !unlabeled.is_empty() {
        return Err(Error::UnlabeledRecords(unlabeled));
    }
    let mut matrices = ClassMatrices::default();
    for record in corpus {
        matrices.record(record.label, model.predict(&record.text).label);
    }
    let h = matrices.hate;
    Ok(DomainReport {
        documents: corpus.len(),
        accuracy: h.accuracy(),
        flag_rate_hate: ratio(h.tp, h.tp + h.fn_),
        flag_rate_safe: ratio(h.fp, h.fp + h.tn),
        class_matrices: matrices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentRecord;
    use crate::vocab::Vocabulary;
    use alloc::format;

    const TEST1: ConfusionMatrix = ConfusionMatrix { tp: 12725, tn: 11963, fp: 2887, fn_: 2425 };

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn first_fold_hate_metrics() {
        // 12725/15612, 12725/15150 and their harmonic mean, by hand.
        let m = metrics(&TEST1);
        assert!(close(m.precision, 0.81508, 1e-5));
        assert!(close(m.recall, 0.83993, 1e-5));
        assert!(close(m.f1, 0.82731, 1e-5));
        assert!(!m.degenerate);
    }

    #[test]
    fn perfect_and_degenerate() {
        let m = metrics(&ConfusionMatrix::new(10, 10, 0, 0));
        assert_eq!((m.precision, m.recall, m.f1, m.degenerate), (1.0, 1.0, 1.0, false));
        let m = metrics(&ConfusionMatrix::new(0, 5, 0, 5));
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.degenerate);
    }

    #[test]
    fn macro_averaging_properties() {
        assert_eq!(macro_metrics(&[]), Err(Error::EmptyFoldList));
        let perfect = ClassMatrices::from_hate(ConfusionMatrix::new(5, 5, 0, 0));
        let m = macro_metrics(&[perfect]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let fold = ClassMatrices::from_hate(TEST1);
        assert_eq!(macro_metrics(&[fold]).unwrap(), macro_metrics(&[fold, fold]).unwrap());
    }

    #[test]
    fn record_keeps_class_matrices_transposed() {
        let mut m = ClassMatrices::default();
        for (a, p) in [(Label::Hate, Label::Hate), (Label::Hate, Label::Safe), (Label::Safe, Label::Hate)] {
            m.record(a, p);
        }
        assert_eq!(m.safe, m.hate.swapped());
        assert_eq!(m.hate, ConfusionMatrix::new(1, 0, 1, 1));
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<Label> = (0..103).map(|i| if i % 3 == 0 { Label::Hate } else { Label::Safe }).collect();
        let a = stratified_folds(&labels, 3, 7);
        assert_eq!(a, stratified_folds(&labels, 3, 7));
        for class in [Label::Hate, Label::Safe] {
            let per_fold: Vec<usize> = (0..3)
                .map(|f| a.iter().zip(&labels).filter(|&(&g, &l)| g == f && l == class).count())
                .collect();
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            assert!(hi - lo <= 1, "{per_fold:?}");
        }
    }

    fn toy_corpus(n: usize) -> Corpus {
        let records = (0..n)
            .map(|i| {
                let (label, text) = if i % 2 == 0 {
                    (Label::Hate, format!("kuffar rage {i}"))
                } else {
                    (Label::Safe, format!("football match {i}"))
                };
                let lang = if i % 3 == 0 { "en" } else { "fr" };
                DocumentRecord::new(i as u64, "u", text, label).with_lang(lang)
            })
            .collect();
        Corpus::from_records(records).unwrap()
    }

    #[test]
    fn cross_validation_on_separable_toy() {
        let c = toy_corpus(30);
        let r = cross_validate(&c, 3, &TrainConfig::default(), 1).unwrap();
        assert_eq!(r.folds.len(), 3);
        assert_eq!(r.folds.iter().map(|f| f.class_matrices.hate.total()).sum::<u64>(), 30);
        assert_eq!(r.macro_avg.f1, 1.0);
        let langs: usize = r.per_language.values().map(|l| l.documents).sum();
        assert_eq!(langs, 30);
        assert_eq!(r, cross_validate(&c, 3, &TrainConfig::default(), 1).unwrap());
    }

    #[test]
    fn cross_validation_errors() {
        let c = toy_corpus(4);
        assert_eq!(
            cross_validate(&c, 5, &TrainConfig::default(), 1).unwrap_err(),
            Error::InvalidFoldCount { k: 5, max: 2 }
        );
        assert!(cross_validate(&c, 1, &TrainConfig::default(), 1).is_err());
        let mut records = c.into_records();
        records[0].label = Label::Unlabeled;
        let c = Corpus::from_records(records).unwrap();
        assert_eq!(
            cross_validate(&c, 2, &TrainConfig::default(), 1).unwrap_err(),
            Error::UnlabeledRecords(vec![0])
        );
    }

    #[test]
    fn cross_domain_extremes() {
        let c = toy_corpus(10);
        let model = LinearModel::fit(&c, &TrainConfig::default(), 1).unwrap().0;
        assert_eq!(cross_domain_eval(&model, &c).unwrap().accuracy, 1.0);

        let flag_all = LinearModel::new(Vocabulary::from_features(["abc"]), vec![0.0], 1.0).unwrap();
        let safe = Corpus::from_records(
            (0..4).map(|i| DocumentRecord::new(i, "u", "hello", Label::Safe)).collect(),
        )
        .unwrap();
        let r = cross_domain_eval(&flag_all, &safe).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.flag_rate_safe, Some(1.0));
        assert_eq!(r.flag_rate_hate, None);
        assert_eq!(cross_domain_eval(&flag_all, &Corpus::default()), Err(Error::EmptyCorpus));
    }
}
