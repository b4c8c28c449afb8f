//! Trained classifier: vocabulary plus per-trigram weights.

use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::svm::{self, SolveStats, TrainConfig};
use crate::text::normalize;
use crate::vocab::{vectorize, SparseVector, Vocabulary};

/// Version of the on-disk model layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
    /// No trigram of the text is in the vocabulary; the label is the sign
    /// of the bias alone.
    pub low_confidence: bool,
}

/// One trigram's share of a score.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Contribution {
    pub trigram: String,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    vocabulary: Vocabulary,
    weights: Vec<f64>,
    bias: f64,
    format_version: u32,
    config: Option<TrainConfig>,
}

impl LinearModel {
    pub fn new(vocabulary: Vocabulary, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() != vocabulary.len() {
            return Err(Error::InvalidConfig(alloc::format!(
                "{} weights for {} features",
                weights.len(),
                vocabulary.len()
            )));
        }
        if let Some(w) = weights.iter().chain([&bias]).find(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter { name: "weight", value: *w });
        }
        Ok(LinearModel {
            vocabulary,
            weights,
            bias,
            format_version: FORMAT_VERSION,
            config: None,
        })
    }

    /// Fits the vocabulary and trains the SVM on every record of `corpus`.
    pub fn fit(corpus: &Corpus, config: &TrainConfig, min_df: usize) -> Result<(Self, SolveStats)> {
        let unlabeled: Vec<u64> = corpus.with_label(Label::Unlabeled).map(|r| r.id).collect();
        if !unlabeled.is_empty() {
            return Err(Error::UnlabeledRecords(unlabeled));
        }
        let texts: Vec<String> = corpus.iter().map(|r| normalize(&r.text)).collect();
        let labels: Vec<Label> = corpus.iter().map(|r| r.label).collect();
        Self::fit_normalized(&texts, &labels, config, min_df)
    }

    /// Like [`LinearModel::fit`] for texts that are already normalized.
    pub fn fit_normalized(
        texts: &[String],
        labels: &[Label],
        config: &TrainConfig,
        min_df: usize,
    ) -> Result<(Self, SolveStats)> {
        if texts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let vocabulary = Vocabulary::fit_texts(texts.iter().map(String::as_str), min_df);
        let vectors: Vec<SparseVector> = texts.iter().map(|t| vectorize(t, &vocabulary)).collect();
        let svm = svm::train(&vectors, labels, vocabulary.len(), config)?;
        let mut model = Self::new(vocabulary, svm.weights, svm.bias)?;
        model.config = Some(*config);
        Ok((model, svm.stats))
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    /// Training configuration, when the model was trained in this process.
    pub fn config(&self) -> Option<&TrainConfig> {
        self.config.as_ref()
    }

    pub fn weight(&self, trigram: &str) -> Option<f64> {
        self.vocabulary.get(trigram).map(|i| self.weights[i as usize])
    }

    pub fn score_vector(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn vectorize(&self, normalized: &str) -> SparseVector {
        vectorize(normalized, &self.vocabulary)
    }

    /// Classifies a raw text. A score of exactly zero is SAFE.
    pub fn predict(&self, text: &str) -> Prediction {
        self.predict_normalized(&normalize(text))
    }

    pub fn predict_normalized(&self, normalized: &str) -> Prediction {
        let x = self.vectorize(normalized);
        let score = self.score_vector(&x);
        Prediction {
            label: if score > 0.0 { Label::Hate } else { Label::Safe },
            score,
            low_confidence: x.is_empty(),
        }
    }

    /// The `k` trigrams of `text` with the largest `|weight · value|`.
    /// Ties are broken by trigram order.
    pub fn explain(&self, text: &str, k: usize) -> Vec<Contribution> {
        let x = self.vectorize(&normalize(text));
        let mut parts: Vec<(u32, f64)> = x
            .entries()
            .iter()
            .map(|&(i, v)| (i, self.weights[i as usize] * v))
            .collect();
        parts.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        parts
            .into_iter()
            .take(k)
            .map(|(i, contribution)| Contribution {
                trigram: String::from(self.vocabulary.feature(i).unwrap_or_default()),
                contribution,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentRecord;
    use alloc::vec;

    fn toy() -> LinearModel {
        let corpus = Corpus::from_records(vec![
            DocumentRecord::new(1, "a", "aaa", Label::Hate),
            DocumentRecord::new(2, "b", "bbb", Label::Safe),
        ])
        .unwrap();
        LinearModel::fit(&corpus, &TrainConfig::default(), 1).unwrap().0
    }

    #[test]
    fn separable_toy_predictions() {
        let m = toy();
        assert_eq!(m.predict("aaa").label, Label::Hate);
        assert_eq!(m.predict("bbb").label, Label::Safe);
        assert_eq!(m.predict("aaa aaa").label, Label::Hate);
        assert_eq!(m.predict("AAA aaa"), m.predict("aaa aaa"));
    }

    #[test]
    fn empty_text_is_low_confidence() {
        let m = toy();
        let p = m.predict("");
        assert!(p.low_confidence);
        assert_eq!(p.score, m.bias());
        assert_eq!(p.label, if m.bias() > 0.0 { Label::Hate } else { Label::Safe });
    }

    #[test]
    fn zero_score_is_safe() {
        let m = LinearModel::new(Vocabulary::from_features(["abc"]), vec![0.0], 0.0).unwrap();
        assert_eq!(m.predict("abc").label, Label::Safe);
    }

    #[test]
    fn explain_ranks_by_magnitude() {
        let vocab = Vocabulary::from_features(["abc", "bcd", "cde"]);
        let m = LinearModel::new(vocab, vec![0.1, -2.0, 1.0], 0.0).unwrap();
        let top = m.explain("abcde", 2);
        assert_eq!(top[0].trigram, "bcd");
        assert_eq!(top[1].trigram, "cde");
    }

    #[test]
    fn rejects_inconsistent_weights() {
        let vocab = Vocabulary::from_features(["abc"]);
        assert!(LinearModel::new(vocab.clone(), vec![], 0.0).is_err());
        assert!(LinearModel::new(vocab, vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn fit_rejects_unlabeled() {
        let corpus = Corpus::from_records(vec![
            DocumentRecord::new(1, "a", "aaa", Label::Hate),
            DocumentRecord::new(2, "b", "bbb", Label::Unlabeled),
        ])
        .unwrap();
        assert_eq!(
            LinearModel::fit(&corpus, &TrainConfig::default(), 1).unwrap_err(),
            Error::UnlabeledRecords(vec![2])
        );
    }
}
