//! Trigram vocabularies and L2-normalized sparse count vectors.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::text::{normalize, trigram_spans};

/// A frozen trigram → index map.
///
/// Indices run `0..len()` in lexicographic byte order of the trigrams, so two
/// vocabularies over the same feature set are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    features: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from an arbitrary feature list; duplicates fold.
    pub fn from_features<I, S>(features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut features: Vec<String> = features.into_iter().map(Into::into).collect();
        features.sort_unstable();
        features.dedup();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        Vocabulary { features, index }
    }

    /// Trigrams occurring in at least `min_df` of the given normalized texts.
    pub fn fit_texts<'a, I>(texts: I, min_df: usize) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut df: HashMap<&'a str, usize> = HashMap::new();
        let mut seen: HashSet<&'a str> = HashSet::new();
        for text in texts {
            seen.clear();
            for (_, gram) in trigram_spans(text) {
                if seen.insert(gram) {
                    *df.entry(gram).or_insert(0) += 1;
                }
            }
        }
        let min_df = min_df.max(1);
        Self::from_features(df.into_iter().filter(|&(_, n)| n >= min_df).map(|(g, _)| g))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, trigram: &str) -> Option<u32> {
        self.index.get(trigram).copied()
    }

    pub fn feature(&self, index: u32) -> Option<&str> {
        self.features.get(index as usize).map(String::as_str)
    }

    /// Features in index order.
    pub fn features(&self) -> &[String] {
        &self.features
    }
}

/// Fits a vocabulary on the normalized texts of `corpus`.
pub fn fit_vocabulary(corpus: &Corpus, min_df: usize) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let texts: Vec<String> = corpus.iter().map(|r| normalize(&r.text)).collect();
    Ok(Vocabulary::fit_texts(texts.iter().map(String::as_str), min_df))
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sums duplicate indices, drops zeros and scales to unit Euclidean norm.
    /// An all-zero input yields the empty vector.
    pub fn normalized_from_counts<I>(counts: I) -> Self
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut v = Self::from_entries(counts);
        let norm = v.norm();
        if norm > 0.0 {
            for (_, w) in &mut v.entries {
                *w /= norm;
            }
        }
        v
    }

    /// Raw (unnormalized) vector; duplicate indices are summed.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut raw: Vec<(u32, f64)> = entries.into_iter().collect();
        raw.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
        for (i, w) in raw {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => entries.push((i, w)),
            }
        }
        entries.retain(|&(_, w)| w != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.squared_norm())
    }

    /// Dot product with a dense vector. Indices past its end count as zero.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| dense.get(i as usize).map_or(0.0, |d| d * w))
            .sum()
    }

    pub fn dot_sparse(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                core::cmp::Ordering::Less => {
                    a.next();
                }
                core::cmp::Ordering::Greater => {
                    b.next();
                }
                core::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }
}

/// Count vector of the trigrams of `text` that are in `vocab`, L2-normalized.
///
/// `text` must already be normalized.
pub fn vectorize(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut hits: Vec<u32> = trigram_spans(text).filter_map(|(_, g)| vocab.get(g)).collect();
    hits.sort_unstable();
    let mut counts: Vec<(u32, f64)> = Vec::new();
    for i in hits {
        match counts.last_mut() {
            Some((j, n)) if *j == i => *n += 1.0,
            _ => counts.push((i, 1.0)),
        }
    }
    SparseVector::normalized_from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocumentRecord, Label};
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    fn vocab(features: &[&str]) -> Vocabulary {
        Vocabulary::from_features(features.iter().copied())
    }

    #[test]
    fn fit_enumerates_trigrams() {
        let v = Vocabulary::fit_texts(["abcd"], 1);
        assert_eq!(v.features(), ["abc", "bcd"]);
        assert_eq!(Vocabulary::fit_texts(["abc", "abc"], 1).len(), 1);
    }

    #[test]
    fn min_df_prunes_rare_trigrams() {
        let v = Vocabulary::fit_texts(["abcd", "abce"], 2);
        assert_eq!(v.features(), ["abc"]);
    }

    #[test]
    fn fit_vocabulary_rejects_empty_corpus() {
        assert_eq!(fit_vocabulary(&Corpus::default(), 1), Err(Error::EmptyCorpus));
    }

    #[test]
    fn fit_vocabulary_normalizes() {
        let c = Corpus::from_records(vec![DocumentRecord::new(1, "a", "#ABC", Label::Hate)]).unwrap();
        assert_eq!(fit_vocabulary(&c, 1).unwrap().features(), ["abc"]);
    }

    #[test]
    fn fitting_is_deterministic() {
        let texts: Vec<String> = (0..100u32)
            .map(|i| format!("doc {} {} {}", i * 7919 % 113, i % 13, i * 31 % 17))
            .collect();
        let a = Vocabulary::fit_texts(texts.iter().map(String::as_str), 1);
        let b = Vocabulary::fit_texts(texts.iter().rev().map(String::as_str), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn single_feature_normalizes_to_one() {
        let x = vectorize("aaaa", &vocab(&["aaa"]));
        assert_eq!(x.entries(), [(0, 1.0)]);
    }

    #[test]
    fn kuffar_weights_are_half() {
        let x = vectorize("kuffar", &vocab(&["far", "ffa", "kuf", "uff", "zzz"]));
        assert_eq!(x.entries(), [(0, 0.5), (1, 0.5), (2, 0.5), (3, 0.5)]);
    }

    #[test]
    fn no_overlap_gives_empty_vector() {
        assert!(vectorize("zzz", &vocab(&["abc"])).is_empty());
    }

    #[test]
    fn sparse_dot_products() {
        let a = SparseVector::from_entries([(0, 1.0), (2, 2.0), (5, 1.0)]);
        let b = SparseVector::from_entries([(2, 3.0), (5, -1.0), (9, 4.0)]);
        assert_eq!(a.dot_sparse(&b), 5.0);
        assert_eq!(a.dot(&[1.0, 0.0, 0.5]), 2.0);
    }

    proptest! {
        #[test]
        fn vectors_have_unit_norm(text in "[a-c ]{0,40}") {
            let v = Vocabulary::fit_texts([text.as_str(), "abc cab"], 1);
            let x = vectorize(&text, &v);
            if !x.is_empty() {
                prop_assert!((x.norm() - 1.0).abs() < 1e-9);
                prop_assert!(x.entries().windows(2).all(|w| w[0].0 < w[1].0));
            }
        }

        #[test]
        fn scaling_counts_is_absorbed(
            counts in proptest::collection::vec((0u32..50, 1u32..20), 1..20),
            scale in 1u32..1000,
        ) {
            let raw = counts.iter().map(|&(i, c)| (i, f64::from(c)));
            let scaled = counts.iter().map(|&(i, c)| (i, f64::from(c) * f64::from(scale)));
            let a = SparseVector::normalized_from_counts(raw);
            let b = SparseVector::normalized_from_counts(scaled);
            for (x, y) in a.entries().iter().zip(b.entries()) {
                prop_assert_eq!(x.0, y.0);
                prop_assert!((x.1 - y.1).abs() < 1e-12);
            }
        }
    }
}
