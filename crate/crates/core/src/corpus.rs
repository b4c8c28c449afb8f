//! Labeled document collections.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Label {
    Hate,
    Safe,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hate => "HATE",
            Label::Safe => "SAFE",
            Label::Unlabeled => "UNLABELED",
        }
    }

    /// +1 for HATE, -1 for SAFE.
    pub fn sign(self) -> Option<f64> {
        match self {
            Label::Hate => Some(1.0),
            Label::Safe => Some(-1.0),
            Label::Unlabeled => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel;

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("label must be HATE, SAFE or UNLABELED")
    }
}

impl FromStr for Label {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "HATE" => Ok(Label::Hate),
            "SAFE" => Ok(Label::Safe),
            "UNLABELED" => Ok(Label::Unlabeled),
            _ => Err(UnknownLabel),
        }
    }
}

/// One tweet-like document.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DocumentRecord {
    pub id: u64,
    /// Username without the leading `@`.
    pub author: String,
    pub text: String,
    /// Timestamp kept verbatim; may be empty.
    pub date: String,
    pub label: Label,
    /// Two-letter lowercase language code, when known.
    pub lang: Option<String>,
}

impl DocumentRecord {
    pub fn new(id: u64, author: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        DocumentRecord {
            id,
            author: author.into(),
            text: text.into(),
            date: String::new(),
            label,
            lang: None,
        }
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = Some(lang.into());
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelCounts {
    pub hate: usize,
    pub safe: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::Hate => self.hate,
            Label::Safe => self.safe,
            Label::Unlabeled => self.unlabeled,
        }
    }

    fn bump(&mut self, label: Label) {
        match label {
            Label::Hate => self.hate += 1,
            Label::Safe => self.safe += 1,
            Label::Unlabeled => self.unlabeled += 1,
        }
    }
}

/// An ordered set of records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<DocumentRecord>,
    counts: LabelCounts,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and empty texts or authors.
    pub fn from_records(records: Vec<DocumentRecord>) -> Result<Self> {
        let mut builder = CorpusBuilder::default();
        for record in records {
            let id = record.id;
            if builder.push(record)? == Pushed::Duplicate {
                return Err(Error::DuplicateId(id));
            }
        }
        Ok(builder.finish())
    }

    pub fn records(&self) -> &[DocumentRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> LabelCounts {
        self.counts
    }

    pub fn iter(&self) -> core::slice::Iter<'_, DocumentRecord> {
        self.records.iter()
    }

    pub fn into_records(self) -> Vec<DocumentRecord> {
        self.records
    }

    /// Records with the given label, in corpus order.
    pub fn with_label(&self, label: Label) -> impl Iterator<Item = &DocumentRecord> {
        self.records.iter().filter(move |r| r.label == label)
    }

    fn from_validated(records: Vec<DocumentRecord>) -> Self {
        let mut counts = LabelCounts::default();
        for r in &records {
            counts.bump(r.label);
        }
        Corpus { records, counts }
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a DocumentRecord;
    type IntoIter = core::slice::Iter<'a, DocumentRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pushed {
    Added,
    /// The id was already present; the earlier record is kept.
    Duplicate,
}

/// Incremental corpus construction with first-occurrence-wins dedup.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    seen: BTreeSet<u64>,
    records: Vec<DocumentRecord>,
    duplicates: usize,
}

impl CorpusBuilder {
    pub fn push(&mut self, record: DocumentRecord) -> Result<Pushed> {
        if record.text.trim().is_empty() {
            return Err(Error::EmptyText(record.id));
        }
        if record.author.is_empty() {
            return Err(Error::EmptyAuthor(record.id));
        }
        if !self.seen.insert(record.id) {
            self.duplicates += 1;
            return Ok(Pushed::Duplicate);
        }
        self.records.push(record);
        Ok(Pushed::Added)
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn finish(self) -> Corpus {
        Corpus::from_validated(self.records)
    }
}

/// Subsamples the majority class so HATE and SAFE counts match.
///
/// Unlabeled records are dropped. Kept records stay in their original
/// relative order; the choice of majority records depends only on `seed`.
pub fn balance(corpus: &Corpus, seed: u64) -> Result<Corpus> {
    let counts = corpus.counts();
    for label in [Label::Hate, Label::Safe] {
        if counts.get(label) == 0 {
            return Err(Error::MissingClass(label));
        }
    }
    let target = counts.hate.min(counts.safe);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = alloc::vec![false; corpus.len()];
    for label in [Label::Hate, Label::Safe] {
        let mut positions: Vec<usize> = (0..corpus.len())
            .filter(|&i| corpus.records[i].label == label)
            .collect();
        if positions.len() > target {
            positions.shuffle(&mut rng);
            positions.truncate(target);
        }
        for i in positions {
            keep[i] = true;
        }
    }
    let records = corpus
        .records
        .iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then(|| r.clone()))
        .collect();
    Ok(Corpus::from_validated(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn corpus(hate: usize, safe: usize) -> Corpus {
        let records = (0..hate + safe)
            .map(|i| {
                let label = if i < hate { Label::Hate } else { Label::Safe };
                DocumentRecord::new(i as u64, "u", format!("doc {i}"), label)
            })
            .collect();
        Corpus::from_records(records).unwrap()
    }

    #[test]
    fn counts_follow_records() {
        let c = corpus(3, 5);
        assert_eq!(c.counts(), LabelCounts { hate: 3, safe: 5, unlabeled: 0 });
    }

    #[test]
    fn builder_keeps_first_duplicate() {
        let mut b = CorpusBuilder::default();
        assert_eq!(b.push(DocumentRecord::new(7, "a", "first", Label::Hate)), Ok(Pushed::Added));
        assert_eq!(b.push(DocumentRecord::new(7, "a", "second", Label::Safe)), Ok(Pushed::Duplicate));
        assert_eq!(b.duplicates(), 1);
        let c = b.finish();
        assert_eq!(c.len(), 1);
        assert_eq!(c.records()[0].text, "first");
    }

    #[test]
    fn rejects_empty_text_and_duplicates() {
        let mut b = CorpusBuilder::default();
        assert_eq!(b.push(DocumentRecord::new(1, "a", "  ", Label::Hate)), Err(Error::EmptyText(1)));
        assert_eq!(b.push(DocumentRecord::new(1, "", "x", Label::Hate)), Err(Error::EmptyAuthor(1)));
        let dup = alloc::vec![
            DocumentRecord::new(1, "a", "x", Label::Hate),
            DocumentRecord::new(1, "a", "y", Label::Hate),
        ];
        assert_eq!(Corpus::from_records(dup), Err(Error::DuplicateId(1)));
    }

    #[test]
    fn balance_equalizes_classes() {
        let b = balance(&corpus(10, 20), 1).unwrap();
        assert_eq!(b.counts().hate, 10);
        assert_eq!(b.counts().safe, 10);
    }

    #[test]
    fn balance_is_noop_when_balanced() {
        let c = corpus(4, 4);
        assert_eq!(balance(&c, 9).unwrap(), c);
    }

    #[test]
    fn balance_is_seeded() {
        let c = corpus(3, 100);
        let ids = |b: &Corpus| b.iter().map(|r| r.id).collect::<Vec<_>>();
        assert_eq!(ids(&balance(&c, 5).unwrap()), ids(&balance(&c, 5).unwrap()));
        assert_ne!(ids(&balance(&c, 5).unwrap()), ids(&balance(&c, 6).unwrap()));
    }

    #[test]
    fn balance_needs_both_classes() {
        assert_eq!(balance(&corpus(0, 3), 0), Err(Error::MissingClass(Label::Hate)));
        assert_eq!(balance(&corpus(3, 0), 0), Err(Error::MissingClass(Label::Safe)));
    }

    #[test]
    fn label_round_trips_through_str() {
        for l in [Label::Hate, Label::Safe, Label::Unlabeled] {
            assert_eq!(l.as_str().parse::<Label>(), Ok(l));
        }
        assert!("hate".parse::<Label>().is_err());
    }
}
