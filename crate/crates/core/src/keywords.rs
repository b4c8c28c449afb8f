//! Keyword bias statistics, word trees and place-mention counts.
//!
//! All counts are per document: a word that appears three times in one tweet
//! counts once (raw occurrence counts are reported alongside).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::text::{normalize, tokens};

/// Upper-tail critical values of χ² with one degree of freedom.
const CRITICAL_VALUES: [(f64, f64); 6] = [
    (0.1, 2.706),
    (0.05, 3.841),
    (0.025, 5.024),
    (0.01, 6.635),
    (0.005, 7.879),
    (0.001, 10.828),
];

/// Upper-tail probability of χ²(1): `P(X ≥ x) = erfc(√(x/2))`.
pub fn chi2_p_value(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    libm::erfc(libm::sqrt(x / 2.0))
}

/// Critical value of χ²(1) at level `alpha`. Tabulated levels use the
/// customary three-decimal values; others are solved for by bisection.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter { name: "alpha", value: alpha });
    }
    if let Some(&(_, v)) = CRITICAL_VALUES.iter().find(|(a, _)| *a == alpha) {
        return Ok(v);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while chi2_p_value(hi) > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_p_value(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Pearson χ² of the 2×2 table `[[a, b], [c, d]]` without continuity
/// correction; zero when a margin is empty.
pub fn chi2_2x2(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let n = a + b + c + d;
    let den = (a + b) * (c + d) * (a + c) * (b + d);
    if den == 0.0 {
        return 0.0;
    }
    let diff = a * d - b * c;
    n * diff * diff / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeywordConfig {
    pub alpha: f64,
    /// Minimum number of documents containing the word.
    pub min_count: u64,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig { alpha: 0.01, min_count: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KeywordStat {
    pub word: String,
    /// HATE documents containing the word.
    pub count_hate: u64,
    /// SAFE documents containing the word.
    pub count_safe: u64,
    /// Raw occurrences in HATE documents.
    pub occurrences_hate: u64,
    /// Raw occurrences in SAFE documents.
    pub occurrences_safe: u64,
    pub chi2: f64,
    pub p_value: f64,
    /// Posterior probability that a document containing the word is HATE.
    pub p_hate: f64,
    pub significant: bool,
}

impl KeywordStat {
    pub fn documents(&self) -> u64 {
        self.count_hate + self.count_safe
    }
}

/// Fraction of documents containing a word that are HATE.
pub fn posterior_hate(count_hate: u64, count_safe: u64) -> f64 {
    let total = count_hate + count_safe;
    if total == 0 {
        return 0.0;
    }
    count_hate as f64 / total as f64
}

#[derive(Default)]
struct Tally {
    docs: [u64; 2],
    occurrences: [u64; 2],
}

/// χ² keyword bias over whitespace tokens of normalized text, sorted by
/// descending χ² and then by word. Unlabeled records are ignored.
pub fn keyword_bias(corpus: &Corpus, config: &KeywordConfig) -> Result<Vec<KeywordStat>> {
    let critical = critical_value(config.alpha)?;
    let counts = corpus.counts();
    for label in [Label::Hate, Label::Safe] {
        if counts.get(label) == 0 {
            return Err(Error::MissingClass(label));
        }
    }
    let (n_hate, n_safe) = (counts.hate as u64, counts.safe as u64);

    let mut tallies: HashMap<String, Tally> = HashMap::new();
    for record in corpus {
        let class = match record.label {
            Label::Hate => 0,
            Label::Safe => 1,
            Label::Unlabeled => continue,
        };
        let text = normalize(&record.text);
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for token in tokens(&text) {
            let tally = tallies.entry_ref(token).or_default();
            tally.occurrences[class] += 1;
            if seen.insert(token) {
                tally.docs[class] += 1;
            }
        }
    }

    let mut stats: Vec<KeywordStat> = tallies
        .into_iter()
        .filter(|(_, t)| t.docs[0] + t.docs[1] >= config.min_count)
        .map(|(word, t)| {
            let (a, b) = (t.docs[0], t.docs[1]);
            let chi2 = chi2_2x2(a, b, n_hate - a, n_safe - b);
            KeywordStat {
                word,
                count_hate: a,
                count_safe: b,
                occurrences_hate: t.occurrences[0],
                occurrences_safe: t.occurrences[1],
                chi2,
                p_value: chi2_p_value(chi2),
                p_hate: posterior_hate(a, b),
                significant: chi2 >= critical,
            }
        })
        .collect();
    stats.sort_by(|x, y| y.chi2.total_cmp(&x.chi2).then_with(|| x.word.cmp(&y.word)));
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    /// Contexts preceding the keyword, nearest token first.
    Left,
    /// Contexts following the keyword.
    Right,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Branch {
    pub count: u64,
    pub children: BTreeMap<String, Branch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WordTree {
    pub keyword: String,
    pub direction: Direction,
    pub depth: usize,
    /// Occurrences of the keyword.
    pub count: u64,
    pub branches: BTreeMap<String, Branch>,
}

/// Aggregates the `depth` tokens on one side of every keyword occurrence
/// into a prefix tree. Matching is token-exact on normalized text; a
/// multi-word keyword matches as a phrase.
pub fn word_tree(corpus: &Corpus, keyword: &str, direction: Direction, depth: usize) -> Result<WordTree> {
    if depth == 0 {
        return Err(Error::InvalidParameter { name: "depth", value: 0.0 });
    }
    let keyword = normalize(keyword);
    let phrase: Vec<&str> = tokens(&keyword).collect();
    let mut tree = WordTree {
        keyword: keyword.clone(),
        direction,
        depth,
        count: 0,
        branches: BTreeMap::new(),
    };
    if phrase.is_empty() {
        return Ok(tree);
    }
    for record in corpus {
        let text = normalize(&record.text);
        let toks: Vec<&str> = tokens(&text).collect();
        for start in phrase_matches(&toks, &phrase) {
            tree.count += 1;
            let context: Vec<&str> = match direction {
                Direction::Right => toks[start + phrase.len()..].iter().take(depth).copied().collect(),
                Direction::Left => toks[..start].iter().rev().take(depth).copied().collect(),
            };
            let mut level = &mut tree.branches;
            for token in context {
                let branch = level.entry(String::from(token)).or_default();
                branch.count += 1;
                level = &mut branch.children;
            }
        }
    }
    Ok(tree)
}

fn phrase_matches<'a>(toks: &'a [&str], phrase: &'a [&str]) -> impl Iterator<Item = usize> + 'a {
    toks.windows(phrase.len())
        .enumerate()
        .filter(move |(_, w)| *w == phrase)
        .map(|(i, _)| i)
}

/// Token for gazetteer matching: edge punctuation stripped.
fn mention_token(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Counts documents mentioning each place.
///
/// `gazetteer` maps a name or alias (matched case-insensitively as a whole
/// token or token phrase, ignoring surrounding punctuation) to a canonical
/// place. A document counts at most once per place.
pub fn mention_scan<'a, I>(corpus: &Corpus, gazetteer: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let entries: Vec<(Vec<String>, &str)> = gazetteer
        .into_iter()
        .filter_map(|(name, place)| {
            let name = normalize(name);
            let phrase: Vec<String> = tokens(&name)
                .map(mention_token)
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect();
            (!phrase.is_empty()).then_some((phrase, place))
        })
        .collect();

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut hit: BTreeSet<&str> = BTreeSet::new();
    for record in corpus {
        let text = normalize(&record.text);
        let toks: Vec<&str> = tokens(&text).map(mention_token).filter(|t| !t.is_empty()).collect();
        hit.clear();
        for (phrase, place) in &entries {
            if hit.contains(place) {
                continue;
            }
            let found = toks
                .windows(phrase.len())
                .any(|w| w.iter().zip(phrase).all(|(a, b)| *a == b.as_str()));
            if found {
                hit.insert(place);
            }
        }
        for place in &hit {
            *counts.entry(String::from(*place)).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentRecord;

    fn corpus(docs: &[(&str, Label)]) -> Corpus {
        Corpus::from_records(
            docs.iter()
                .enumerate()
                .map(|(i, (t, l))| DocumentRecord::new(i as u64, "u", *t, *l))
                .collect(),
        )
        .unwrap()
    }

    fn cfg(min_count: u64) -> KeywordConfig {
        KeywordConfig { alpha: 0.01, min_count }
    }

    #[test]
    fn chi2_hand_example() {
        let c = corpus(&[
            ("kuf x", Label::Hate),
            ("kuf y", Label::Hate),
            ("z", Label::Safe),
            ("w", Label::Safe),
        ]);
        let stats = keyword_bias(&c, &cfg(1)).unwrap();
        let kuf = stats.iter().find(|s| s.word == "kuf").unwrap();
        assert_eq!(kuf.chi2, 4.0);
        assert_eq!(kuf.p_hate, 1.0);
        assert!(!kuf.significant);
        assert_eq!(stats[0].word, "kuf");
    }

    #[test]
    fn balanced_word_has_no_bias() {
        let c = corpus(&[("the a", Label::Hate), ("the b", Label::Safe)]);
        let stats = keyword_bias(&c, &cfg(1)).unwrap();
        let the = stats.iter().find(|s| s.word == "the").unwrap();
        assert_eq!((the.chi2, the.p_hate), (0.0, 0.5));
    }

    #[test]
    fn posterior_of_printed_counts() {
        assert!((posterior_hate(1322, 27) - 0.98).abs() < 0.005);
    }

    #[test]
    fn counts_are_per_document() {
        let c = corpus(&[("rage rage rage", Label::Hate), ("calm", Label::Safe)]);
        let stats = keyword_bias(&c, &cfg(1)).unwrap();
        let rage = stats.iter().find(|s| s.word == "rage").unwrap();
        assert_eq!((rage.count_hate, rage.occurrences_hate), (1, 3));
    }

    #[test]
    fn min_count_and_errors() {
        let c = corpus(&[("a", Label::Hate), ("b", Label::Safe)]);
        assert!(keyword_bias(&c, &cfg(2)).unwrap().is_empty());
        let one = corpus(&[("a", Label::Hate)]);
        assert_eq!(keyword_bias(&one, &cfg(1)), Err(Error::MissingClass(Label::Safe)));
        assert!(keyword_bias(&c, &KeywordConfig { alpha: 1.5, min_count: 1 }).is_err());
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_value(0.01).unwrap(), 6.635);
        // Untabulated levels agree with the table's rounding.
        assert!((critical_value(0.0100001).unwrap() - 6.635).abs() < 1e-3);
        assert!((critical_value(0.2).unwrap() - 1.642).abs() < 1e-3);
        assert!((chi2_p_value(3.841) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn right_tree() {
        let c = corpus(&[("Die in your rage kuffar", Label::Hate), ("die in your rage !", Label::Hate)]);
        let t = word_tree(&c, "rage", Direction::Right, 1).unwrap();
        assert_eq!(t.count, 2);
        assert_eq!(t.branches.len(), 2);
        assert_eq!(t.branches["kuffar"].count, 1);
        assert_eq!(t.branches["!"].count, 1);
    }

    #[test]
    fn left_tree_and_absent_keyword() {
        let c = corpus(&[("die in your rage", Label::Hate)]);
        let t = word_tree(&c, "rage", Direction::Left, 2).unwrap();
        assert_eq!(t.branches["your"].count, 1);
        assert_eq!(t.branches["your"].children["in"].count, 1);
        let right = word_tree(&c, "rage", Direction::Right, 2).unwrap();
        assert_eq!((right.count, right.branches.len()), (1, 0));
        let none = word_tree(&c, "calm", Direction::Right, 1).unwrap();
        assert_eq!((none.count, none.branches.len()), (0, 0));
        assert!(word_tree(&c, "rage", Direction::Right, 0).is_err());
    }

    #[test]
    fn phrase_keyword() {
        let c = corpus(&[("the islamic state will", Label::Hate)]);
        let t = word_tree(&c, "Islamic State", Direction::Right, 1).unwrap();
        assert_eq!(t.branches["will"].count, 1);
    }

    #[test]
    fn mentions_are_binary_per_document() {
        let c = corpus(&[
            ("to syria and syria again", Label::Hate),
            ("#Syria!", Label::Safe),
            ("raqqa", Label::Hate),
        ]);
        assert_eq!(mention_scan(&c, [("syria", "Syria")]), BTreeMap::from([(String::from("Syria"), 2)]));
        assert!(mention_scan(&c, []).is_empty());
        let p = corpus(&[("paris paris paris", Label::Hate)]);
        assert_eq!(mention_scan(&p, [("paris", "Paris")])["Paris"], 1);
    }

    #[test]
    fn aliases_fold_into_one_place() {
        let c = corpus(&[("from al-sham to damascus", Label::Hate), ("new york", Label::Safe)]);
        let g = [("al-sham", "Syria"), ("damascus", "Syria"), ("New York", "USA")];
        let m = mention_scan(&c, g);
        assert_eq!(m, BTreeMap::from([(String::from("Syria"), 1), (String::from("USA"), 1)]));
    }
}
