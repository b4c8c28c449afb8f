//! Scores with per-trigram explanations and their positions, so a client
//! can highlight the contributing spans without re-scoring.

use serde::{Deserialize, Serialize};
use tripwire_core::text::trigram_spans;
use tripwire_core::{normalize, LinearModel, Prediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub trigram: String,
    pub contribution: f64,
    /// `[start, end)` offsets in Unicode scalar values into the normalized
    /// text, one per occurrence.
    pub spans: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub normalized: String,
    pub prediction: Prediction,
    pub top_features: Vec<Feature>,
}

pub fn score_text(model: &LinearModel, text: &str, k: usize) -> Scored {
    let normalized = normalize(text);
    let prediction = model.predict_normalized(&normalized);
    let mut top_features: Vec<Feature> = model
        .explain(&normalized, k)
        .into_iter()
        .map(|c| Feature { trigram: c.trigram, contribution: c.contribution, spans: Vec::new() })
        .collect();
    if !top_features.is_empty() {
        let mut chars = 0;
        let mut last_byte = 0;
        for (byte, gram) in trigram_spans(&normalized) {
            chars += normalized[last_byte..byte].chars().count();
            last_byte = byte;
            if let Some(f) = top_features.iter_mut().find(|f| f.trigram == gram) {
                f.spans.push([chars, chars + 3]);
            }
        }
    }
    Scored { normalized, prediction, top_features }
}
