//! Plain-text model files.
//!
//! ```text
//! TRIPWIRE-SVM v1
//! bias <decimal>
//! features <N>
//! <trigram>\t<weight>      (N lines, trigrams in byte order)
//! ```
//!
//! Decimals use the shortest representation that parses back to the same
//! `f64`, so a save/load round trip is bit-exact. Lines end in LF.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;
use tripwire_core::{LinearModel, Vocabulary, FORMAT_VERSION};

const MAGIC: &str = "TRIPWIRE-SVM";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("not a model file: first line is {0:?}")]
    BadMagic(String),
    #[error("unsupported model version {found} (expected v{FORMAT_VERSION})")]
    Version { found: String },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, reason: impl Into<String>) -> ModelFileError {
    ModelFileError::Parse { line, reason: reason.into() }
}

pub fn encode_model(model: &LinearModel) -> String {
    let vocab = model.vocabulary();
    let mut out = String::with_capacity(32 + vocab.len() * 24);
    out.push_str(&format!("{MAGIC} v{FORMAT_VERSION}\n"));
    out.push_str(&format!("bias {}\n", model.bias()));
    out.push_str(&format!("features {}\n", vocab.len()));
    for (feature, weight) in vocab.features().iter().zip(model.weights()) {
        out.push_str(feature);
        out.push('\t');
        out.push_str(&weight.to_string());
        out.push('\n');
    }
    out
}

fn parse_decimal(line: usize, s: &str) -> Result<f64, ModelFileError> {
    let v: f64 = s.parse().map_err(|_| parse_err(line, format!("invalid number {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("non-finite number {s:?}")))
    }
}

pub fn decode_model(text: &str) -> Result<LinearModel, ModelFileError> {
    if text.is_empty() {
        return Err(parse_err(1, "empty file"));
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().unwrap_or((1, ""));
    match header.strip_prefix(MAGIC).and_then(|rest| rest.strip_prefix(" v")) {
        Some(v) if v == FORMAT_VERSION.to_string() => {}
        Some(v) if !v.is_empty() && v.bytes().all(|b| b.is_ascii_digit()) => {
            return Err(ModelFileError::Version { found: v.to_string() })
        }
        _ => return Err(ModelFileError::BadMagic(header.to_string())),
    }

    let (n, line) = lines.next().ok_or_else(|| parse_err(2, "missing bias line"))?;
    let bias = match line.strip_prefix("bias ") {
        Some(v) => parse_decimal(n, v)?,
        None => return Err(parse_err(n, "expected \"bias <decimal>\"")),
    };

    let (n, line) = lines.next().ok_or_else(|| parse_err(3, "missing features line"))?;
    let count: usize = line
        .strip_prefix("features ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(n, "expected \"features <N>\""))?;

    let mut features = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for expected in 0..count {
        let (n, line) = lines.next().ok_or_else(|| {
            parse_err(4 + expected, format!("truncated: expected {count} features, found {expected}"))
        })?;
        let (feature, weight) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(n, "expected \"<trigram>\\t<weight>\""))?;
        if feature.chars().count() != 3 {
            return Err(parse_err(n, format!("feature {feature:?} is not a trigram")));
        }
        if features.last().is_some_and(|prev: &String| prev.as_str() >= feature) {
            return Err(parse_err(n, "features out of order"));
        }
        features.push(feature.to_string());
        weights.push(parse_decimal(n, weight)?);
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "unexpected content after the last feature"));
    }
    LinearModel::new(Vocabulary::from_features(features), weights, bias)
        .map_err(|e| parse_err(0, e.to_string()))
}

pub fn save_model(model: &LinearModel, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, encode_model(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearModel, ModelFileError> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        parse_err(line, "invalid UTF-8")
    })?;
    decode_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LinearModel {
        let vocab = Vocabulary::from_features(["a b", "abc", "kuf"]);
        LinearModel::new(vocab, vec![0.1, -1.0 / 3.0, 2.5e-17], -0.25).unwrap()
    }

    #[test]
    fn layout() {
        let text = encode_model(&toy());
        assert_eq!(text, "TRIPWIRE-SVM v1\nbias -0.25\nfeatures 3\na b\t0.1\nabc\t-0.3333333333333333\nkuf\t0.000000000000000025\n");
    }

    #[test]
    fn round_trip_is_exact() {
        let m = toy();
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back.vocabulary(), m.vocabulary());
        assert_eq!(back.bias().to_bits(), m.bias().to_bits());
        assert!(back.weights().iter().zip(m.weights()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(decode_model(""), Err(ModelFileError::Parse { line: 1, .. })));
        assert!(matches!(decode_model("SVM v1\n"), Err(ModelFileError::BadMagic(_))));
        assert!(matches!(decode_model("TRIPWIRE-SVM v2\nbias 0\nfeatures 0\n"), Err(ModelFileError::Version { .. })));
    }

    #[test]
    fn reports_truncation_line() {
        let text = encode_model(&toy());
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        match decode_model(&cut) {
            Err(ModelFileError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(decode_model("TRIPWIRE-SVM v1\n"), Err(ModelFileError::Parse { line: 2, .. })));
        assert!(matches!(
            decode_model("TRIPWIRE-SVM v1\nbias x\n"),
            Err(ModelFileError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_unsorted_features() {
        let text = "TRIPWIRE-SVM v1\nbias 0\nfeatures 2\nbcd\t1\nabc\t1\n";
        assert!(matches!(decode_model(text), Err(ModelFileError::Parse { line: 5, .. })));
    }
}
