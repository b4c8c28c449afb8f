//! `key = value` service configuration, one setting per line, `#` comments.
//!
//! Keys: `model`, `bind`, `threshold`, `log`, `token`, `top_k`.

use std::path::PathBuf;

use thiserror::Error;

pub const CONFIG_ENV: &str = "TRIPWIRE_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub model: Option<PathBuf>,
    pub bind: String,
    /// Items scoring strictly above this are queued for review.
    pub threshold: f64,
    pub log: PathBuf,
    /// Shared secret expected in `x-tripwire-token` or a bearer header.
    pub token: Option<String>,
    pub top_k: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            model: None,
            bind: "127.0.0.1:8080".into(),
            threshold: 0.0,
            log: PathBuf::from("tripwire-queue.jsonl"),
            token: None,
            top_k: 10,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("config line {line}: {reason}")]
pub struct ConfigError {
    pub line: usize,
    pub reason: String,
}

impl ServiceConfig {
    /// Applies the settings in `text` on top of `self`.
    pub fn merge_str(mut self, text: &str) -> Result<Self, ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let err = |reason: String| ConfigError { line: i + 1, reason };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "model" => self.model = Some(PathBuf::from(value)),
                "bind" => self.bind = value.to_string(),
                "log" => self.log = PathBuf::from(value),
                "token" => self.token = (!value.is_empty()).then(|| value.to_string()),
                "threshold" => {
                    self.threshold = value
                        .parse::<f64>()
                        .ok()
                        .filter(|t| t.is_finite())
                        .ok_or_else(|| err(format!("threshold {value:?} is not a number")))?
                }
                "top_k" => {
                    self.top_k = value.parse().map_err(|_| err(format!("top_k {value:?} is not a count")))?
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let cfg = ServiceConfig::default()
            .merge_str("# service\nmodel = m.svm\nthreshold=0.5\n\ntoken = s3cret\ntop_k = 3\n")
            .unwrap();
        assert_eq!(cfg.model, Some(PathBuf::from("m.svm")));
        assert_eq!((cfg.threshold, cfg.top_k), (0.5, 3));
        assert_eq!(cfg.token.as_deref(), Some("s3cret"));
        assert_eq!(cfg.bind, "127.0.0.1:8080");
    }

    #[test]
    fn reports_bad_lines() {
        let bad = ServiceConfig::default().merge_str("model = a\ncolour = red\n");
        assert_eq!(bad.unwrap_err().line, 2);
        assert!(ServiceConfig::default().merge_str("threshold = high").is_err());
        assert!(ServiceConfig::default().merge_str("just words").is_err());
    }
}
