//! Text normalization and character trigram extraction.

use alloc::collections::BTreeMap;
use alloc::string::String;

/// Replacement for any `@handle` mention.
pub const MENTION_TOKEN: &str = "@user";
/// Replacement for any `http://` / `https://` URL.
pub const URL_TOKEN: &str = "url";

/// Normalizes a raw text before feature extraction.
///
/// Hashtag symbols are dropped, letters are lowercased, URLs become `url`,
/// mentions become `@user`, and whitespace runs collapse to one space with
/// no leading or trailing whitespace. Everything else (punctuation, emoji,
/// non-Latin scripts) passes through. The function is idempotent.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut token = String::new();
    for raw in text.split_whitespace() {
        token.clear();
        for c in raw.chars().filter(|&c| c != '#') {
            token.extend(c.to_lowercase());
        }
        if token.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        push_token(&mut out, &token);
    }
    out
}

fn push_token(out: &mut String, token: &str) {
    match url_start(token) {
        None => {
            push_mentions(out, token, false);
        }
        Some(at) => {
            // A mention directly before the URL would swallow "url" on a
            // second pass ("@abc" + "url" reads as one handle).
            if !push_mentions(out, &token[..at], true) {
                out.push_str(URL_TOKEN);
            }
        }
    }
}

// A URL runs to the end of the whitespace-delimited token.
fn url_start(token: &str) -> Option<usize> {
    match (token.find("http://"), token.find("https://")) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Copies `s` into `out`, replacing each `@handle` by `@user`. Returns true
/// when `s` ends inside a mention. With `url_follows`, a bare trailing `@`
/// counts as one, since it will be glued to the URL token.
fn push_mentions(out: &mut String, s: &str, url_follows: bool) -> bool {
    let mut prev: Option<char> = None;
    let mut in_mention = false;
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        in_mention = false;
        if c == '@' && !prev.is_some_and(is_handle_char) {
            let mut handle = false;
            while chars.next_if(|&n| is_handle_char(n)).is_some() {
                handle = true;
            }
            if handle {
                out.push_str(MENTION_TOKEN);
                prev = Some('r');
                in_mention = true;
                continue;
            }
            if url_follows && chars.peek().is_none() {
                out.push_str(MENTION_TOKEN);
                return true;
            }
        }
        out.push(c);
        prev = Some(c);
    }
    in_mention
}

/// Iterator over the trigrams of a string as `(byte offset, slice)` pairs.
///
/// The window slides one Unicode scalar value at a time across the whole
/// string, spaces included, with no padding at either end.
#[derive(Debug, Clone)]
pub struct TrigramSpans<'a> {
    text: &'a str,
    // Byte offsets of the last three character starts.
    starts: [usize; 3],
    seen: usize,
    chars: core::str::CharIndices<'a>,
}

impl<'a> Iterator for TrigramSpans<'a> {
    type Item = (usize, &'a str);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (at, c) = self.chars.next()?;
            self.starts = [self.starts[1], self.starts[2], at];
            self.seen += 1;
            if self.seen >= 3 {
                let begin = self.starts[0];
                let end = at + c.len_utf8();
                return Some((begin, &self.text[begin..end]));
            }
        }
    }
}

/// Trigram windows of `text` with their byte offsets.
pub fn trigram_spans(text: &str) -> TrigramSpans<'_> {
    TrigramSpans {
        text,
        starts: [0; 3],
        seen: 0,
        chars: text.char_indices(),
    }
}

/// Multiset of character trigrams of an already normalized text.
///
/// ```
/// let t = tripwire_core::trigrams("kuffar");
/// assert_eq!(t.keys().map(String::as_str).collect::<Vec<_>>(), ["far", "ffa", "kuf", "uff"]);
/// ```
pub fn trigrams(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for (_, gram) in trigram_spans(text) {
        match counts.get_mut(gram) {
            Some(n) => *n += 1,
            None => {
                counts.insert(String::from(gram), 1);
            }
        }
    }
    counts
}

/// Whitespace tokens of a normalized text.
pub fn tokens(text: &str) -> core::str::SplitWhitespace<'_> {
    text.split_whitespace()
}
