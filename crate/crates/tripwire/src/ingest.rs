//! Corpus CSV files: `id,author,text[,date][,label][,lang]`.
//!
//! Comma separated, double-quote quoting with doubled-quote escapes, UTF-8.
//! A first row whose first column is not numeric is treated as a header.
//! Bad rows are collected with their line number and skipped; duplicate
//! ids keep the first row.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::Serialize;
use tripwire_core::{Corpus, CorpusBuilder, DocumentRecord, Label, Pushed};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Duplicate {
    pub line: u64,
    pub id: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ingested {
    pub corpus: Corpus,
    pub errors: Vec<RowError>,
    pub duplicates: Vec<Duplicate>,
}

pub fn ingest_csv(path: impl AsRef<Path>, default_label: Label) -> io::Result<Ingested> {
    let file = File::open(path)?;
    Ok(read_corpus(file, default_label))
}

pub fn read_corpus<R: Read>(reader: R, default_label: Label) -> Ingested {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut builder = CorpusBuilder::default();
    let mut errors = Vec::new();
    let mut duplicates = Vec::new();
    let mut first = true;

    for row in csv.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(RowError { line, reason: e.to_string() });
                first = false;
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if std::mem::take(&mut first) && is_header(&row) {
            continue;
        }
        let record = match parse_row(&row, default_label) {
            Ok(r) => r,
            Err(reason) => {
                errors.push(RowError { line, reason });
                continue;
            }
        };
        let id = record.id;
        match builder.push(record) {
            Ok(Pushed::Added) => {}
            Ok(Pushed::Duplicate) => duplicates.push(Duplicate { line, id }),
            Err(e) => errors.push(RowError { line, reason: e.to_string() }),
        }
    }
    Ingested { corpus: builder.finish(), errors, duplicates }
}

fn is_header(row: &csv::StringRecord) -> bool {
    row.get(0).is_some_and(|c| c.trim().parse::<u64>().is_err())
}

fn parse_row(row: &csv::StringRecord, default_label: Label) -> Result<DocumentRecord, String> {
    if row.len() < 3 {
        return Err(format!("expected at least 3 columns, found {}", row.len()));
    }
    let id_field = row[0].trim();
    let id: u64 = id_field
        .parse()
        .map_err(|_| format!("id {id_field:?} is not an unsigned integer"))?;
    let author = row[1].trim();
    let author = author.strip_prefix('@').unwrap_or(author);
    let text = &row[2];
    if text.trim().is_empty() {
        return Err("empty text".into());
    }
    let label = match row.get(4).map(str::trim) {
        None | Some("") => default_label,
        Some(s) => s
            .to_ascii_uppercase()
            .parse()
            .map_err(|_| format!("unknown label {s:?}"))?,
    };
    let lang = match row.get(5).map(str::trim) {
        None | Some("") => None,
        Some(s) if s.len() == 2 && s.bytes().all(|b| b.is_ascii_alphabetic()) => {
            Some(s.to_ascii_lowercase())
        }
        Some(s) => return Err(format!("language tag {s:?} is not a two-letter code")),
    };
    Ok(DocumentRecord {
        id,
        author: author.to_string(),
        text: text.to_string(),
        date: row.get(3).unwrap_or_default().to_string(),
        label,
        lang,
    })
}

/// Writes all six columns, no header.
pub fn write_corpus<'a, W, I>(writer: W, records: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a DocumentRecord>,
{
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for r in records {
        let id = r.id.to_string();
        csv.write_record([
            id.as_str(),
            r.author.as_str(),
            r.text.as_str(),
            r.date.as_str(),
            r.label.as_str(),
            r.lang.as_deref().unwrap_or(""),
        ])?;
    }
    csv.flush()
}

/// One JSON object per line: `{"line":…,"reason":…}`.
pub fn write_row_errors<W: Write>(mut writer: W, errors: &[RowError]) -> io::Result<()> {
    for e in errors {
        serde_json::to_writer(&mut writer, e)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Ingested {
        read_corpus(s.as_bytes(), Label::Hate)
    }

    #[test]
    fn collection_row() {
        let got = read("556392744936284160,Muhajir_Miski1,RT @AHudhayfah: To the hypocrites\n");
        assert!(got.errors.is_empty());
        let r = &got.corpus.records()[0];
        assert_eq!(r.id, 556392744936284160);
        assert_eq!(r.author, "Muhajir_Miski1");
        assert_eq!(r.label, Label::Hate);
    }

    #[test]
    fn empty_input() {
        let got = read("");
        assert!(got.corpus.is_empty());
        assert!(got.errors.is_empty());
    }

    #[test]
    fn first_duplicate_wins() {
        let got = read("1,a,first\n1,a,second\n");
        assert_eq!(got.corpus.len(), 1);
        assert_eq!(got.corpus.records()[0].text, "first");
        assert_eq!(got.duplicates, [Duplicate { line: 2, id: 1 }]);
    }

    #[test]
    fn header_and_optional_columns() {
        let got = read("id,author,text,date,label,lang\n7,@bob,\"hi, \"\"there\"\"\",2015-01-01,SAFE,EN\n8,c,x,,,\n");
        assert!(got.errors.is_empty(), "{:?}", got.errors);
        let r = &got.corpus.records()[0];
        assert_eq!((r.author.as_str(), r.text.as_str()), ("bob", "hi, \"there\""));
        assert_eq!((r.label, r.lang.as_deref(), r.date.as_str()), (Label::Safe, Some("en"), "2015-01-01"));
        assert_eq!(got.corpus.records()[1].label, Label::Hate);
    }

    #[test]
    fn bad_rows_are_reported_with_lines() {
        let got = read("1,a,ok\nx1,a,bad id\n2,a,  \n3,a\n4,a,t,,MAYBE\n5,a,t,,,english\n6,a,fine\n");
        let lines: Vec<u64> = got.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, [2, 3, 4, 5, 6]);
        assert_eq!(got.corpus.len(), 2);
        let mut out = Vec::new();
        write_row_errors(&mut out, &got.errors).unwrap();
        let first: serde_json::Value = serde_json::from_slice(out.split(|&b| b == b'\n').next().unwrap()).unwrap();
        assert_eq!(first["line"], 2);
    }

    #[test]
    fn write_then_read_is_identity() {
        let got = read("1,a,\"multi\nline\",d,SAFE,fr\n2,b,plain,,,\n3,c,\" padded \",,UNLABELED,\n");
        let mut buf = Vec::new();
        write_corpus(&mut buf, got.corpus.records()).unwrap();
        let again = read_corpus(buf.as_slice(), Label::Safe);
        assert_eq!(again.corpus, got.corpus);
    }
}
