//! brat-style standoff: a `.txt` file plus `.ann` lines
//! `T<n>\t<Type> <start> <end>\t<text>`.

use std::collections::BTreeMap;

use super::source::SourceSpan;
use super::Document;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandoffDocument {
    pub document: Document,
    pub spans: Vec<SourceSpan>,
    /// Non-`T` annotation lines skipped, keyed by their leading letter.
    pub ignored: BTreeMap<char, usize>,
}

pub fn parse_standoff(document_id: &str, text: &str, ann: &str) -> Result<StandoffDocument> {
    let document = Document::from_text(document_id, text);
    let mut spans = Vec::new();
    let mut ignored = BTreeMap::new();
    for (n, line) in ann.lines().enumerate() {
        let line_no = n + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let Some(kind) = line.chars().next().filter(|&c| c == 'T') else {
            let kind = line.chars().next().unwrap_or('?');
            *ignored.entry(kind).or_insert(0) += 1;
            log::debug!("{document_id}.ann line {line_no}: skipping `{kind}` annotation");
            continue;
        };
        debug_assert_eq!(kind, 'T');
        let malformed = |msg: &str| Error::format("standoff", line_no, msg.to_owned());
        let mut cols = line.splitn(3, '\t');
        let (id, body, surface) = match (cols.next(), cols.next(), cols.next()) {
            (Some(id), Some(body), Some(surface)) => (id, body, surface),
            _ => return Err(malformed("expected `T<n>\\t<Type> <start> <end>\\t<text>`")),
        };
        if body.contains(';') {
            return Err(Error::DiscontinuousSpan { line: line_no });
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        let [label, start, end] = parts[..] else {
            return Err(malformed("expected `<Type> <start> <end>`"));
        };
        let start: usize = start.parse().map_err(|_| malformed("invalid start offset"))?;
        let end: usize = end.parse().map_err(|_| malformed("invalid end offset"))?;
        let found = document.slice(start, end).filter(|_| start < end).ok_or_else(|| Error::Offset {
            document: document_id.to_owned(),
            mention: id.to_owned(),
            message: format!("span {start}..{end} outside text of length {}", document.len()),
        })?;
        if found != surface {
            return Err(Error::Offset {
                document: document_id.to_owned(),
                mention: id.to_owned(),
                message: format!("annotated text `{surface}` does not match `{found}`"),
            });
        }
        spans.push(SourceSpan {
            id: id.to_owned(),
            start,
            end,
            label: label.to_owned(),
            text: surface.to_owned(),
        });
    }
    Ok(StandoffDocument {
        document,
        spans,
        ignored,
    })
}
