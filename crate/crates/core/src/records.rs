//! Streaming field manipulation over delimited text.
//!
//! Every tool reads one line at a time, so memory is bounded by the longest
//! record. Record-level problems (a field index past the end of a short
//! record) go to a diagnostic callback and processing continues, unless the
//! run is strict.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::num::NonZeroUsize;
use std::str::FromStr;

use crate::{Error, Result};

/// A 1-based field position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldIndex(NonZeroUsize);

impl FieldIndex {
    pub fn new(position: usize) -> Option<Self> {
        NonZeroUsize::new(position).map(FieldIndex)
    }

    pub fn get(self) -> usize {
        self.0.get()
    }

    fn offset(self) -> usize {
        self.0.get() - 1
    }
}

impl fmt::Display for FieldIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses a list of field positions: `3`, `1,4`, or an inclusive range `2/5`.
pub fn parse_field_list(spec: &str) -> Result<Vec<FieldIndex>> {
    let mut out = Vec::new();
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let bad = || Error::invalid(format!("invalid field position `{part}`"));
        let position = |s: &str| {
            usize::from_str(s.trim())
                .ok()
                .and_then(FieldIndex::new)
                .ok_or_else(bad)
        };
        match part.split_once('/') {
            Some((lo, hi)) => {
                let (lo, hi) = (position(lo)?, position(hi)?);
                if lo > hi {
                    return Err(bad());
                }
                out.extend((lo.get()..=hi.get()).filter_map(FieldIndex::new));
            }
            None => out.push(position(part)?),
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("empty field list"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordOptions {
    pub delimiter: char,
    pub strict: bool,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions {
            delimiter: '\t',
            strict: false,
        }
    }
}

/// Splits one line into fields. The field count is always the delimiter
/// count plus one; empty fields are kept.
pub fn split_record(line: &str, delimiter: char) -> Vec<&str> {
    line.split(delimiter).collect()
}

/// Picks `indices` out of `fields` in the given order. Returns the first
/// offending index when a record is too short.
pub fn select_fields<'a>(
    fields: &[&'a str],
    indices: &[FieldIndex],
) -> std::result::Result<Vec<&'a str>, FieldIndex> {
    indices
        .iter()
        .map(|&i| fields.get(i.offset()).copied().ok_or(i))
        .collect()
}

/// Removes the fields named in `indices`, keeping the survivors in order.
pub fn delete_fields<'a>(
    fields: &[&'a str],
    indices: &BTreeSet<FieldIndex>,
) -> std::result::Result<Vec<&'a str>, FieldIndex> {
    if let Some(&last) = indices.iter().next_back() {
        if last.get() > fields.len() {
            return Err(last);
        }
    }
    Ok(fields
        .iter()
        .enumerate()
        .filter(|(i, _)| FieldIndex::new(i + 1).is_some_and(|f| !indices.contains(&f)))
        .map(|(_, f)| *f)
        .collect())
}

/// Line reader that yields decoded lines with their 1-based numbers and
/// reuses a single buffer.
pub struct LineReader<R> {
    inner: R,
    buf: Vec<u8>,
    line: usize,
}

impl<R: BufRead> LineReader<R> {
    pub fn new(inner: R) -> Self {
        LineReader {
            inner,
            buf: Vec::with_capacity(256),
            line: 0,
        }
    }

    /// Reads the next line. `Ok(None)` at end of input; `Err(Error::Encoding)`
    /// for a line that is not UTF-8 (the reader stays usable).
    pub fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        self.buf.clear();
        let n = self.inner.read_until(b'\n', &mut self.buf)?;
        if n == 0 {
            return Ok(None);
        }
        self.line += 1;
        if self.buf.last() == Some(&b'\n') {
            self.buf.pop();
        }
        match std::str::from_utf8(&self.buf) {
            Ok(s) => Ok(Some((self.line, s))),
            Err(_) => Err(Error::Encoding { line: self.line }),
        }
    }
}

/// What a streaming run did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub records_in: u64,
    pub records_out: u64,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldOp {
    Select(Vec<FieldIndex>),
    Delete(BTreeSet<FieldIndex>),
}

fn out_of_range(line: usize, index: FieldIndex, fields: usize) -> Error {
    Error::Record {
        line,
        message: format!("field {index} requested but record has {fields} field(s)"),
    }
}

/// Routes a recoverable error: fatal when strict, otherwise reported.
fn report(err: Error, opts: &RecordOptions, stats: &mut StreamStats, diag: &mut dyn FnMut(&Error)) -> Result<()> {
    stats.errors += 1;
    if opts.strict {
        return Err(err);
    }
    diag(&err);
    Ok(())
}

fn write_record<W: Write + ?Sized>(out: &mut W, fields: &[&str], delim: &[u8]) -> std::io::Result<()> {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.write_all(delim)?;
        }
        out.write_all(f.as_bytes())?;
    }
    out.write_all(b"\n")
}

/// Applies `op` to every record of `input`, writing survivors to `output`.
pub fn transform<R: BufRead, W: Write + ?Sized>(
    input: R,
    output: &mut W,
    op: &FieldOp,
    opts: &RecordOptions,
    diag: &mut dyn FnMut(&Error),
) -> Result<StreamStats> {
    let mut reader = LineReader::new(input);
    let mut stats = StreamStats::default();
    let mut delim = [0u8; 4];
    let delim = opts.delimiter.encode_utf8(&mut delim).as_bytes().to_vec();
    loop {
        let (line_no, line) = match reader.next_line() {
            Ok(Some(l)) => l,
            Ok(None) => break,
            Err(e @ Error::Encoding { .. }) => {
                stats.records_in += 1;
                report(e, opts, &mut stats, diag)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.records_in += 1;
        let fields = split_record(line, opts.delimiter);
        let picked = match op {
            FieldOp::Select(idx) => select_fields(&fields, idx),
            FieldOp::Delete(idx) => delete_fields(&fields, idx),
        };
        match picked {
            Ok(picked) => {
                write_record(output, &picked, &delim)?;
                stats.records_out += 1;
            }
            Err(bad) => {
                let err = out_of_range(line_no, bad, fields.len());
                report(err, opts, &mut stats, diag)?;
            }
        }
    }
    output.flush()?;
    Ok(stats)
}

/// Counts records by the key formed from `keys`, writing `key fields..., count`
/// rows sorted lexicographically by key.
pub fn frequency_count<R: BufRead, W: Write + ?Sized>(
    input: R,
    output: &mut W,
    keys: &[FieldIndex],
    opts: &RecordOptions,
    diag: &mut dyn FnMut(&Error),
) -> Result<StreamStats> {
    let mut reader = LineReader::new(input);
    let mut stats = StreamStats::default();
    let mut counts: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    loop {
        let (line_no, line) = match reader.next_line() {
            Ok(Some(l)) => l,
            Ok(None) => break,
            Err(e @ Error::Encoding { .. }) => {
                stats.records_in += 1;
                report(e, opts, &mut stats, diag)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        stats.records_in += 1;
        let fields = split_record(line, opts.delimiter);
        match select_fields(&fields, keys) {
            Ok(key) => {
                let key: Vec<String> = key.into_iter().map(str::to_owned).collect();
                *counts.entry(key).or_insert(0) += 1;
            }
            Err(bad) => {
                let err = out_of_range(line_no, bad, fields.len());
                report(err, opts, &mut stats, diag)?;
            }
        }
    }
    let mut delim = [0u8; 4];
    let delim = opts.delimiter.encode_utf8(&mut delim).as_bytes().to_vec();
    for (key, n) in &counts {
        let n = n.to_string();
        let mut row: Vec<&str> = key.iter().map(String::as_str).collect();
        row.push(&n);
        write_record(output, &row, &delim)?;
        stats.records_out += 1;
    }
    output.flush()?;
    Ok(stats)
}
