use super::tag::{check_tags, Tag};
use crate::{Error, Result};

/// A token with char offsets into its document's annotation text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<Token>,
    pub tags: Vec<Tag>,
}

impl TaggedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn begin_count(&self) -> usize {
        self.tags.iter().filter(|t| matches!(t, Tag::B(_))).count()
    }
}

/// Writes `token<TAB>tag` lines with one blank line between sentences.
pub fn write_conll(sentences: &[TaggedSentence]) -> Result<String> {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if s.tokens.len() != s.tags.len() {
            return Err(Error::invalid(format!(
                "sentence {i}: {} tokens but {} tags",
                s.tokens.len(),
                s.tags.len()
            )));
        }
        if s.is_empty() {
            return Err(Error::invalid(format!("sentence {i} is empty")));
        }
        check_tags(&s.tags).map_err(|token| Error::IllFormedTags { sentence: i, token })?;
        if i > 0 {
            out.push('\n');
        }
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            if tok.text.is_empty() || tok.text.contains(['\t', '\n']) {
                return Err(Error::invalid(format!(
                    "sentence {i}: token {:?} cannot be written as a CoNLL column",
                    tok.text
                )));
            }
            out.push_str(&tok.text);
            out.push('\t');
            out.push_str(&tag.to_string());
            out.push('\n');
        }
    }
    Ok(out)
}

/// Reads CoNLL/BIO text. Token offsets are sentence-local, as if the tokens
/// were joined by single spaces.
pub fn parse_conll(text: &str) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut current = TaggedSentence {
        tokens: Vec::new(),
        tags: Vec::new(),
    };
    let mut offset = 0;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::replace(
                    &mut current,
                    TaggedSentence {
                        tokens: Vec::new(),
                        tags: Vec::new(),
                    },
                ));
                offset = 0;
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::format(
                "CoNLL",
                line_no,
                format!("expected 2 tab-separated columns, found {}", cols.len()),
            ));
        }
        let tag: Tag = cols[1]
            .parse()
            .map_err(|e: Error| Error::format("CoNLL", line_no, e.to_string()))?;
        let len = cols[0].chars().count();
        if !current.is_empty() {
            offset += 1;
        }
        current.tokens.push(Token {
            text: cols[0].to_owned(),
            start: offset,
            end: offset + len,
        });
        current.tags.push(tag);
        offset += len;
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}
