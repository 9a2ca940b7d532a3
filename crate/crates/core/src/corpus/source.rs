//! Corpora as they arrive from outside, before their labels are mapped onto
//! the six challenge entity types.

use std::fs;
use std::path::{Path, PathBuf};

use super::standoff::parse_standoff;
use super::tsv::{parse_challenge_tsv, ChallengeOptions};
use super::{Corpus, Document};
use crate::{Error, Result};

/// A span carrying the source corpus's own label string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub id: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub document: Document,
    pub spans: Vec<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceCorpus {
    pub name: String,
    pub documents: Vec<SourceDocument>,
}

impl SourceCorpus {
    /// Views a challenge corpus as a source corpus whose labels are the
    /// entity type names.
    pub fn from_corpus(name: impl Into<String>, corpus: &Corpus) -> Self {
        let documents = corpus
            .mentions_by_document()
            .into_iter()
            .map(|(doc, mentions)| SourceDocument {
                document: doc.clone(),
                spans: mentions
                    .into_iter()
                    .map(|m| SourceSpan {
                        id: m.id.clone(),
                        start: m.start,
                        end: m.end,
                        label: m.entity_type.to_string(),
                        text: m.text.clone(),
                    })
                    .collect(),
            })
            .collect();
        SourceCorpus {
            name: name.into(),
            documents,
        }
    }

    pub fn span_count(&self) -> usize {
        self.documents.iter().map(|d| d.spans.len()).sum()
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

/// Loads `abstracts.tsv` and, when present, `entities.tsv` and
/// `relations.tsv` from a directory.
pub fn load_challenge_dir(dir: &Path, opts: &ChallengeOptions) -> Result<Corpus> {
    let abstracts = read(&dir.join("abstracts.tsv"))?;
    let entities_path = dir.join("entities.tsv");
    let entities = if entities_path.exists() {
        read(&entities_path)?
    } else {
        super::ENTITIES_HEADER.to_owned()
    };
    let relations_path = dir.join("relations.tsv");
    let relations = relations_path.exists().then(|| read(&relations_path)).transpose()?;
    parse_challenge_tsv(&abstracts, &entities, relations.as_deref(), opts)
}

/// Loads a corpus directory: a challenge directory if it has
/// `abstracts.tsv`, otherwise `.txt`/`.ann` standoff pairs in file name order.
pub fn load_corpus_dir(dir: &Path, name: &str, opts: &ChallengeOptions) -> Result<SourceCorpus> {
    if dir.join("abstracts.tsv").exists() {
        return Ok(SourceCorpus::from_corpus(name, &load_challenge_dir(dir, opts)?));
    }
    let entries = fs::read_dir(dir).map_err(|source| Error::File {
        path: dir.to_owned(),
        source,
    })?;
    let mut texts: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    texts.sort();
    if texts.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no abstracts.tsv and no .txt/.ann pairs",
            dir.display()
        )));
    }
    let mut documents = Vec::with_capacity(texts.len());
    for txt in texts {
        let ann = txt.with_extension("ann");
        let id = txt
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::invalid(format!("{}: unusable file name", txt.display())))?;
        let parsed = parse_standoff(id, &read(&txt)?, &read(&ann)?)?;
        let skipped: usize = parsed.ignored.values().sum();
        if skipped > 0 {
            log::info!("{}: skipped {skipped} non-text-bound annotation line(s)", ann.display());
        }
        documents.push(SourceDocument {
            document: parsed.document,
            spans: parsed.spans,
        });
    }
    Ok(SourceCorpus {
        name: name.to_owned(),
        documents,
    })
}
