//! Documents, mentions and relations, plus the file formats that carry them.
//!
//! Offsets everywhere count Unicode scalar values, not bytes, and index the
//! document's annotation text (title, separator, abstract).

mod conll;
mod source;
mod standoff;
mod tag;
mod tsv;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use conll::{parse_conll, write_conll, Token, TaggedSentence};
pub use source::{read as source_read, load_challenge_dir, load_corpus_dir, SourceCorpus, SourceDocument, SourceSpan};
pub use standoff::{parse_standoff, StandoffDocument};
pub use tag::{check_tags, Tag};
pub use tsv::{
    parse_abstracts, parse_challenge_tsv, parse_entity_rows, parse_relation_rows, write_entities,
    write_relations, ChallengeOptions, ABSTRACTS_HEADER, ENTITIES_HEADER, ENTITIES_HEADER_WITH_IDS,
    RELATIONS_HEADER,
};

macro_rules! closed_label {
    ($(#[$meta:meta])* $name:ident, $kind:literal, [$($variant:ident => $text:literal),+ $(,)?]) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $text)]
                $variant,
            )+
        }

        impl $name {
            /// All variants in declaration order.
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::UnknownLabel { kind: $kind, value: s.to_owned() }),
                }
            }
        }
    };
}

closed_label!(
    /// The six challenge entity types. Declaration order doubles as the
    /// tie-break order wherever types compete.
    EntityType, "entity type", [
        DiseaseOrPhenotypicFeature => "DiseaseOrPhenotypicFeature",
        ChemicalEntity => "ChemicalEntity",
        OrganismTaxon => "OrganismTaxon",
        GeneOrGeneProduct => "GeneOrGeneProduct",
        SequenceVariant => "SequenceVariant",
        CellLine => "CellLine",
    ]
);

closed_label!(
    RelationType, "relation type", [
        Association => "Association",
        PositiveCorrelation => "Positive_Correlation",
        NegativeCorrelation => "Negative_Correlation",
        Bind => "Bind",
        Cotreatment => "Cotreatment",
        Comparison => "Comparison",
        DrugInteraction => "Drug_Interaction",
    ]
);

closed_label!(
    Novelty, "novelty label", [
        Novel => "Novel",
        No => "No",
    ]
);

/// An abstract. `annotation_text` is what every offset refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub abstract_text: String,
    annotation_text: String,
    // byte offset of every char, plus the total length
    char_bytes: Vec<usize>,
}

impl Document {
    pub fn new(id: impl Into<String>, title: &str, abstract_text: &str, separator: &str) -> Self {
        let annotation_text = format!("{title}{separator}{abstract_text}");
        Self::build(id.into(), title.to_owned(), abstract_text.to_owned(), annotation_text)
    }

    /// A document over raw text with no title, as brat standoff files have.
    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        Self::build(id.into(), String::new(), text.to_owned(), text.to_owned())
    }

    fn build(id: String, title: String, abstract_text: String, annotation_text: String) -> Self {
        let mut char_bytes: Vec<usize> = annotation_text.char_indices().map(|(b, _)| b).collect();
        char_bytes.push(annotation_text.len());
        Document {
            id,
            title,
            abstract_text,
            annotation_text,
            char_bytes,
        }
    }

    pub fn text(&self) -> &str {
        &self.annotation_text
    }

    /// Length in chars.
    pub fn len(&self) -> usize {
        self.char_bytes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The text between two char offsets, if the range is valid.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        if start > end || end > self.len() {
            return None;
        }
        Some(&self.annotation_text[self.char_bytes[start]..self.char_bytes[end]])
    }
}

/// The ancestor chain of one knowledge-base identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lineage {
    pub term: String,
    pub ancestors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub id: String,
    pub document_id: String,
    pub start: usize,
    pub end: usize,
    pub entity_type: EntityType,
    pub text: String,
    pub kb_ids: Vec<String>,
    pub lineage: Vec<Lineage>,
}

impl Mention {
    pub fn new(
        id: impl Into<String>,
        document_id: impl Into<String>,
        start: usize,
        end: usize,
        entity_type: EntityType,
        text: impl Into<String>,
    ) -> Self {
        Mention {
            id: id.into(),
            document_id: document_id.into(),
            start,
            end,
            entity_type,
            text: text.into(),
            kb_ids: Vec::new(),
            lineage: Vec::new(),
        }
    }

    pub fn with_kb_ids(mut self, ids: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.kb_ids = ids.into_iter().map(Into::into).collect();
        self
    }

    /// Span length in chars.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Checks `0 <= start < end <= len` and that `text` is the covered substring.
    pub fn check_against(&self, document: &Document) -> Result<()> {
        let err = |message: String| Error::Offset {
            document: document.id.clone(),
            mention: self.id.clone(),
            message,
        };
        if self.start >= self.end {
            return Err(err(format!("empty or inverted span {}..{}", self.start, self.end)));
        }
        match document.slice(self.start, self.end) {
            None => Err(err(format!(
                "span {}..{} outside document of length {}",
                self.start,
                self.end,
                document.len()
            ))),
            Some(s) if s != self.text => Err(err(format!(
                "mention text `{}` does not match `{}` at {}..{}",
                self.text, s, self.start, self.end
            ))),
            Some(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInstance {
    pub id: String,
    pub document_id: String,
    pub rel_type: RelationType,
    pub entity_a: String,
    pub entity_b: String,
    pub novelty: Novelty,
}

impl RelationInstance {
    /// The entity pair in canonical (sorted) order.
    pub fn pair(&self) -> (&str, &str) {
        if self.entity_a <= self.entity_b {
            (&self.entity_a, &self.entity_b)
        } else {
            (&self.entity_b, &self.entity_a)
        }
    }

    pub fn same_pair(&self, other: &RelationInstance) -> bool {
        self.pair() == other.pair()
    }
}

/// An immutable, validated corpus in the challenge data model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub mentions: Vec<Mention>,
    pub relations: Vec<RelationInstance>,
    index: BTreeMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, enforcing unique document ids, the substring
    /// invariant on every mention and known documents for every relation.
    pub fn new(
        documents: Vec<Document>,
        mentions: Vec<Mention>,
        relations: Vec<RelationInstance>,
    ) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, d) in documents.iter().enumerate() {
            if d.id.is_empty() {
                return Err(Error::invalid(format!("document at position {} has an empty id", i + 1)));
            }
            if index.insert(d.id.clone(), i).is_some() {
                return Err(Error::DuplicateDocument(d.id.clone()));
            }
        }
        for m in &mentions {
            let doc = index
                .get(&m.document_id)
                .map(|&i| &documents[i])
                .ok_or_else(|| Error::UnknownDocument(m.document_id.clone()))?;
            m.check_against(doc)?;
        }
        for r in &relations {
            if !index.contains_key(&r.document_id) {
                return Err(Error::UnknownDocument(r.document_id.clone()));
            }
        }
        Ok(Corpus {
            documents,
            mentions,
            relations,
            index,
        })
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.index.get(id).map(|&i| &self.documents[i])
    }

    /// Mentions grouped per document, in corpus document order.
    pub fn mentions_by_document(&self) -> Vec<(&Document, Vec<&Mention>)> {
        let mut groups: Vec<Vec<&Mention>> = vec![Vec::new(); self.documents.len()];
        for m in &self.mentions {
            groups[self.index[&m.document_id]].push(m);
        }
        self.documents.iter().zip(groups).collect()
    }

    /// Re-checks the substring invariant on every mention.
    pub fn validate(&self) -> Result<()> {
        for m in &self.mentions {
            let doc = self
                .document(&m.document_id)
                .ok_or_else(|| Error::UnknownDocument(m.document_id.clone()))?;
            m.check_against(doc)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_sets_have_exact_sizes() {
        assert_eq!(EntityType::ALL.len(), 6);
        assert_eq!(RelationType::ALL.len(), 7);
        assert_eq!(Novelty::ALL.len(), 2);
        for t in EntityType::ALL {
            assert_eq!(t.as_str().parse::<EntityType>().unwrap(), *t);
        }
        for t in RelationType::ALL {
            assert_eq!(t.as_str().parse::<RelationType>().unwrap(), *t);
        }
        assert!("Chemical".parse::<EntityType>().is_err());
        assert!("Positive Correlation".parse::<RelationType>().is_err());
    }

    #[test]
    fn slices_count_chars() {
        let d = Document::new("1", "TNF-α", "binds β-actin.", " ");
        assert_eq!(d.text(), "TNF-α binds β-actin.");
        assert_eq!(d.len(), 20);
        assert_eq!(d.slice(4, 5), Some("α"));
        assert_eq!(d.slice(12, 19), Some("β-actin"));
        assert_eq!(d.slice(3, 21), None);
    }

    #[test]
    fn relation_pairs_are_unordered() {
        let r = |a: &str, b: &str| RelationInstance {
            id: "1".into(),
            document_id: "d".into(),
            rel_type: RelationType::Bind,
            entity_a: a.into(),
            entity_b: b.into(),
            novelty: Novelty::No,
        };
        assert!(r("x", "y").same_pair(&r("y", "x")));
        assert_eq!(r("y", "x").pair(), ("x", "y"));
    }

    #[test]
    fn corpus_rejects_bad_references() {
        let doc = Document::new("1", "T.", "A b.", " ");
        let good = Mention::new("m", "1", 0, 2, EntityType::ChemicalEntity, "T.");
        assert!(Corpus::new(vec![doc.clone()], vec![good.clone()], vec![]).is_ok());
        let stray = Mention::new("m", "2", 0, 2, EntityType::ChemicalEntity, "T.");
        assert!(matches!(
            Corpus::new(vec![doc.clone()], vec![stray], vec![]),
            Err(Error::UnknownDocument(_))
        ));
        assert!(matches!(
            Corpus::new(vec![doc.clone(), doc], vec![], vec![]),
            Err(Error::DuplicateDocument(_))
        ));
    }
}
