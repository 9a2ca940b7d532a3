//! Type-mapped merging of several corpora into one BIO training set per
//! entity type, plus the seeded train/validation split.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bio::{encode_document, TagStyle};
use crate::corpus::{parse_conll, write_conll, EntityType, Mention, SourceCorpus, TaggedSentence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapTarget {
    Entity(EntityType),
    Drop,
}

/// `(corpus, source label) -> target` entries, loaded from
/// `corpus<TAB>source_type<TAB>target_type` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeMap {
    entries: BTreeMap<(String, String), MapTarget>,
}

impl TypeMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = TypeMap::default();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if n == 0 && line == "corpus\tsource_type\ttarget_type" {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [corpus, source, target] = cols[..] else {
                return Err(Error::format("type map", line_no, "expected 3 tab-separated columns"));
            };
            let target = match target {
                "DROP" => MapTarget::Drop,
                t => MapTarget::Entity(
                    t.parse()
                        .map_err(|e: Error| Error::format("type map", line_no, e.to_string()))?,
                ),
            };
            let key = (corpus.to_owned(), source.to_owned());
            match map.entries.insert(key, target) {
                Some(previous) if previous != target => {
                    return Err(Error::format(
                        "type map",
                        line_no,
                        format!("conflicting entries for `{corpus}` / `{source}`"),
                    ))
                }
                _ => {}
            }
        }
        Ok(map)
    }

    pub fn insert(&mut self, corpus: &str, source: &str, target: MapTarget) {
        self.entries.insert((corpus.to_owned(), source.to_owned()), target);
    }

    /// Maps every challenge type name to itself for `corpus`.
    pub fn identity(corpus: &str) -> Self {
        let mut map = TypeMap::default();
        for t in EntityType::ALL {
            map.insert(corpus, t.as_str(), MapTarget::Entity(*t));
        }
        map
    }

    pub fn get(&self, corpus: &str, source: &str) -> Option<MapTarget> {
        self.entries.get(&(corpus.to_owned(), source.to_owned())).copied()
    }

    /// Fails on the first label of `corpus` without an entry.
    pub fn preflight(&self, corpus: &SourceCorpus) -> Result<()> {
        for doc in &corpus.documents {
            for span in &doc.spans {
                if self.get(&corpus.name, &span.label).is_none() {
                    return Err(Error::UnmappedType {
                        corpus: corpus.name.clone(),
                        source_type: span.label.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusCounts {
    pub corpus: String,
    pub documents: usize,
    pub sentences: usize,
    pub tokens: usize,
    pub begin_tags: usize,
    /// Spans whose mapped type is the target type.
    pub target_mentions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateText {
    pub first: (String, String),
    pub second: (String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeReport {
    pub target: Option<EntityType>,
    pub corpora: Vec<CorpusCounts>,
    /// Documents whose annotation text repeats an earlier document's.
    pub duplicates: Vec<DuplicateText>,
}

impl MergeReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("corpus\tdocuments\tsentences\ttokens\tb_tags\ttarget_mentions\n");
        for c in &self.corpora {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                c.corpus, c.documents, c.sentences, c.tokens, c.begin_tags, c.target_mentions
            );
        }
        if !self.duplicates.is_empty() {
            out.push_str("\nduplicate_of\tcorpus\tdocument\tfirst_corpus\tfirst_document\n");
            for d in &self.duplicates {
                let _ = writeln!(out, "duplicate_of\t{}\t{}\t{}\t{}", d.second.0, d.second.1, d.first.0, d.first.1);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeOptions {
    /// Shuffle sentences with this seed; `None` keeps input order.
    pub shuffle_seed: Option<u64>,
    pub style: TagStyle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeOutput {
    pub sentences: Vec<TaggedSentence>,
    pub report: MergeReport,
}

impl MergeOutput {
    pub fn to_conll(&self) -> Result<String> {
        write_conll(&self.sentences)
    }
}

fn mapped_mentions(corpus: &SourceCorpus, map: &TypeMap, doc: usize, target: EntityType) -> Vec<Mention> {
    let d = &corpus.documents[doc];
    d.spans
        .iter()
        .filter(|s| map.get(&corpus.name, &s.label) == Some(MapTarget::Entity(target)))
        .map(|s| Mention::new(s.id.clone(), d.document.id.clone(), s.start, s.end, target, s.text.clone()))
        .collect()
}

/// Projects every corpus onto `target` under its type map and concatenates
/// the sentences in input order (then shuffles, if seeded).
pub fn merge_corpora(
    inputs: &[(&SourceCorpus, &TypeMap)],
    target: EntityType,
    opts: &MergeOptions,
) -> Result<MergeOutput> {
    for (corpus, map) in inputs {
        map.preflight(corpus)?;
    }
    let mut sentences = Vec::new();
    let mut report = MergeReport {
        target: Some(target),
        ..Default::default()
    };
    let mut seen: HashMap<&str, (&str, &str)> = HashMap::new();
    for (corpus, map) in inputs {
        let per_doc: Vec<(usize, Vec<TaggedSentence>)> = (0..corpus.documents.len())
            .into_par_iter()
            .map(|i| {
                let mentions = mapped_mentions(corpus, map, i, target);
                let tagged = encode_document(&corpus.documents[i].document, &mentions, target, opts.style)?;
                Ok((mentions.len(), tagged))
            })
            .collect::<Result<_>>()?;
        let mut counts = CorpusCounts {
            corpus: corpus.name.clone(),
            documents: corpus.documents.len(),
            ..Default::default()
        };
        for (n_mentions, tagged) in per_doc {
            counts.target_mentions += n_mentions;
            counts.sentences += tagged.len();
            counts.tokens += tagged.iter().map(TaggedSentence::len).sum::<usize>();
            counts.begin_tags += tagged.iter().map(TaggedSentence::begin_count).sum::<usize>();
            sentences.extend(tagged);
        }
        for d in &corpus.documents {
            let here = (corpus.name.as_str(), d.document.id.as_str());
            if let Some(first) = seen.get(d.document.text()) {
                report.duplicates.push(DuplicateText {
                    first: (first.0.to_owned(), first.1.to_owned()),
                    second: (here.0.to_owned(), here.1.to_owned()),
                });
            } else {
                seen.insert(d.document.text(), here);
            }
        }
        report.corpora.push(counts);
    }
    if let Some(seed) = opts.shuffle_seed {
        sentences.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(MergeOutput { sentences, report })
}

/// Splits sentences into (train, validation). The validation size is
/// `round(fraction * n)`, kept within `1..n`; both parts keep input order.
pub fn holdout_split(
    sentences: Vec<TaggedSentence>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<TaggedSentence>, Vec<TaggedSentence>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("holdout fraction {fraction} is not in (0, 1)")));
    }
    let n = sentences.len();
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} sentence(s)")));
    }
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let (mut train, mut val) = (Vec::with_capacity(n - n_val), Vec::with_capacity(n_val));
    for (s, v) in sentences.into_iter().zip(is_val) {
        if v {
            val.push(s);
        } else {
            train.push(s);
        }
    }
    Ok((train, val))
}

/// [`holdout_split`] over CoNLL text.
pub fn holdout_split_text(bio_text: &str, fraction: f64, seed: u64) -> Result<(String, String)> {
    let (train, val) = holdout_split(parse_conll(bio_text)?, fraction, seed)?;
    Ok((write_conll(&train)?, write_conll(&val)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, SourceDocument, SourceSpan};

    fn corpus(name: &str, docs: &[(&str, &[(usize, usize, &str)])]) -> SourceCorpus {
        SourceCorpus {
            name: name.into(),
            documents: docs
                .iter()
                .enumerate()
                .map(|(i, (text, spans))| {
                    let document = Document::from_text(format!("{name}{i}"), text);
                    let spans = spans
                        .iter()
                        .enumerate()
                        .map(|(k, &(s, e, label))| SourceSpan {
                            id: format!("T{k}"),
                            start: s,
                            end: e,
                            label: label.into(),
                            text: document.slice(s, e).unwrap().into(),
                        })
                        .collect();
                    SourceDocument { document, spans }
                })
                .collect(),
        }
    }

    fn chem_map(name: &str) -> TypeMap {
        TypeMap::parse(&format!("{name}\tChemical\tChemicalEntity\n{name}\tDisease\tDiseaseOrPhenotypicFeature\n"))
            .unwrap()
    }

    #[test]
    fn type_map_parsing() {
        let m = TypeMap::parse("corpus\tsource_type\ttarget_type\n# note\nbc5\tChemical\tChemicalEntity\nbc5\tX\tDROP\n")
            .unwrap();
        assert_eq!(m.get("bc5", "Chemical"), Some(MapTarget::Entity(EntityType::ChemicalEntity)));
        assert_eq!(m.get("bc5", "X"), Some(MapTarget::Drop));
        assert!(TypeMap::parse("a\tb\tChemical\n").is_err());
        assert!(TypeMap::parse("a\tb\n").is_err());
        assert!(TypeMap::parse("a\tb\tDROP\na\tb\tCellLine\n").is_err());
    }

    #[test]
    fn sentence_counts_are_conserved() {
        let ten = ["One sentence here."; 10];
        let fifteen = vec!["Another one."; 15];
        let a = corpus("a", &ten.iter().map(|t| (*t, &[][..])).collect::<Vec<_>>());
        let b = corpus("b", &fifteen.iter().map(|t| (*t, &[][..])).collect::<Vec<_>>());
        let (ma, mb) = (chem_map("a"), chem_map("b"));
        let out = merge_corpora(&[(&a, &ma), (&b, &mb)], EntityType::ChemicalEntity, &MergeOptions::default())
            .unwrap();
        assert_eq!(out.sentences.len(), 25);
        assert_eq!(out.report.corpora[0].sentences, 10);
        assert_eq!(out.report.corpora[1].sentences, 15);
        // identical texts are flagged, never removed
        assert_eq!(out.report.duplicates.len(), 9 + 14);
    }

    #[test]
    fn other_types_become_outside() {
        let c = corpus("c", &[("aspirin helps", &[(0, 7, "Chemical")])]);
        let m = chem_map("c");
        let out = merge_corpora(&[(&c, &m)], EntityType::DiseaseOrPhenotypicFeature, &MergeOptions::default()).unwrap();
        assert_eq!(out.report.corpora[0].begin_tags, 0);
        assert!(out.sentences.iter().flat_map(|s| &s.tags).all(|t| t.is_outside()));
        let out = merge_corpora(&[(&c, &m)], EntityType::ChemicalEntity, &MergeOptions::default()).unwrap();
        assert_eq!(out.report.corpora[0].begin_tags, 1);
    }

    #[test]
    fn dropped_and_unmapped_labels() {
        let c = corpus("c", &[("aspirin helps rats", &[(0, 7, "Chemical"), (14, 18, "Species")])]);
        let err = merge_corpora(&[(&c, &chem_map("c"))], EntityType::ChemicalEntity, &MergeOptions::default())
            .unwrap_err();
        match err {
            Error::UnmappedType { corpus, source_type } => assert_eq!((corpus.as_str(), source_type.as_str()), ("c", "Species")),
            other => panic!("{other}"),
        }
        let mut m = chem_map("c");
        m.insert("c", "Species", MapTarget::Drop);
        let out = merge_corpora(&[(&c, &m)], EntityType::ChemicalEntity, &MergeOptions::default()).unwrap();
        assert_eq!(out.report.corpora[0].begin_tags, 1);
    }

    #[test]
    fn seeded_shuffle_is_reproducible() {
        let texts: Vec<String> = (0..30).map(|i| format!("Sentence number {i} here.")).collect();
        let docs: Vec<(&str, &[(usize, usize, &str)])> = texts.iter().map(|t| (t.as_str(), &[][..])).collect();
        let c = corpus("c", &docs);
        let m = chem_map("c");
        let opts = MergeOptions {
            shuffle_seed: Some(7),
            ..Default::default()
        };
        let a = merge_corpora(&[(&c, &m)], EntityType::ChemicalEntity, &opts).unwrap();
        let b = merge_corpora(&[(&c, &m)], EntityType::ChemicalEntity, &opts).unwrap();
        assert_eq!(a.to_conll().unwrap(), b.to_conll().unwrap());
        let plain = merge_corpora(&[(&c, &m)], EntityType::ChemicalEntity, &MergeOptions::default()).unwrap();
        assert_ne!(a.to_conll().unwrap(), plain.to_conll().unwrap());
    }

    fn numbered(n: usize) -> String {
        (0..n).map(|i| format!("w{i}\tO\n")).collect::<Vec<_>>().join("\n")
    }

    #[test]
    fn holdout_sizes() {
        let (train, val) = holdout_split_text(&numbered(100), 0.1, 3).unwrap();
        assert_eq!(parse_conll(&train).unwrap().len(), 90);
        assert_eq!(parse_conll(&val).unwrap().len(), 10);
        let (train, val) = holdout_split_text(&numbered(2), 0.5, 3).unwrap();
        assert_eq!((parse_conll(&train).unwrap().len(), parse_conll(&val).unwrap().len()), (1, 1));
        assert!(holdout_split_text(&numbered(1), 0.5, 3).is_err());
        assert!(holdout_split_text(&numbered(10), 1.0, 3).is_err());
        assert!(holdout_split_text(&numbered(10), 0.0, 3).is_err());
    }
}
