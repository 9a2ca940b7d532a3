//! Lookup and co-occurrence stand-ins for the learned NER and RE models.
//! They consume and produce the same structures the models would, so the
//! rest of the pipeline runs unchanged around them.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::bio::{decode_bio, project_bio, tokenize_plain, tokenize_unchecked, TagStyle};
use crate::corpus::{Corpus, Document, EntityType, Mention, Novelty, RelationInstance, RelationType, Token};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub entity_type: EntityType,
    pub kb_ids: Vec<String>,
}

/// Case-folded surface forms, keyed by their token sequence.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<String, GazetteerEntry>,
    max_tokens: usize,
}

fn key_of(tokens: &[String]) -> String {
    tokens.join(" ")
}

fn folded_tokens(text: &str) -> Vec<String> {
    tokenize_plain(&Document::from_text("", text))
        .into_iter()
        .flatten()
        .map(|t| t.text.to_lowercase())
        .collect()
}

impl Gazetteer {
    /// Builds entries from every mention. A surface seen with several types
    /// takes the most frequent one, ties going to the earlier type in
    /// [`EntityType::ALL`]. Identifiers are the most frequent non-empty list
    /// among mentions of the winning type.
    pub fn build(corpus: &Corpus) -> Result<Self> {
        if corpus.mentions.is_empty() {
            return Err(Error::invalid("cannot build a gazetteer from a corpus without mentions"));
        }
        let mut types: HashMap<String, BTreeMap<EntityType, usize>> = HashMap::new();
        let mut ids: HashMap<(String, EntityType), BTreeMap<Vec<String>, usize>> = HashMap::new();
        let mut widths: HashMap<String, usize> = HashMap::new();
        for m in &corpus.mentions {
            let tokens = folded_tokens(&m.text);
            if tokens.is_empty() {
                continue;
            }
            let key = key_of(&tokens);
            widths.insert(key.clone(), tokens.len());
            *types.entry(key.clone()).or_default().entry(m.entity_type).or_insert(0) += 1;
            if !m.kb_ids.is_empty() {
                *ids.entry((key, m.entity_type)).or_default().entry(m.kb_ids.clone()).or_insert(0) += 1;
            }
        }
        let mut gazetteer = Gazetteer::default();
        for (key, counts) in types {
            // max_by_key keeps the last maximum; reversed, that is the
            // earliest type in declaration order
            let (&entity_type, _) = counts
                .iter()
                .rev()
                .max_by_key(|(_, &n)| n)
                .expect("at least one type per surface");
            let kb_ids = ids
                .get(&(key.clone(), entity_type))
                .and_then(|c| c.iter().rev().max_by_key(|(_, &n)| n).map(|(ids, _)| ids.clone()))
                .unwrap_or_default();
            gazetteer.max_tokens = gazetteer.max_tokens.max(widths[&key]);
            gazetteer.entries.insert(key, GazetteerEntry { entity_type, kb_ids });
        }
        Ok(gazetteer)
    }

    /// Adds or replaces one surface form.
    pub fn insert(&mut self, surface: &str, entity_type: EntityType, kb_ids: Vec<String>) {
        let tokens = folded_tokens(surface);
        if tokens.is_empty() {
            return;
        }
        self.max_tokens = self.max_tokens.max(tokens.len());
        self.entries.insert(key_of(&tokens), GazetteerEntry { entity_type, kb_ids });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, surface: &str) -> Option<&GazetteerEntry> {
        self.entries.get(&key_of(&folded_tokens(surface)))
    }

    /// Longest-match, left-to-right, token-aligned tagging. Mentions come
    /// out grouped by type in [`EntityType::ALL`] order, then by offset.
    pub fn tag_document(&self, document: &Document) -> Vec<Mention> {
        let mut found = Vec::new();
        if self.entries.is_empty() {
            return found;
        }
        for sentence in tokenize_plain(document) {
            let folded: Vec<String> = sentence.iter().map(|t| t.text.to_lowercase()).collect();
            let mut i = 0;
            while i < sentence.len() {
                let longest = self.max_tokens.min(sentence.len() - i);
                let hit = (1..=longest)
                    .rev()
                    .find_map(|w| self.entries.get(&key_of(&folded[i..i + w])).map(|e| (w, e)));
                match hit {
                    Some((w, entry)) => {
                        let (start, end) = (sentence[i].start, sentence[i + w - 1].end);
                        let text = document.slice(start, end).unwrap_or_default();
                        found.push(
                            Mention::new("", document.id.clone(), start, end, entry.entity_type, text)
                                .with_kb_ids(entry.kb_ids.iter().cloned()),
                        );
                        i += w;
                    }
                    None => i += 1,
                }
            }
        }
        found.sort_by_key(|m| (m.entity_type, m.start));
        for (n, m) in found.iter_mut().enumerate() {
            m.id = format!("{}_{}", document.id, n + 1);
        }
        found
    }
}

/// The NER stand-in: tags with the gazetteer, then, one type after
/// another, projects to BIO and decodes back as a per-type model's output
/// would be.
pub fn predict_entities(gazetteer: &Gazetteer, document: &Document) -> Vec<Mention> {
    let tagged = gazetteer.tag_document(document);
    let sentences: Vec<Vec<Token>> = tokenize_plain(document);
    let mut out = Vec::new();
    for &t in EntityType::ALL {
        let bio = project_bio(&sentences, &tagged, t, TagStyle::Bare);
        for mut m in decode_bio(&bio, t, document) {
            if let Some(src) = tagged.iter().find(|x| x.start == m.start && x.end == m.end && x.entity_type == t) {
                m.kb_ids = src.kb_ids.clone();
            }
            out.push(m);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateScope {
    #[default]
    Sentence,
    Abstract,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Candidates {
    pub relations: Vec<RelationInstance>,
    /// Mentions skipped because they carry no identifier.
    pub without_ids: usize,
}

/// One `Association`/`Novel` candidate per unordered pair of distinct
/// identifiers that co-occur in a sentence (or in the abstract), in order of
/// first co-occurrence.
pub fn generate_candidate_relations(document: &Document, mentions: &[Mention], scope: CandidateScope) -> Candidates {
    let mut out = Candidates::default();
    let mut usable: Vec<&Mention> = mentions
        .iter()
        .filter(|m| {
            let keep = !m.kb_ids.is_empty();
            if !keep {
                out.without_ids += 1;
            }
            keep
        })
        .collect();
    if out.without_ids > 0 {
        log::debug!("document {}: {} mention(s) without identifiers skipped", document.id, out.without_ids);
    }
    usable.sort_by_key(|m| (m.start, m.end));

    let groups: Vec<Vec<&Mention>> = match scope {
        CandidateScope::Abstract => vec![usable],
        CandidateScope::Sentence => {
            let refs: Vec<&Mention> = mentions.iter().filter(|m| m.check_against(document).is_ok()).collect();
            let sentences = tokenize_unchecked(document, &refs);
            let bounds: Vec<(usize, usize)> = sentences
                .iter()
                .filter_map(|s| Some((s.first()?.start, s.last()?.end)))
                .collect();
            let mut groups = vec![Vec::new(); bounds.len().max(1)];
            for m in usable {
                let k = bounds.iter().position(|&(_, e)| m.start < e).unwrap_or(groups.len() - 1);
                groups[k].push(m);
            }
            groups
        }
    };

    let mut seen: HashSet<(String, String)> = HashSet::new();
    for group in groups {
        let mut ids: Vec<&str> = Vec::new();
        for m in group {
            for id in &m.kb_ids {
                if !ids.contains(&id.as_str()) {
                    ids.push(id);
                }
            }
        }
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                let key = if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
                if seen.insert(key) {
                    out.relations.push(RelationInstance {
                        id: format!("{}_R{}", document.id, out.relations.len() + 1),
                        document_id: document.id.clone(),
                        rel_type: RelationType::Association,
                        entity_a: a.to_string(),
                        entity_b: b.to_string(),
                        novelty: Novelty::Novel,
                    });
                }
            }
        }
    }
    out
}
