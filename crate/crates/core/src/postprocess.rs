//! Output clean-up before submission: the single-character mention rule,
//! novelty conflict resolution and the final challenge files.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::corpus::{write_entities, write_relations, EntityType, Mention, Novelty, RelationInstance, RelationType};
use crate::{Error, Result};

/// What counts as a letter for the single-character chemical rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LetterClass {
    #[default]
    Unicode,
    Ascii,
}

impl LetterClass {
    fn accepts(self, c: char) -> bool {
        match self {
            LetterClass::Unicode => c.is_alphabetic(),
            LetterClass::Ascii => c.is_ascii_alphabetic(),
        }
    }
}

/// Drops one-character mentions, except chemical mentions whose character
/// is a letter (element symbols such as `C`).
pub fn filter_short_mentions(mentions: Vec<Mention>, letters: LetterClass) -> Vec<Mention> {
    mentions
        .into_iter()
        .filter(|m| {
            let mut chars = m.text.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => m.entity_type == EntityType::ChemicalEntity && letters.accepts(c),
                _ => true,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoveltyPolicy {
    /// Most frequent label; ties go to `Novel`.
    #[default]
    Majority,
    PreferNovel,
    PreferNo,
    FirstSeen,
}

impl FromStr for NoveltyPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(NoveltyPolicy::Majority),
            "prefer_novel" => Ok(NoveltyPolicy::PreferNovel),
            "prefer_no" => Ok(NoveltyPolicy::PreferNo),
            "first_seen" => Ok(NoveltyPolicy::FirstSeen),
            _ => Err(Error::UnknownLabel {
                kind: "novelty policy",
                value: s.to_owned(),
            }),
        }
    }
}

impl NoveltyPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            NoveltyPolicy::Majority => "majority",
            NoveltyPolicy::PreferNovel => "prefer_novel",
            NoveltyPolicy::PreferNo => "prefer_no",
            NoveltyPolicy::FirstSeen => "first_seen",
        }
    }

    fn choose(self, labels: &[Novelty]) -> Novelty {
        let novel = labels.iter().filter(|&&n| n == Novelty::Novel).count();
        let no = labels.len() - novel;
        match self {
            NoveltyPolicy::FirstSeen => labels[0],
            NoveltyPolicy::PreferNovel if novel > 0 => Novelty::Novel,
            NoveltyPolicy::PreferNovel => Novelty::No,
            NoveltyPolicy::PreferNo if no > 0 => Novelty::No,
            NoveltyPolicy::PreferNo => Novelty::Novel,
            NoveltyPolicy::Majority if no > novel => Novelty::No,
            NoveltyPolicy::Majority => Novelty::Novel,
        }
    }
}

/// Collapses relations sharing (document, unordered pair, type) into one,
/// picking its novelty by `policy`. The survivor keeps the first instance's
/// id and orientation. Output is sorted by document, pair, then type.
pub fn resolve_novelty(relations: Vec<RelationInstance>, policy: NoveltyPolicy) -> Vec<RelationInstance> {
    let mut groups: BTreeMap<(String, String, String, RelationType), (RelationInstance, Vec<Novelty>)> =
        BTreeMap::new();
    for r in relations {
        let (a, b) = r.pair();
        let key = (r.document_id.clone(), a.to_owned(), b.to_owned(), r.rel_type);
        groups
            .entry(key)
            .and_modify(|(_, labels)| labels.push(r.novelty))
            .or_insert_with(|| {
                let n = r.novelty;
                (r, vec![n])
            });
    }
    groups
        .into_values()
        .map(|(mut r, labels)| {
            r.novelty = policy.choose(&labels);
            r
        })
        .collect()
}

fn check_mention(m: &Mention) -> Result<()> {
    let bad = |msg: &str| Err(Error::invalid(format!("mention `{}` in `{}`: {msg}", m.id, m.document_id)));
    if m.document_id.is_empty() {
        return bad("empty document id");
    }
    if m.start >= m.end {
        return bad("empty or inverted span");
    }
    if m.text.chars().count() != m.end - m.start {
        return bad("text length does not match its span");
    }
    Ok(())
}

/// Sorts by (document, start, end, type, id) and writes the entities file.
/// Nothing is produced if any mention is invalid.
pub fn write_entity_submission(mentions: &[Mention]) -> Result<String> {
    for m in mentions {
        check_mention(m)?;
    }
    let mut sorted: Vec<Mention> = mentions.to_vec();
    sorted.sort_by(|a, b| {
        (&a.document_id, a.start, a.end, a.entity_type, &a.id).cmp(&(&b.document_id, b.start, b.end, b.entity_type, &b.id))
    });
    write_entities(&sorted)
}

/// Sorts by (document, pair, type, id) and writes the relations file.
pub fn write_relation_submission(relations: &[RelationInstance]) -> Result<String> {
    for r in relations {
        if r.entity_a == r.entity_b {
            return Err(Error::invalid(format!("relation `{}` links `{}` to itself", r.id, r.entity_a)));
        }
        if r.document_id.is_empty() || r.entity_a.is_empty() || r.entity_b.is_empty() {
            return Err(Error::invalid(format!("relation `{}` has an empty field", r.id)));
        }
    }
    let mut sorted: Vec<RelationInstance> = relations.to_vec();
    sorted.sort_by(|a, b| {
        (&a.document_id, a.pair(), a.rel_type, &a.id).cmp(&(&b.document_id, b.pair(), b.rel_type, &b.id))
    });
    write_relations(&sorted)
}

/// Replaces mention ids with `0, 1, 2, ...` in their current order.
pub fn renumber_mentions(mentions: &mut [Mention]) {
    for (i, m) in mentions.iter_mut().enumerate() {
        m.id = i.to_string();
    }
}

pub fn renumber_relations(relations: &mut [RelationInstance]) {
    for (i, r) in relations.iter_mut().enumerate() {
        r.id = i.to_string();
    }
}
