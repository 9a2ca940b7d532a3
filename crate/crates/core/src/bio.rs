//! Mention-aware tokenization and the conversion between offset mentions
//! and per-type BIO tag sequences.
//!
//! The tokenizer splits on whitespace, detaches edge punctuation as
//! single-character tokens, splits hyphenated words (`Cisplatin-induced`
//! gives three tokens) and always cuts at mention boundaries, so that
//! `decode_bio(project_bio(m)) == m` for any set of non-overlapping mentions.

use std::collections::BTreeSet;

use crate::corpus::{Document, EntityType, Mention, Tag, TaggedSentence, Token};
use crate::{Error, Result};

/// Characters split off the edges of a whitespace chunk.
pub const DETACHED_PUNCTUATION: &[char] = &[
    '.', ',', ';', ':', '(', ')', '[', ']', '{', '}', '"', '\'', '!', '?', '-',
];

const SENTENCE_FINAL: &[char] = &['.', '?', '!'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagStyle {
    /// `B`, `I`, `O`: one model per entity type.
    #[default]
    Bare,
    /// `B-<TYPE>`, `I-<TYPE>`, `O`.
    Typed,
}

impl TagStyle {
    fn begin(self, t: EntityType) -> Tag {
        match self {
            TagStyle::Bare => Tag::B(None),
            TagStyle::Typed => Tag::B(Some(t)),
        }
    }

    fn inside(self, t: EntityType) -> Tag {
        match self {
            TagStyle::Bare => Tag::I(None),
            TagStyle::Typed => Tag::I(Some(t)),
        }
    }
}

fn is_detached(c: char) -> bool {
    DETACHED_PUNCTUATION.contains(&c)
}

fn check_mentions(document: &Document, mentions: &[&Mention], same_type_only: bool) -> Result<()> {
    for m in mentions {
        m.check_against(document)?;
        let first = m.text.chars().next().is_some_and(char::is_whitespace);
        let last = m.text.chars().next_back().is_some_and(char::is_whitespace);
        if first || last {
            return Err(Error::Offset {
                document: document.id.clone(),
                mention: m.id.clone(),
                message: "mention starts or ends with whitespace".into(),
            });
        }
    }
    let mut sorted: Vec<&Mention> = mentions.to_vec();
    sorted.sort_by_key(|m| (m.start, m.end));
    let mut colliding = BTreeSet::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if b.start >= a.end {
                break;
            }
            if !same_type_only || a.entity_type == b.entity_type {
                colliding.insert(a.id.clone());
                colliding.insert(b.id.clone());
            }
        }
    }
    if colliding.is_empty() {
        Ok(())
    } else {
        Err(Error::OverlappingMentions {
            document: document.id.clone(),
            ids: colliding.into_iter().collect(),
        })
    }
}

/// Tokens for one `[start, end)` piece: leading and trailing punctuation
/// become single-character tokens around the core.
fn push_piece(chars: &[char], mut start: usize, mut end: usize, out: &mut Vec<(usize, usize)>) {
    while start < end && is_detached(chars[start]) {
        out.push((start, start + 1));
        start += 1;
    }
    let mut trailing = Vec::new();
    while end > start && is_detached(chars[end - 1]) {
        trailing.push((end - 1, end));
        end -= 1;
    }
    if start < end {
        out.push((start, end));
    }
    out.extend(trailing.into_iter().rev());
}

/// Splits a document into sentences of tokens. Every boundary of every
/// mention in `mentions` is a token boundary, and no sentence break falls
/// inside a mention. Same-type mentions must not overlap.
pub fn tokenize(document: &Document, mentions: &[Mention]) -> Result<Vec<Vec<Token>>> {
    let refs: Vec<&Mention> = mentions.iter().collect();
    check_mentions(document, &refs, true)?;
    Ok(tokenize_unchecked(document, &refs))
}

/// Tokenizes without mention cuts, as at prediction time.
pub fn tokenize_plain(document: &Document) -> Vec<Vec<Token>> {
    tokenize_unchecked(document, &[])
}

/// Tokenizes with cuts at every mention edge and no sentence break inside a
/// mention, without any overlap checks.
pub(crate) fn tokenize_unchecked(document: &Document, mentions: &[&Mention]) -> Vec<Vec<Token>> {
    let chars: Vec<char> = document.text().chars().collect();
    let n = chars.len();
    let mut cut = vec![false; n + 1];
    for m in mentions {
        cut[m.start] = true;
        cut[m.end] = true;
    }

    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < n && !chars[i].is_whitespace() {
            i += 1;
        }
        let mut piece_start = chunk_start;
        for b in chunk_start + 1..i {
            if cut[b] || chars[b] == '-' || chars[b - 1] == '-' {
                push_piece(&chars, piece_start, b, &mut spans);
                piece_start = b;
            }
        }
        push_piece(&chars, piece_start, i, &mut spans);
    }

    // positions strictly inside some mention cannot host a sentence break
    let mut covered = vec![false; n + 1];
    for m in mentions {
        for c in covered.iter_mut().take(m.end).skip(m.start + 1) {
            *c = true;
        }
    }

    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    for (k, &(s, e)) in spans.iter().enumerate() {
        current.push(Token {
            text: chars[s..e].iter().collect(),
            start: s,
            end: e,
        });
        let Some(&(next_s, _)) = spans.get(k + 1) else {
            continue;
        };
        let breaks = e - s == 1
            && SENTENCE_FINAL.contains(&chars[s])
            && next_s > e
            && (chars[next_s].is_uppercase() || chars[next_s].is_ascii_digit())
            && !(e..=next_s).any(|p| covered[p]);
        if breaks {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Tags tokens inside `target` mentions with B (first token) and I (rest);
/// every other token, including those inside mentions of other types, is O.
pub fn project_bio(
    sentences: &[Vec<Token>],
    mentions: &[Mention],
    target: EntityType,
    style: TagStyle,
) -> Vec<TaggedSentence> {
    let mut targets: Vec<&Mention> = mentions.iter().filter(|m| m.entity_type == target).collect();
    targets.sort_by_key(|m| (m.start, m.end));
    project_sorted(sentences, &targets, style)
}

/// Projects mentions of every type at once, with typed tags. Mentions of
/// different types must not overlap here.
pub fn project_all(document: &Document, mentions: &[Mention]) -> Result<Vec<TaggedSentence>> {
    let refs: Vec<&Mention> = mentions.iter().collect();
    check_mentions(document, &refs, false)?;
    let sentences = tokenize_unchecked(document, &refs);
    let mut sorted = refs;
    sorted.sort_by_key(|m| (m.start, m.end));
    Ok(project_sorted(&sentences, &sorted, TagStyle::Typed))
}

fn project_sorted(sentences: &[Vec<Token>], targets: &[&Mention], style: TagStyle) -> Vec<TaggedSentence> {
    let mut p = 0;
    sentences
        .iter()
        .map(|tokens| {
            let tags = tokens
                .iter()
                .map(|tok| {
                    while p < targets.len() && targets[p].end <= tok.start {
                        p += 1;
                    }
                    match targets.get(p) {
                        Some(m) if m.start <= tok.start && tok.end <= m.end => {
                            if tok.start == m.start {
                                style.begin(m.entity_type)
                            } else {
                                style.inside(m.entity_type)
                            }
                        }
                        _ => Tag::O,
                    }
                })
                .collect();
            TaggedSentence {
                tokens: tokens.clone(),
                tags,
            }
        })
        .collect()
}

/// Tokenizes with the `target` mentions and projects them.
pub fn encode_document(
    document: &Document,
    mentions: &[Mention],
    target: EntityType,
    style: TagStyle,
) -> Result<Vec<TaggedSentence>> {
    let targets: Vec<Mention> = mentions.iter().filter(|m| m.entity_type == target).cloned().collect();
    let sentences = tokenize(document, &targets)?;
    Ok(project_bio(&sentences, &targets, target, style))
}

/// Turns each maximal `B I*` run into a mention of `target`. An `I` with no
/// open run (or continuing a different label) starts a new mention. Typed
/// tags of other labels count as O.
pub fn decode_bio(tagged: &[TaggedSentence], target: EntityType, document: &Document) -> Vec<Mention> {
    let mut out = Vec::new();
    let emit = |start: usize, end: usize, out: &mut Vec<Mention>| {
        let text = document.slice(start, end).unwrap_or_default();
        let id = format!("{}_{}_{}", document.id, target.as_str(), out.len() + 1);
        out.push(Mention::new(id, document.id.clone(), start, end, target, text));
    };
    for sentence in tagged {
        // (start, end, label) of the open run
        let mut run: Option<(usize, usize, Option<EntityType>)> = None;
        for (tok, tag) in sentence.tokens.iter().zip(&sentence.tags) {
            let tag = match tag.label() {
                Some(l) if l != target => Tag::O,
                _ => *tag,
            };
            match tag {
                Tag::O => {
                    if let Some((s, e, _)) = run.take() {
                        emit(s, e, &mut out);
                    }
                }
                Tag::B(label) => {
                    if let Some((s, e, _)) = run.take() {
                        emit(s, e, &mut out);
                    }
                    run = Some((tok.start, tok.end, label));
                }
                Tag::I(label) => match run.as_mut() {
                    Some((_, e, l)) if *l == label => *e = tok.end,
                    _ => {
                        if let Some((s, e, _)) = run.take() {
                            emit(s, e, &mut out);
                        }
                        run = Some((tok.start, tok.end, label));
                    }
                },
            }
        }
        if let Some((s, e, _)) = run {
            emit(s, e, &mut out);
        }
    }
    out
}
