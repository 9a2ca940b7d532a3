//! Challenge scoring: per-document Jaccard over mentions, and over
//! relations with partial credit, averaged over the gold documents.
//!
//! Jaccard is computed as `|P ∩ O| / (|P| + |O| - |P ∩ O|)`. For relations
//! the intersection is the sum of per-gold-relation credits
//! `0.25·A + 0.5·B + 0.25·C` (pair, type, novelty).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::corpus::{Mention, RelationInstance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Same start, end and type.
    #[default]
    Exact,
    /// Same type and at least one shared character; pairs are taken
    /// greedily by overlap length, then start offset.
    Overlap,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "overlap" => Ok(MatchMode::Overlap),
            _ => Err(Error::UnknownLabel {
                kind: "match mode",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AbcMode {
    /// B requires A and C requires B.
    #[default]
    Cascade,
    /// B and C each require only A.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Best credit among predictions on the gold pair.
    #[default]
    Max,
    /// Mean credit among predictions on the gold pair.
    Mean,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "mean" => Ok(Aggregation::Mean),
            _ => Err(Error::UnknownLabel {
                kind: "aggregation",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelationOptions {
    pub abc: AbcMode,
    pub aggregation: Aggregation,
}

fn same_document<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut first: Option<&str> = None;
    for id in ids {
        match first {
            None => first = Some(id),
            Some(f) if f != id => {
                return Err(Error::invalid(format!("cross-document comparison: `{f}` and `{id}`")));
            }
            _ => {}
        }
    }
    Ok(())
}

/// One-to-one matched pairs between predicted and gold mentions of one
/// document.
pub fn match_mentions(pred: &[Mention], gold: &[Mention], mode: MatchMode) -> Result<usize> {
    same_document(pred.iter().chain(gold).map(|m| m.document_id.as_str()))?;
    match mode {
        MatchMode::Exact => {
            let mut remaining: HashMap<_, usize> = HashMap::new();
            for g in gold {
                *remaining.entry((g.start, g.end, g.entity_type)).or_insert(0) += 1;
            }
            let mut matched = 0;
            for p in pred {
                if let Some(n) = remaining.get_mut(&(p.start, p.end, p.entity_type)) {
                    if *n > 0 {
                        *n -= 1;
                        matched += 1;
                    }
                }
            }
            Ok(matched)
        }
        MatchMode::Overlap => {
            let mut pairs = Vec::new();
            for (pi, p) in pred.iter().enumerate() {
                for (gi, g) in gold.iter().enumerate() {
                    if p.entity_type == g.entity_type && p.overlaps(g) {
                        let shared = p.end.min(g.end) - p.start.max(g.start);
                        pairs.push((shared, g.start, p.start, gi, pi));
                    }
                }
            }
            pairs.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| (a.1, a.2, a.3, a.4).cmp(&(b.1, b.2, b.3, b.4))));
            let (mut used_p, mut used_g) = (vec![false; pred.len()], vec![false; gold.len()]);
            let mut matched = 0;
            for (_, _, _, gi, pi) in pairs {
                if !used_p[pi] && !used_g[gi] {
                    used_p[pi] = true;
                    used_g[gi] = true;
                    matched += 1;
                }
            }
            Ok(matched)
        }
    }
}

/// `intersection / (pred + gold - intersection)`; 1 when both are empty.
pub fn jaccard(pred_count: usize, gold_count: usize, intersection: f64) -> Result<f64> {
    if pred_count == 0 && gold_count == 0 {
        return Ok(1.0);
    }
    let bound = pred_count.min(gold_count) as f64;
    if !(0.0..=bound + 1e-12).contains(&intersection) {
        return Err(Error::invalid(format!(
            "intersection {intersection} outside [0, min({pred_count}, {gold_count})]"
        )));
    }
    Ok(intersection / (pred_count as f64 + gold_count as f64 - intersection))
}

/// Pair / type / novelty agreement between a gold relation and one
/// prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl Components {
    pub fn of(gold: &RelationInstance, pred: &RelationInstance, abc: AbcMode) -> Self {
        let a = gold.same_pair(pred);
        let type_ok = gold.rel_type == pred.rel_type;
        let novelty_ok = gold.novelty == pred.novelty;
        let b = a && type_ok;
        let c = match abc {
            AbcMode::Cascade => b && novelty_ok,
            AbcMode::Independent => a && novelty_ok,
        };
        Components { a, b, c }
    }

    pub fn credit(self) -> f64 {
        0.25 * f64::from(u8::from(self.a)) + 0.5 * f64::from(u8::from(self.b)) + 0.25 * f64::from(u8::from(self.c))
    }
}

/// Credit for one gold relation against all predictions of its document.
pub fn relation_intersection(gold: &RelationInstance, preds: &[RelationInstance], opts: RelationOptions) -> f64 {
    let credits = preds
        .iter()
        .filter(|p| p.same_pair(gold))
        .map(|p| Components::of(gold, p, opts.abc).credit());
    match opts.aggregation {
        Aggregation::Max => credits.fold(0.0, f64::max),
        Aggregation::Mean => {
            let (sum, n) = credits.fold((0.0, 0usize), |(s, n), c| (s + c, n + 1));
            if n == 0 {
                0.0
            } else {
                sum / n as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocumentScore {
    pub predicted: usize,
    pub gold: usize,
    pub intersection: f64,
    pub score: f64,
}

pub fn score_mentions(pred: &[Mention], gold: &[Mention], mode: MatchMode) -> Result<DocumentScore> {
    let matched = match_mentions(pred, gold, mode)?;
    Ok(DocumentScore {
        predicted: pred.len(),
        gold: gold.len(),
        intersection: matched as f64,
        score: jaccard(pred.len(), gold.len(), matched as f64)?,
    })
}

/// `S / (|P| + |O| - S)` with `S` the summed gold credits, capped at 1
/// (reachable only when the gold set repeats a relation).
pub fn score_relations(
    pred: &[RelationInstance],
    gold: &[RelationInstance],
    opts: RelationOptions,
) -> Result<DocumentScore> {
    same_document(pred.iter().chain(gold).map(|r| r.document_id.as_str()))?;
    let s: f64 = gold.iter().map(|g| relation_intersection(g, pred, opts)).sum();
    let (p, o) = (pred.len() as f64, gold.len() as f64);
    let score = if pred.is_empty() && gold.is_empty() {
        1.0
    } else if s == 0.0 {
        0.0
    } else {
        (s / (p + o - s)).min(1.0)
    };
    Ok(DocumentScore {
        predicted: pred.len(),
        gold: gold.len(),
        intersection: s,
        score,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreReport {
    pub per_document: BTreeMap<String, DocumentScore>,
    pub corpus_score: f64,
}

impl ScoreReport {
    fn from_scores(per_document: BTreeMap<String, DocumentScore>) -> Self {
        let corpus_score = if per_document.is_empty() {
            1.0
        } else {
            per_document.values().map(|d| d.score).sum::<f64>() / per_document.len() as f64
        };
        ScoreReport {
            per_document,
            corpus_score,
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("abstract_id\tpredicted\tgold\tintersection\tscore\n");
        let (mut p, mut o, mut s) = (0, 0, 0.0);
        for (id, d) in &self.per_document {
            let _ = writeln!(out, "{id}\t{}\t{}\t{:.6}\t{:.6}", d.predicted, d.gold, d.intersection, d.score);
            p += d.predicted;
            o += d.gold;
            s += d.intersection;
        }
        let _ = writeln!(out, "corpus\t{p}\t{o}\t{s:.6}\t{:.6}", self.corpus_score);
        out
    }
}

fn group<'a, T>(
    items: &'a [T],
    doc: impl Fn(&T) -> &str,
    universe: &BTreeMap<String, ()>,
    what: &str,
) -> Result<HashMap<&'a str, Vec<T>>>
where
    T: Clone,
{
    let mut out: HashMap<&str, Vec<T>> = HashMap::new();
    for item in items {
        let id = doc(item);
        if !universe.contains_key(id) {
            return Err(Error::invalid(format!("{what} references unknown document `{id}`")));
        }
        out.entry(id).or_default().push(item.clone());
    }
    Ok(out)
}

fn universe_of(ids: impl IntoIterator<Item = String>) -> BTreeMap<String, ()> {
    ids.into_iter().map(|id| (id, ())).collect()
}

/// Scores mention predictions over the gold document universe. Gold items
/// outside `universe` are an error too.
pub fn score_corpus_mentions(
    pred: &[Mention],
    gold: &[Mention],
    universe: impl IntoIterator<Item = String>,
    mode: MatchMode,
) -> Result<ScoreReport> {
    let universe = universe_of(universe);
    let p = group(pred, |m| &m.document_id, &universe, "prediction")?;
    let g = group(gold, |m| &m.document_id, &universe, "gold mention")?;
    let empty = Vec::new();
    let per_document = universe
        .keys()
        .map(|id| {
            let s = score_mentions(p.get(id.as_str()).unwrap_or(&empty), g.get(id.as_str()).unwrap_or(&empty), mode)?;
            Ok((id.clone(), s))
        })
        .collect::<Result<_>>()?;
    Ok(ScoreReport::from_scores(per_document))
}

pub fn score_corpus_relations(
    pred: &[RelationInstance],
    gold: &[RelationInstance],
    universe: impl IntoIterator<Item = String>,
    opts: RelationOptions,
) -> Result<ScoreReport> {
    let universe = universe_of(universe);
    let p = group(pred, |r| &r.document_id, &universe, "prediction")?;
    let g = group(gold, |r| &r.document_id, &universe, "gold relation")?;
    let empty = Vec::new();
    let per_document = universe
        .keys()
        .map(|id| {
            let s = score_relations(p.get(id.as_str()).unwrap_or(&empty), g.get(id.as_str()).unwrap_or(&empty), opts)?;
            Ok((id.clone(), s))
        })
        .collect::<Result<_>>()?;
    Ok(ScoreReport::from_scores(per_document))
}

/// Which half of the challenge to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Ner(MatchMode),
    Re(RelationOptions),
}

/// Scores `pred` against `gold`, whose documents define the universe.
pub fn score_corpus(pred: &crate::corpus::Corpus, gold: &crate::corpus::Corpus, task: Task) -> Result<ScoreReport> {
    let universe = gold.documents.iter().map(|d| d.id.clone());
    match task {
        Task::Ner(mode) => score_corpus_mentions(&pred.mentions, &gold.mentions, universe, mode),
        Task::Re(opts) => score_corpus_relations(&pred.relations, &gold.relations, universe, opts),
    }
}

/// Distinct intersection values reachable for one (gold, prediction) pair.
pub fn reachable_credits(abc: AbcMode) -> Vec<f64> {
    let mut values: Vec<f64> = Vec::new();
    for bits in 0..8u8 {
        let (a, b, c) = (bits & 4 != 0, bits & 2 != 0, bits & 1 != 0);
        let legal = match abc {
            AbcMode::Cascade => (!b || a) && (!c || b),
            AbcMode::Independent => (!b || a) && (!c || a),
        };
        if legal {
            let v = Components { a, b, c }.credit();
            if !values.contains(&v) {
                values.push(v);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values
}
