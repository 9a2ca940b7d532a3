use std::collections::BTreeSet;

use biocurate_core::corpus::{Mention, EntityType, Novelty, RelationInstance, RelationType};
use biocurate_core::score::{
    jaccard, reachable_credits, relation_intersection, score_corpus_mentions, score_corpus_relations,
    score_mentions, score_relations, AbcMode, Aggregation, MatchMode, RelationOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: &str, b: &str, t: RelationType, n: Novelty) -> RelationInstance {
    RelationInstance {
        id: format!("{a}-{b}"),
        document_id: "d".into(),
        rel_type: t,
        entity_a: a.into(),
        entity_b: b.into(),
        novelty: n,
    }
}

#[test]
fn worked_examples() {
    assert_eq!(jaccard(3, 2, 1.0).unwrap(), 0.25);
    assert_eq!(jaccard(0, 0, 0.0).unwrap(), 1.0);
    assert!(jaccard(1, 2, 2.0).is_err());

    let gold = vec![
        rel("A", "B", RelationType::Bind, Novelty::Novel),
        rel("C", "D", RelationType::Association, Novelty::No),
    ];
    // second prediction written in the other orientation: pairs are unordered
    let pred = vec![
        rel("A", "B", RelationType::Bind, Novelty::Novel),
        rel("D", "C", RelationType::Comparison, Novelty::No),
    ];
    let s = score_relations(&pred, &gold, RelationOptions::default()).unwrap();
    assert_eq!(s.intersection, 1.25);
    assert!((s.score - 0.4545).abs() < 1e-4, "{}", s.score);
    assert_eq!(score_relations(&[], &gold, RelationOptions::default()).unwrap().score, 0.0);
}

#[test]
fn reachable_credit_sets() {
    assert_eq!(reachable_credits(AbcMode::Cascade), vec![0.0, 0.25, 0.75, 1.0]);
    assert_eq!(reachable_credits(AbcMode::Independent), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
}

#[test]
fn max_and_mean_aggregation() {
    let gold = rel("A", "B", RelationType::Bind, Novelty::Novel);
    let preds = vec![
        rel("A", "B", RelationType::Bind, Novelty::No),
        rel("B", "A", RelationType::Bind, Novelty::Novel),
    ];
    let max = RelationOptions::default();
    let mean = RelationOptions {
        aggregation: Aggregation::Mean,
        ..max
    };
    assert_eq!(relation_intersection(&gold, &preds, max), 1.0);
    assert_eq!(relation_intersection(&gold, &preds, mean), 0.875);
}

/// Materializes the matched sets explicitly and computes each document's
/// Jaccard from them.
fn oracle_ner(pred: &[Mention], gold: &[Mention]) -> f64 {
    let p: BTreeSet<_> = pred.iter().map(|m| (m.start, m.end, m.entity_type)).collect();
    let g: BTreeSet<_> = gold.iter().map(|m| (m.start, m.end, m.entity_type)).collect();
    let inter = p.intersection(&g).count() as f64;
    let union = p.union(&g).count() as f64;
    if union == 0.0 {
        1.0
    } else {
        inter / union
    }
}

fn oracle_re(pred: &[RelationInstance], gold: &[RelationInstance]) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let key = |r: &RelationInstance| -> BTreeSet<String> { [r.entity_a.clone(), r.entity_b.clone()].into() };
    let mut s = 0.0;
    for g in gold {
        let mut best: f64 = 0.0;
        for p in pred {
            let a = key(g) == key(p);
            let b = a && g.rel_type == p.rel_type;
            let c = b && g.novelty == p.novelty;
            best = best.max([(a, 0.25), (b, 0.5), (c, 0.25)].iter().filter(|x| x.0).map(|x| x.1).sum());
        }
        s += best;
    }
    if s == 0.0 {
        0.0
    } else {
        s / (pred.len() as f64 + gold.len() as f64 - s)
    }
}

fn random_mentions(rng: &mut ChaCha8Rng, doc: &str) -> Vec<Mention> {
    let n = rng.gen_range(0..=6);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let start = rng.gen_range(0..8);
        let end = start + rng.gen_range(1..3);
        let t = EntityType::ALL[rng.gen_range(0..2)];
        if seen.insert((start, end, t)) {
            out.push(Mention::new(out.len().to_string(), doc, start, end, t, "x"));
        }
    }
    out
}

fn random_relations(rng: &mut ChaCha8Rng, doc: &str) -> Vec<RelationInstance> {
    let ids = ["E:1", "E:2", "E:3", "E:4"];
    let n = rng.gen_range(0..=6);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let a = rng.gen_range(0..4);
        let b = (a + rng.gen_range(1..4)) % 4;
        let t = RelationType::ALL[rng.gen_range(0..2)];
        let key = (a.min(b), a.max(b), t);
        if !seen.insert(key) {
            continue;
        }
        out.push(RelationInstance {
            id: out.len().to_string(),
            document_id: doc.into(),
            rel_type: t,
            entity_a: ids[a].into(),
            entity_b: ids[b].into(),
            novelty: Novelty::ALL[rng.gen_range(0..2)],
        });
    }
    out
}

#[test]
fn scores_equal_a_set_materializing_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut pm, mut gm, mut pr, mut gr) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut ner_sum = 0.0;
    let mut re_sum = 0.0;
    let docs: Vec<String> = (0..100).map(|i| format!("doc{i}")).collect();
    for d in &docs {
        let (p, g) = (random_mentions(&mut rng, d), random_mentions(&mut rng, d));
        let expected = oracle_ner(&p, &g);
        assert!((score_mentions(&p, &g, MatchMode::Exact).unwrap().score - expected).abs() < 1e-12);
        ner_sum += expected;
        pm.extend(p);
        gm.extend(g);
        let (p, g) = (random_relations(&mut rng, d), random_relations(&mut rng, d));
        let expected = oracle_re(&p, &g);
        assert!((score_relations(&p, &g, RelationOptions::default()).unwrap().score - expected).abs() < 1e-12);
        re_sum += expected;
        pr.extend(p);
        gr.extend(g);
    }
    let ner = score_corpus_mentions(&pm, &gm, docs.clone(), MatchMode::Exact).unwrap();
    assert!((ner.corpus_score - ner_sum / 100.0).abs() < 1e-12);
    let re = score_corpus_relations(&pr, &gr, docs.clone(), RelationOptions::default()).unwrap();
    assert!((re.corpus_score - re_sum / 100.0).abs() < 1e-12);
    // self-score is perfect
    assert_eq!(score_corpus_mentions(&gm, &gm, docs.clone(), MatchMode::Exact).unwrap().corpus_score, 1.0);
    assert_eq!(score_corpus_relations(&gr, &gr, docs, RelationOptions::default()).unwrap().corpus_score, 1.0);
}

#[test]
fn unknown_documents_are_errors() {
    let m = Mention::new("0", "elsewhere", 0, 1, EntityType::CellLine, "x");
    assert!(score_corpus_mentions(&[m], &[], ["d".to_owned()], MatchMode::Exact).is_err());
}

#[test]
fn overlap_mode_is_greedy() {
    let g = vec![Mention::new("g", "d", 15, 25, EntityType::ChemicalEntity, "x")];
    let p = vec![Mention::new("p", "d", 10, 20, EntityType::ChemicalEntity, "x")];
    assert_eq!(score_mentions(&p, &g, MatchMode::Exact).unwrap().intersection, 0.0);
    assert_eq!(score_mentions(&p, &g, MatchMode::Overlap).unwrap().intersection, 1.0);
}
