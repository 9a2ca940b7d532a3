//! Is-a hierarchies (OBO, or MeSH tree numbers) and the ancestor queries
//! used to link entity identifiers into them.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::corpus::{Corpus, Mention};
use crate::{Error, Result};

/// Uppercases the prefix before the first colon: `mesh:D001` -> `MESH:D001`.
pub fn normalize_id(id: &str) -> String {
    match id.split_once(':') {
        Some((prefix, rest)) => format!("{}:{}", prefix.to_uppercase(), rest),
        None => id.to_owned(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub id: String,
    pub name: String,
    /// Declared is_a parents, normalized.
    pub is_a: Vec<String>,
    pub obsolete: bool,
}

#[derive(Debug, Clone)]
pub struct OntologyGraph {
    terms: Vec<Term>,
    index: HashMap<String, usize>,
    // traversable edges only: both ends non-obsolete
    parents: Vec<Vec<usize>>,
    depth: Vec<Option<usize>>,
    roots: Vec<usize>,
    // position of each term in id order, so sorting never compares strings
    rank: Vec<usize>,
}

impl OntologyGraph {
    /// Resolves parents, rejects dangling references and cycles.
    pub fn from_terms(terms: Vec<Term>) -> Result<Self> {
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate term `{}`", t.id)));
            }
        }
        let mut all_parents = vec![Vec::new(); terms.len()];
        for (i, t) in terms.iter().enumerate() {
            for p in &t.is_a {
                let &j = index.get(p).ok_or_else(|| Error::DanglingParent {
                    term: t.id.clone(),
                    parent: p.clone(),
                })?;
                all_parents[i].push(j);
            }
        }
        if let Some(member) = find_cycle(&all_parents) {
            return Err(Error::OntologyCycle(terms[member].id.clone()));
        }
        let parents: Vec<Vec<usize>> = all_parents
            .iter()
            .enumerate()
            .map(|(i, ps)| {
                if terms[i].obsolete {
                    Vec::new()
                } else {
                    ps.iter().copied().filter(|&j| !terms[j].obsolete).collect()
                }
            })
            .collect();
        let roots: Vec<usize> = (0..terms.len())
            .filter(|&i| !terms[i].obsolete && parents[i].is_empty())
            .collect();

        let mut children = vec![Vec::new(); terms.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        let mut depth = vec![None; terms.len()];
        let mut queue: VecDeque<usize> = roots.iter().copied().collect();
        for &r in &roots {
            depth[r] = Some(0);
        }
        while let Some(t) = queue.pop_front() {
            let d = depth[t].unwrap_or(0);
            for &c in &children[t] {
                if depth[c].is_none() {
                    depth[c] = Some(d + 1);
                    queue.push_back(c);
                }
            }
        }
        let mut by_id: Vec<usize> = (0..terms.len()).collect();
        by_id.sort_by(|&a, &b| terms[a].id.cmp(&terms[b].id));
        let mut rank = vec![0; terms.len()];
        for (r, &i) in by_id.iter().enumerate() {
            rank[i] = r;
        }
        Ok(OntologyGraph {
            terms,
            index,
            parents,
            depth,
            roots,
            rank,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: &str) -> Option<&Term> {
        self.index.get(&normalize_id(id)).map(|&i| &self.terms[i])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(|&i| self.terms[i].id.as_str())
    }

    /// Shortest distance to any root.
    pub fn depth(&self, id: &str) -> Option<usize> {
        self.index.get(&normalize_id(id)).and_then(|&i| self.depth[i])
    }

    fn live(&self, id: &str) -> Result<usize> {
        match self.index.get(&normalize_id(id)) {
            Some(&i) if !self.terms[i].obsolete => Ok(i),
            _ => Err(Error::UnknownTerm(id.to_owned())),
        }
    }

    /// Distance from `start` to each of its ancestors, `start` itself at 0.
    /// Breadth-first closure of `start` (inclusive) as (term, distance)
    /// pairs in visiting order.
    fn closure(&self, start: usize) -> Vec<(usize, usize)> {
        let mut seen = vec![false; self.terms.len()];
        seen[start] = true;
        let mut order = vec![(start, 0)];
        let mut head = 0;
        while head < order.len() {
            let (t, d) = order[head];
            head += 1;
            for &p in &self.parents[t] {
                if !seen[p] {
                    seen[p] = true;
                    order.push((p, d + 1));
                }
            }
        }
        order
    }

    fn sorted_ids(&self, mut keyed: Vec<(usize, usize)>) -> Vec<String> {
        keyed.sort_unstable_by_key(|&(d, t)| (d, self.rank[t]));
        keyed.into_iter().map(|(_, i)| self.terms[i].id.clone()).collect()
    }

    /// All ancestors of `id`, nearest first: ordered by is_a distance from
    /// `id`, then by id.
    pub fn ancestors(&self, id: &str) -> Result<Vec<String>> {
        Ok(self.ancestor_ids(id)?.into_iter().map(str::to_owned).collect())
    }

    /// As [`ancestors`](Self::ancestors), borrowing the ids.
    pub fn ancestor_ids(&self, id: &str) -> Result<Vec<&str>> {
        let start = self.live(id)?;
        let mut keyed: Vec<(usize, usize)> = self.closure(start).into_iter().skip(1).map(|(t, d)| (d, t)).collect();
        keyed.sort_unstable_by_key(|&(d, t)| (d, self.rank[t]));
        Ok(keyed.into_iter().map(|(_, t)| self.terms[t].id.as_str()).collect())
    }

    /// Terms that are ancestors of (or equal to) both `a` and `b`, nearest
    /// first by summed distance, then by id.
    pub fn common_ancestors(&self, a: &str, b: &str) -> Result<Vec<String>> {
        let (a, b) = (self.live(a)?, self.live(b)?);
        let mut db = vec![None; self.terms.len()];
        for (t, d) in self.closure(b) {
            db[t] = Some(d);
        }
        let keyed = self
            .closure(a)
            .into_iter()
            .filter_map(|(t, da)| db[t].map(|d| (da + d, t)))
            .collect();
        Ok(self.sorted_ids(keyed))
    }
}

/// Some node on a cycle, if there is one.
fn find_cycle(parents: &[Vec<usize>]) -> Option<usize> {
    let n = parents.len();
    let mut pending_children = vec![0usize; n];
    for ps in parents {
        for &p in ps {
            pending_children[p] += 1;
        }
    }
    // peel leaves (terms with no remaining children) upward
    let mut queue: Vec<usize> = (0..n).filter(|&i| pending_children[i] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(t) = queue.pop() {
        removed[t] = true;
        for &p in &parents[t] {
            pending_children[p] -= 1;
            if pending_children[p] == 0 {
                queue.push(p);
            }
        }
    }
    let start = (0..n).find(|&i| !removed[i])?;
    // every remaining node has a remaining parent; walk until a repeat
    let mut seen = vec![false; n];
    let mut t = start;
    while !seen[t] {
        seen[t] = true;
        t = parents[t].iter().copied().find(|&p| !removed[p]).unwrap_or(t);
    }
    Some(t)
}

fn strip_comment(value: &str) -> &str {
    let value = value.split(" !").next().unwrap_or(value);
    value.split(" {").next().unwrap_or(value).trim()
}

/// Parses the OBO subset: `[Term]` stanzas with `id`, `name`, `is_a` and
/// `is_obsolete`. Other stanzas and keys are skipped.
pub fn parse_obo(text: &str) -> Result<OntologyGraph> {
    struct Open {
        line: usize,
        term: Term,
        has_id: bool,
    }
    let mut terms = Vec::new();
    let mut open: Option<Open> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();

    let mut close = |open: Option<Open>, terms: &mut Vec<Term>| -> Result<()> {
        if let Some(o) = open {
            if !o.has_id {
                return Err(Error::format("OBO", o.line, "[Term] stanza without id"));
            }
            if let Some(first) = seen.insert(o.term.id.clone(), o.line) {
                return Err(Error::format(
                    "OBO",
                    o.line,
                    format!("term `{}` already defined at line {first}", o.term.id),
                ));
            }
            terms.push(o.term);
        }
        Ok(())
    };

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::format("OBO", line_no, format!("malformed stanza header `{line}`")));
            }
            close(open.take(), &mut terms)?;
            if line == "[Term]" {
                open = Some(Open {
                    line: line_no,
                    term: Term {
                        id: String::new(),
                        name: String::new(),
                        is_a: Vec::new(),
                        obsolete: false,
                    },
                    has_id: false,
                });
            }
            continue;
        }
        let Some(o) = open.as_mut() else {
            // header tags, or the body of a stanza we do not interpret
            continue;
        };
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::format("OBO", line_no, format!("expected `key: value`, found `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "id" => {
                if o.has_id {
                    return Err(Error::format("OBO", line_no, "second id in one stanza"));
                }
                let id = strip_comment(value);
                if id.is_empty() {
                    return Err(Error::format("OBO", line_no, "empty id"));
                }
                o.term.id = normalize_id(id);
                o.has_id = true;
            }
            "name" => o.term.name = value.to_owned(),
            "is_a" => {
                let parent = strip_comment(value).split_whitespace().next().unwrap_or("");
                if parent.is_empty() {
                    return Err(Error::format("OBO", line_no, "empty is_a"));
                }
                o.term.is_a.push(normalize_id(parent));
            }
            "is_obsolete" => o.term.obsolete = strip_comment(value) == "true",
            _ => {}
        }
    }
    close(open.take(), &mut terms)?;
    OntologyGraph::from_terms(terms)
}

/// Builds a hierarchy from MeSH tree numbers. Input rows are
/// `descriptor_id<TAB>name<TAB>tree_number`, one per tree number; the parent
/// of `C10.228.140` is whichever descriptor holds `C10.228`. Descriptor ids
/// without a prefix get `MESH:`.
pub fn parse_mesh_tree(text: &str) -> Result<OntologyGraph> {
    let mut order: Vec<String> = Vec::new();
    let mut names: HashMap<String, String> = HashMap::new();
    let mut trees: BTreeMap<String, String> = BTreeMap::new();
    let mut rows: Vec<(usize, String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || (n == 0 && line == "descriptor_id\tname\ttree_number") {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, name, tree] = cols[..] else {
            return Err(Error::format("MeSH tree", line_no, "expected 3 tab-separated columns"));
        };
        let id = if id.contains(':') { normalize_id(id) } else { format!("MESH:{id}") };
        if !names.contains_key(&id) {
            order.push(id.clone());
            names.insert(id.clone(), name.to_owned());
        }
        if let Some(owner) = trees.insert(tree.to_owned(), id.clone()) {
            if owner != id {
                return Err(Error::format(
                    "MeSH tree",
                    line_no,
                    format!("tree number {tree} assigned to both {owner} and {id}"),
                ));
            }
        }
        rows.push((line_no, id, tree.to_owned()));
    }
    let mut parents: HashMap<String, Vec<String>> = HashMap::new();
    for (line_no, id, tree) in &rows {
        if let Some((parent_tree, _)) = tree.rsplit_once('.') {
            let owner = trees.get(parent_tree).ok_or_else(|| {
                Error::format("MeSH tree", *line_no, format!("parent tree number {parent_tree} not present"))
            })?;
            let list = parents.entry(id.clone()).or_default();
            if owner != id && !list.contains(owner) {
                list.push(owner.clone());
            }
        }
    }
    let terms = order
        .into_iter()
        .map(|id| Term {
            name: names.remove(&id).unwrap_or_default(),
            is_a: parents.remove(&id).unwrap_or_default(),
            obsolete: false,
            id,
        })
        .collect();
    OntologyGraph::from_terms(terms)
}

/// How many identifiers under the prefix were found in the graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Coverage {
    pub prefix: String,
    pub considered: usize,
    pub resolved: usize,
    pub unresolved: Vec<String>,
}

impl Coverage {
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "prefix\tconsidered\tresolved\n{}\t{}\t{}\n",
            self.prefix, self.considered, self.resolved
        );
        for id in &self.unresolved {
            out.push_str(&format!("unresolved\t{id}\n"));
        }
        out
    }
}

fn prefix_of(id: &str) -> Option<String> {
    id.split_once(':').map(|(p, _)| p.to_uppercase())
}

/// Attaches ancestor chains to every mention identifier under `id_prefix`
/// that the graph knows. Identifiers with other prefixes are left alone and
/// not counted.
pub fn annotate_entities(corpus: &Corpus, graph: &OntologyGraph, id_prefix: &str) -> (Corpus, Coverage) {
    let wanted = id_prefix.trim_end_matches(':').to_uppercase();
    let mut out = corpus.clone();
    let mut coverage = Coverage {
        prefix: format!("{wanted}:"),
        ..Default::default()
    };
    for m in &mut out.mentions {
        for kb in &m.kb_ids {
            if prefix_of(kb).as_deref() != Some(wanted.as_str()) {
                continue;
            }
            coverage.considered += 1;
            match graph.ancestors(kb) {
                Ok(ancestors) => {
                    coverage.resolved += 1;
                    m.lineage.push(crate::corpus::Lineage {
                        term: normalize_id(kb),
                        ancestors,
                    });
                }
                Err(_) => coverage.unresolved.push(kb.clone()),
            }
        }
    }
    (out, coverage)
}

/// One row per (mention, linked term): the term's ancestors, comma-joined.
pub fn write_lineage(mentions: &[Mention]) -> String {
    let mut out = String::from("abstract_id\tmention_id\tterm\tancestors\n");
    for m in mentions {
        for l in &m.lineage {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", m.document_id, m.id, l.term, l.ancestors.join(",")));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, EntityType, Mention};

    const DIAMOND: &str = "format-version: 1.2\n\n[Term]\nid: X:A\nname: a\n\n[Term]\nid: X:B\nis_a: X:A ! a\n\n[Term]\nid: X:C\nis_a: X:A\n\n[Term]\nid: X:D\nis_a: X:B\nis_a: X:C\n\n[Typedef]\nid: part_of\n";

    #[test]
    fn two_terms() {
        let g = parse_obo("[Term]\nid: T:A\n\n[Term]\nid: T:B\nis_a: T:A\n").unwrap();
        assert_eq!(g.roots().collect::<Vec<_>>(), vec!["T:A"]);
        assert_eq!(g.ancestors("T:B").unwrap(), vec!["T:A"]);
        assert_eq!(g.depth("T:B"), Some(1));
    }

    #[test]
    fn cycles_and_dangling_parents() {
        let err = parse_obo("[Term]\nid: T:A\nis_a: T:A\n").unwrap_err();
        assert!(matches!(err, Error::OntologyCycle(ref id) if id == "T:A"));
        let err = parse_obo("[Term]\nid: T:A\nis_a: T:B\n[Term]\nid: T:B\nis_a: T:C\n[Term]\nid: T:C\nis_a: T:A\n[Term]\nid: T:D\nis_a: T:A\n")
            .unwrap_err();
        assert!(matches!(err, Error::OntologyCycle(ref id) if ["T:A", "T:B", "T:C"].contains(&id.as_str())));
        let err = parse_obo("[Term]\nid: T:A\nis_a: T:Z\n").unwrap_err();
        assert!(matches!(err, Error::DanglingParent { .. }));
    }

    #[test]
    fn malformed_stanzas() {
        let err = parse_obo("[Term]\nname: nothing\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }), "{err}");
        let err = parse_obo("[Term]\nid: T:A\nthis line has no colon\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
        let err = parse_obo("[Term\nid: T:A\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, .. }), "{err}");
    }

    #[test]
    fn chain_and_diamond() {
        let chain = parse_obo("[Term]\nid: T:A\n[Term]\nid: T:B\nis_a: T:A\n[Term]\nid: T:C\nis_a: T:B\n").unwrap();
        assert_eq!(chain.ancestors("T:C").unwrap(), vec!["T:B", "T:A"]);
        assert!(chain.ancestors("T:A").unwrap().is_empty());
        let g = parse_obo(DIAMOND).unwrap();
        assert_eq!(g.ancestors("X:D").unwrap(), vec!["X:B", "X:C", "X:A"]);
        assert_eq!(g.common_ancestors("X:B", "X:C").unwrap(), vec!["X:A"]);
        assert_eq!(g.common_ancestors("X:D", "X:D").unwrap(), vec!["X:D", "X:B", "X:C", "X:A"]);
        assert!(matches!(g.ancestors("X:Q"), Err(Error::UnknownTerm(_))));
    }

    #[test]
    fn disjoint_trees_share_nothing() {
        let g = parse_obo("[Term]\nid: T:A\n[Term]\nid: T:B\nis_a: T:A\n[Term]\nid: T:C\n[Term]\nid: T:D\nis_a: T:C\n").unwrap();
        assert!(g.common_ancestors("T:B", "T:D").unwrap().is_empty());
    }

    #[test]
    fn obsolete_terms_are_not_traversed() {
        let g = parse_obo("[Term]\nid: T:A\n[Term]\nid: T:OLD\nis_obsolete: true\n[Term]\nid: T:B\nis_a: T:A\nis_a: T:OLD\n").unwrap();
        assert_eq!(g.ancestors("T:B").unwrap(), vec!["T:A"]);
        assert!(g.ancestors("T:OLD").is_err());
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn prefixes_are_case_insensitive() {
        let g = parse_obo("[Term]\nid: mesh:D1\n[Term]\nid: MeSH:D2\nis_a: MESH:D1\n").unwrap();
        assert_eq!(g.ancestors("Mesh:D2").unwrap(), vec!["MESH:D1"]);
    }

    #[test]
    fn mesh_tree_numbers() {
        let text = "descriptor_id\tname\ttree_number\nD009369\tNeoplasms\tC04\nD009370\tNeoplasms by Histologic Type\tC04.557\nD018198\tBlastoma\tC04.557.470\nD018198\tBlastoma\tC04.588.100\nD009371\tNeoplasms by Site\tC04.588\n";
        let g = parse_mesh_tree(text).unwrap();
        assert_eq!(
            g.ancestors("MESH:D018198").unwrap(),
            vec!["MESH:D009370", "MESH:D009371", "MESH:D009369"]
        );
        assert!(parse_mesh_tree("D1\tx\tC04.1\n").is_err());
    }

    #[test]
    fn coverage_counts_only_matching_prefixes() {
        let g = parse_obo(DIAMOND).unwrap();
        let doc = Document::from_text("1", "abcdef");
        let mentions = vec![
            Mention::new("m1", "1", 0, 1, EntityType::ChemicalEntity, "a").with_kb_ids(["x:D"]),
            Mention::new("m2", "1", 1, 2, EntityType::ChemicalEntity, "b").with_kb_ids(["X:NOPE"]),
            Mention::new("m3", "1", 2, 3, EntityType::ChemicalEntity, "c").with_kb_ids(["NCBITaxon:9606"]),
        ];
        let corpus = Corpus::new(vec![doc], mentions, vec![]).unwrap();
        let (annotated, cov) = annotate_entities(&corpus, &g, "X:");
        assert_eq!((cov.considered, cov.resolved), (2, 1));
        assert_eq!(cov.unresolved, vec!["X:NOPE"]);
        assert_eq!(annotated.mentions[0].lineage[0].ancestors, vec!["X:B", "X:C", "X:A"]);
        assert!(annotated.mentions[2].lineage.is_empty());
    }
}
