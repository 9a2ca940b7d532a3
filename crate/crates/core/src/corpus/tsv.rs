//! The challenge's tab-separated files.

use super::{Corpus, Document, EntityType, Mention, Novelty, RelationInstance};
use crate::{Error, Result};

pub const ABSTRACTS_HEADER: &str = "abstract_id\ttitle\tabstract";
pub const ENTITIES_HEADER: &str = "id\tabstract_id\toffset_start\toffset_finish\ttype\tmention";
pub const ENTITIES_HEADER_WITH_IDS: &str =
    "id\tabstract_id\toffset_start\toffset_finish\ttype\tmention\tentity_ids";
pub const RELATIONS_HEADER: &str = "id\tabstract_id\ttype\tentity_1\tentity_2\tnovel";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeOptions {
    /// Joins title and abstract into the annotation text.
    pub concat_sep: String,
}

impl Default for ChallengeOptions {
    fn default() -> Self {
        ChallengeOptions {
            concat_sep: " ".to_owned(),
        }
    }
}

/// Yields `(line number, fields)` for every data row after checking the
/// header against one of `headers`. Returns which header matched.
fn rows<'a>(
    kind: &'static str,
    text: &'a str,
    headers: &[&str],
) -> Result<(usize, Vec<(usize, Vec<&'a str>)>)> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.strip_suffix('\r').unwrap_or(l),
            None => return Err(Error::format(kind, 1, "missing header")),
        }
    };
    let which = headers
        .iter()
        .position(|h| *h == header)
        .ok_or_else(|| Error::format(kind, 1, format!("unexpected header `{header}`, expected `{}`", headers[0])))?;
    let width = headers[which].split('\t').count();
    let mut out = Vec::new();
    for (n, line) in lines {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != width {
            return Err(Error::format(
                kind,
                n + 1,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        out.push((n + 1, fields));
    }
    Ok((which, out))
}

fn label<T: std::str::FromStr<Err = Error>>(kind: &'static str, line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|e: Error| Error::format(kind, line, e.to_string()))
}

pub fn parse_abstracts(text: &str, opts: &ChallengeOptions) -> Result<Vec<Document>> {
    let (_, rows) = rows("abstracts", text, &[ABSTRACTS_HEADER])?;
    Ok(rows
        .into_iter()
        .map(|(_, f)| Document::new(f[0], f[1], f[2], &opts.concat_sep))
        .collect())
}

/// Parses entity rows without checking them against documents.
pub fn parse_entity_rows(text: &str) -> Result<Vec<Mention>> {
    let (_, rows) = rows("entities", text, &[ENTITIES_HEADER, ENTITIES_HEADER_WITH_IDS])?;
    rows.into_iter()
        .map(|(line, f)| {
            let offset = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::format("entities", line, format!("invalid offset `{s}`")))
            };
            let mut m = Mention::new(
                f[0],
                f[1],
                offset(f[2])?,
                offset(f[3])?,
                label::<EntityType>("entities", line, f[4])?,
                f[5],
            );
            if let Some(ids) = f.get(6) {
                m.kb_ids = ids.split(',').filter(|s| !s.is_empty()).map(str::to_owned).collect();
            }
            Ok(m)
        })
        .collect()
}

pub fn parse_relation_rows(text: &str) -> Result<Vec<RelationInstance>> {
    let (_, rows) = rows("relations", text, &[RELATIONS_HEADER])?;
    rows.into_iter()
        .map(|(line, f)| {
            if f[3] == f[4] {
                return Err(Error::format(
                    "relations",
                    line,
                    format!("relation `{}` links `{}` to itself", f[0], f[3]),
                ));
            }
            Ok(RelationInstance {
                id: f[0].to_owned(),
                document_id: f[1].to_owned(),
                rel_type: label("relations", line, f[2])?,
                entity_a: f[3].to_owned(),
                entity_b: f[4].to_owned(),
                novelty: label::<Novelty>("relations", line, f[5])?,
            })
        })
        .collect()
}

/// Parses the abstracts, entities and (optionally) relations files into a
/// validated corpus.
pub fn parse_challenge_tsv(
    abstracts: &str,
    entities: &str,
    relations: Option<&str>,
    opts: &ChallengeOptions,
) -> Result<Corpus> {
    let documents = parse_abstracts(abstracts, opts)?;
    let mentions = parse_entity_rows(entities)?;
    let relations = relations.map(parse_relation_rows).transpose()?.unwrap_or_default();
    Corpus::new(documents, mentions, relations)
}

fn check_cell(what: &str, value: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::invalid(format!("{what} {value:?} contains a tab or newline")));
    }
    Ok(())
}

/// Writes an entities file in the given row order. The `entity_ids` column is
/// emitted only when some mention carries identifiers.
pub fn write_entities(mentions: &[Mention]) -> Result<String> {
    let with_ids = mentions.iter().any(|m| !m.kb_ids.is_empty());
    let mut out = String::from(if with_ids { ENTITIES_HEADER_WITH_IDS } else { ENTITIES_HEADER });
    out.push('\n');
    for m in mentions {
        check_cell("mention id", &m.id)?;
        check_cell("document id", &m.document_id)?;
        check_cell("mention text", &m.text)?;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            m.id, m.document_id, m.start, m.end, m.entity_type, m.text
        ));
        if with_ids {
            for id in &m.kb_ids {
                check_cell("entity id", id)?;
                if id.contains(',') || id.is_empty() {
                    return Err(Error::invalid(format!("entity id {id:?} cannot be listed")));
                }
            }
            out.push('\t');
            out.push_str(&m.kb_ids.join(","));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_relations(relations: &[RelationInstance]) -> Result<String> {
    let mut out = String::from(RELATIONS_HEADER);
    out.push('\n');
    for r in relations {
        for (what, v) in [
            ("relation id", &r.id),
            ("document id", &r.document_id),
            ("entity id", &r.entity_a),
            ("entity id", &r.entity_b),
        ] {
            check_cell(what, v)?;
        }
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.id, r.document_id, r.rel_type, r.entity_a, r.entity_b, r.novelty
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TITLE: &str = "Late-onset metachromatic leukodystrophy: molecular pathology in two siblings.";

    #[test]
    fn constructed_consistency_case() {
        let corpus = parse_challenge_tsv(
            "abstract_id\ttitle\tabstract\n101\tT.\tA b.\n",
            "id\tabstract_id\toffset_start\toffset_finish\ttype\tmention\n0\t101\t0\t2\tChemicalEntity\tT.\n",
            None,
            &ChallengeOptions::default(),
        )
        .unwrap();
        assert_eq!(corpus.documents[0].text(), "T. A b.");
        assert_eq!(corpus.mentions[0].text, "T.");
    }

    #[test]
    fn mismatched_mention_text_is_an_error() {
        let err = parse_challenge_tsv(
            "abstract_id\ttitle\tabstract\n101\tT.\tA b.\n",
            "id\tabstract_id\toffset_start\toffset_finish\ttype\tmention\n7\t101\t0\t2\tChemicalEntity\tA.\n",
            None,
            &ChallengeOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Offset { document, mention, .. } => {
                assert_eq!(document, "101");
                assert_eq!(mention, "7");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn example_title_offsets() {
        let start = TITLE.find("metachromatic").unwrap();
        let end = start + "metachromatic leukodystrophy".chars().count();
        assert_eq!((start, end), (11, 39));
        let corpus = parse_challenge_tsv(
            &format!("{ABSTRACTS_HEADER}\n1\t{TITLE}\tWe describe two siblings.\n"),
            &format!("{ENTITIES_HEADER}\n0\t1\t11\t39\tDiseaseOrPhenotypicFeature\tmetachromatic leukodystrophy\n"),
            None,
            &ChallengeOptions::default(),
        )
        .unwrap();
        let m = &corpus.mentions[0];
        assert_eq!((m.start, m.end), (11, 39));
        assert_eq!(m.entity_type, EntityType::DiseaseOrPhenotypicFeature);
    }

    #[test]
    fn outside_offsets_and_unknown_types() {
        let abstracts = "abstract_id\ttitle\tabstract\n1\tab\tcd\n";
        let err = parse_challenge_tsv(
            abstracts,
            &format!("{ENTITIES_HEADER}\nm9\t1\t3\t9\tChemicalEntity\tcd\n"),
            None,
            &ChallengeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Offset { .. }), "{err}");
        let err = parse_entity_rows(&format!("{ENTITIES_HEADER}\nm\t1\t0\t2\tChemical\tab\n")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
        let err = parse_relation_rows(&format!("{RELATIONS_HEADER}\nr\t1\tInhibits\ta\tb\tNo\n")).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn dangling_relation_document() {
        let err = parse_challenge_tsv(
            "abstract_id\ttitle\tabstract\n1\tab\tcd\n",
            ENTITIES_HEADER,
            Some(&format!("{RELATIONS_HEADER}\nr\t2\tBind\ta\tb\tNovel\n")),
            &ChallengeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownDocument(ref d) if d == "2"));
    }

    #[test]
    fn documents_without_entities_are_kept() {
        let corpus = parse_challenge_tsv(
            "abstract_id\ttitle\tabstract\n1\tab\tcd\n2\tef\tgh\n",
            ENTITIES_HEADER,
            None,
            &ChallengeOptions::default(),
        )
        .unwrap();
        assert_eq!(corpus.documents.len(), 2);
    }

    #[test]
    fn separator_override() {
        let opts = ChallengeOptions {
            concat_sep: "\n".into(),
        };
        let docs = parse_abstracts("abstract_id\ttitle\tabstract\n1\tab\tcd\n", &opts).unwrap();
        assert_eq!(docs[0].text(), "ab\ncd");
    }

    #[test]
    fn optional_entity_id_column() {
        let text = format!("{ENTITIES_HEADER_WITH_IDS}\n0\t1\t0\t2\tChemicalEntity\tab\tMESH:D1,MESH:D2\n");
        let m = parse_entity_rows(&text).unwrap();
        assert_eq!(m[0].kb_ids, vec!["MESH:D1", "MESH:D2"]);
        assert_eq!(write_entities(&m).unwrap(), text);
    }

    #[test]
    fn header_only_files() {
        assert_eq!(write_entities(&[]).unwrap(), format!("{ENTITIES_HEADER}\n"));
        assert_eq!(write_relations(&[]).unwrap(), format!("{RELATIONS_HEADER}\n"));
        assert!(parse_entity_rows("").is_err());
    }
}
