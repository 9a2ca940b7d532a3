//! Declarative configuration and the end-to-end run: convert and merge the
//! training corpora per type, link identifiers to ontologies, tag and
//! relate the test abstracts with the baselines, post-process, and score.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{generate_candidate_relations, predict_entities, CandidateScope, Gazetteer};
use crate::bio::{encode_document, project_all, TagStyle};
use crate::corpus::{
    load_challenge_dir, load_corpus_dir, write_conll, ChallengeOptions, Corpus, EntityType, Mention, SourceCorpus,
    SourceDocument, TaggedSentence,
};
use crate::merge::{holdout_split, merge_corpora, MapTarget, MergeOptions, TypeMap};
use crate::ontology::{annotate_entities, write_lineage, parse_mesh_tree, parse_obo, OntologyGraph};
use crate::postprocess::{
    filter_short_mentions, renumber_mentions, renumber_relations, resolve_novelty, write_entity_submission,
    write_relation_submission, LetterClass, NoveltyPolicy,
};
use crate::score::{score_corpus, AbcMode, Aggregation, MatchMode, RelationOptions, Task};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// Challenge directory with gold entities (and relations).
    pub train: Option<PathBuf>,
    /// Challenge directory to predict; scored when it carries gold files.
    pub test: Option<PathBuf>,
    pub concat_sep: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MergeSection {
    pub type_map: Option<PathBuf>,
    pub corpora: Option<Vec<CorpusEntry>>,
    pub entity_types: Option<Vec<String>>,
    pub shuffle: Option<bool>,
    pub seed: Option<u64>,
    pub holdout: Option<f64>,
    pub typed_tags: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologySource {
    pub prefix: String,
    pub obo: Option<PathBuf>,
    pub mesh_tree: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OntologySection {
    pub sources: Option<Vec<OntologySource>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NerSection {
    pub ascii_letters: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ReSection {
    pub policy: Option<String>,
    pub scope: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    pub mode: Option<String>,
    pub independent_abc: Option<bool>,
    pub aggregation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// The pipeline configuration file. After [`validate_config`] every field
/// is filled and every path is absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub input: InputSection,
    #[serde(default)]
    pub merge: MergeSection,
    #[serde(default)]
    pub ontology: OntologySection,
    #[serde(default)]
    pub ner: NerSection,
    #[serde(default)]
    pub re: ReSection,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn resolve_path(base: &Path, key: &str, path: &mut PathBuf, must_exist: bool) -> Result<()> {
    if path.is_relative() {
        *path = base.join(&*path);
    }
    if must_exist && !path.exists() {
        return Err(config_err(format!("{key}: path {} does not exist", path.display())));
    }
    Ok(())
}

fn default<T: Clone>(slot: &mut Option<T>, key: &str, value: T, applied: &mut Vec<String>, show: impl Fn(&T) -> String) {
    if slot.is_none() {
        applied.push(format!("{key} = {}", show(&value)));
        *slot = Some(value);
    }
}

/// A validated configuration and the defaults that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: PipelineConfig,
    pub defaults_applied: Vec<String>,
}

/// Parses and resolves a configuration; relative paths are taken from the
/// file's directory.
pub fn validate_config(path: &Path) -> Result<Validated> {
    let text = fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })?;
    let base = path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .unwrap_or(Path::new("."));
    let base = base.canonicalize().map_err(|source| Error::File {
        path: base.to_owned(),
        source,
    })?;
    validate_str(&text, &base)
}

pub fn validate_str(text: &str, base: &Path) -> Result<Validated> {
    let mut c: PipelineConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
    let mut applied = Vec::new();

    let train = c.input.train.as_mut().ok_or_else(|| config_err("input.train is required"))?;
    resolve_path(base, "input.train", train, true)?;
    let test = c.input.test.as_mut().ok_or_else(|| config_err("input.test is required"))?;
    resolve_path(base, "input.test", test, true)?;
    default(&mut c.input.concat_sep, "input.concat_sep", " ".to_owned(), &mut applied, |v| format!("{v:?}"));

    if let Some(map) = c.merge.type_map.as_mut() {
        resolve_path(base, "merge.type_map", map, true)?;
    }
    default(&mut c.merge.corpora, "merge.corpora", Vec::new(), &mut applied, |_| "[]".into());
    for entry in c.merge.corpora.iter_mut().flatten() {
        if entry.name == "train" {
            return Err(config_err("merge.corpora: the name `train` is reserved for input.train"));
        }
        resolve_path(base, &format!("merge.corpora.{}", entry.name), &mut entry.path, true)?;
    }
    default(
        &mut c.merge.entity_types,
        "merge.entity_types",
        EntityType::ALL.iter().map(|t| t.to_string()).collect(),
        &mut applied,
        |v| format!("{v:?}"),
    );
    for t in c.merge.entity_types.iter().flatten() {
        t.parse::<EntityType>().map_err(|e| config_err(format!("merge.entity_types: {e}")))?;
    }
    default(&mut c.merge.shuffle, "merge.shuffle", false, &mut applied, bool::to_string);
    default(&mut c.merge.seed, "merge.seed", 0, &mut applied, u64::to_string);
    default(&mut c.merge.holdout, "merge.holdout", 0.1, &mut applied, f64::to_string);
    let holdout = c.merge.holdout.unwrap_or_default();
    if !(holdout > 0.0 && holdout < 1.0) {
        return Err(config_err(format!("merge.holdout: {holdout} is not in (0, 1)")));
    }
    default(&mut c.merge.typed_tags, "merge.typed_tags", false, &mut applied, bool::to_string);

    default(&mut c.ontology.sources, "ontology.sources", Vec::new(), &mut applied, |_| "[]".into());
    for s in c.ontology.sources.iter_mut().flatten() {
        let key = format!("ontology.sources.{}", s.prefix);
        match (s.obo.as_mut(), s.mesh_tree.as_mut()) {
            (Some(p), None) | (None, Some(p)) => resolve_path(base, &key, p, true)?,
            _ => return Err(config_err(format!("{key}: give exactly one of `obo` or `mesh_tree`"))),
        }
    }

    default(&mut c.ner.ascii_letters, "ner.ascii_letters", false, &mut applied, bool::to_string);

    default(&mut c.re.policy, "re.policy", "majority".into(), &mut applied, String::clone);
    c.re.policy
        .as_deref()
        .unwrap_or_default()
        .parse::<NoveltyPolicy>()
        .map_err(|e| config_err(format!("re.policy: {e}")))?;
    default(&mut c.re.scope, "re.scope", "sentence".into(), &mut applied, String::clone);
    if !matches!(c.re.scope.as_deref(), Some("sentence" | "abstract")) {
        return Err(config_err("re.scope: expected `sentence` or `abstract`"));
    }

    default(&mut c.score.mode, "score.mode", "exact".into(), &mut applied, String::clone);
    c.score
        .mode
        .as_deref()
        .unwrap_or_default()
        .parse::<MatchMode>()
        .map_err(|e| config_err(format!("score.mode: {e}")))?;
    default(&mut c.score.independent_abc, "score.independent_abc", false, &mut applied, bool::to_string);
    default(&mut c.score.aggregation, "score.aggregation", "max".into(), &mut applied, String::clone);
    c.score
        .aggregation
        .as_deref()
        .unwrap_or_default()
        .parse::<Aggregation>()
        .map_err(|e| config_err(format!("score.aggregation: {e}")))?;

    default(&mut c.output.dir, "output.dir", PathBuf::from("out"), &mut applied, |p| p.display().to_string());
    if let Some(dir) = c.output.dir.as_mut() {
        resolve_path(base, "output.dir", dir, false)?;
    }

    for d in &applied {
        log::info!("config default: {d}");
    }
    Ok(Validated {
        config: c,
        defaults_applied: applied,
    })
}

impl PipelineConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    fn entity_types(&self) -> Vec<EntityType> {
        self.merge
            .entity_types
            .iter()
            .flatten()
            .filter_map(|t| t.parse().ok())
            .collect()
    }
}

/// Runs `f` on a pool of `jobs` workers.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {jobs} worker(s): {e}")))?;
    Ok(pool.install(f))
}

/// Converts one corpus to BIO. With a target type this is a single-corpus
/// merge; without one, all mapped types are projected with typed tags.
pub fn convert_to_bio(
    corpus: &SourceCorpus,
    map: &TypeMap,
    target: Option<EntityType>,
    style: TagStyle,
) -> Result<Vec<TaggedSentence>> {
    match target {
        Some(t) => Ok(merge_corpora(&[(corpus, map)], t, &MergeOptions { shuffle_seed: None, style })?.sentences),
        None => {
            map.preflight(corpus)?;
            let per_doc: Vec<Vec<TaggedSentence>> = corpus
                .documents
                .par_iter()
                .map(|d| project_all(&d.document, &mapped_all(corpus, map, d)))
                .collect::<Result<_>>()?;
            Ok(per_doc.into_iter().flatten().collect())
        }
    }
}

fn mapped_all(corpus: &SourceCorpus, map: &TypeMap, doc: &SourceDocument) -> Vec<Mention> {
    doc.spans
        .iter()
        .filter_map(|s| match map.get(&corpus.name, &s.label)? {
            MapTarget::Entity(t) => Some(Mention::new(
                s.id.clone(),
                doc.document.id.clone(),
                s.start,
                s.end,
                t,
                s.text.clone(),
            )),
            MapTarget::Drop => None,
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::File {
        path: path.to_owned(),
        source,
    })
}

fn load_graph(source: &OntologySource) -> Result<OntologyGraph> {
    match (&source.obo, &source.mesh_tree) {
        (Some(p), _) => parse_obo(&crate::corpus::source_read(p)?),
        (None, Some(p)) => parse_mesh_tree(&crate::corpus::source_read(p)?),
        (None, None) => Err(config_err(format!("ontology source `{}` has no file", source.prefix))),
    }
}

/// Predicts entities for every document with the gazetteer and the
/// single-character rule; ids are renumbered in submission order.
pub fn run_ner(gazetteer: &Gazetteer, corpus: &Corpus, letters: LetterClass) -> Vec<Mention> {
    let per_doc: Vec<Vec<Mention>> = corpus
        .documents
        .par_iter()
        .map(|d| filter_short_mentions(predict_entities(gazetteer, d), letters))
        .collect();
    let mut mentions: Vec<Mention> = per_doc.into_iter().flatten().collect();
    mentions.sort_by(|a, b| (&a.document_id, a.start, a.end, a.entity_type).cmp(&(&b.document_id, b.start, b.end, b.entity_type)));
    renumber_mentions(&mut mentions);
    mentions
}

/// Generates candidates over predicted mentions and resolves duplicates.
pub fn run_re(
    corpus: &Corpus,
    mentions: &[Mention],
    scope: CandidateScope,
    policy: NoveltyPolicy,
) -> Vec<crate::corpus::RelationInstance> {
    let mut by_doc: BTreeMap<&str, Vec<Mention>> = BTreeMap::new();
    for m in mentions {
        by_doc.entry(m.document_id.as_str()).or_default().push(m.clone());
    }
    let empty = Vec::new();
    let per_doc: Vec<_> = corpus
        .documents
        .par_iter()
        .map(|d| generate_candidate_relations(d, by_doc.get(d.id.as_str()).unwrap_or(&empty), scope).relations)
        .collect();
    let mut relations = resolve_novelty(per_doc.into_iter().flatten().collect(), policy);
    renumber_relations(&mut relations);
    relations
}

/// What a pipeline run wrote, relative to the output directory, and the
/// scores it computed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineSummary {
    pub files: Vec<PathBuf>,
    pub ner_score: Option<f64>,
    pub re_score: Option<f64>,
}

/// Runs every stage and writes its outputs under `output.dir`.
pub fn run_pipeline(config: &PipelineConfig, jobs: usize) -> Result<PipelineSummary> {
    with_jobs(jobs, || run_stages(config))?
}

fn run_stages(c: &PipelineConfig) -> Result<PipelineSummary> {
    let opts = ChallengeOptions {
        concat_sep: c.input.concat_sep.clone().unwrap_or_else(|| " ".into()),
    };
    let missing = |k: &str| config_err(format!("{k} missing; run validate_config first"));
    let out_dir = c.output.dir.clone().ok_or_else(|| missing("output.dir"))?;
    let train = load_challenge_dir(c.input.train.as_deref().ok_or_else(|| missing("input.train"))?, &opts)?;
    let test_dir = c.input.test.clone().ok_or_else(|| missing("input.test"))?;
    let test = load_challenge_dir(&test_dir, &opts)?;
    let mut summary = PipelineSummary::default();
    let emit = |rel: &str, contents: &str, summary: &mut PipelineSummary| -> Result<()> {
        write(&out_dir.join(rel), contents)?;
        summary.files.push(PathBuf::from(rel));
        Ok(())
    };

    // training sets, one per entity type
    let mut map = match &c.merge.type_map {
        Some(p) => TypeMap::parse(&crate::corpus::source_read(p)?)?,
        None => TypeMap::default(),
    };
    for t in EntityType::ALL {
        if map.get("train", t.as_str()).is_none() {
            map.insert("train", t.as_str(), MapTarget::Entity(*t));
        }
    }
    let mut sources = vec![SourceCorpus::from_corpus("train", &train)];
    for entry in c.merge.corpora.iter().flatten() {
        sources.push(load_corpus_dir(&entry.path, &entry.name, &opts)?);
    }
    let inputs: Vec<(&SourceCorpus, &TypeMap)> = sources.iter().map(|s| (s, &map)).collect();
    let seed = c.merge.seed.unwrap_or(0);
    let merge_opts = MergeOptions {
        shuffle_seed: c.merge.shuffle.unwrap_or(false).then_some(seed),
        style: if c.merge.typed_tags.unwrap_or(false) { TagStyle::Typed } else { TagStyle::Bare },
    };
    for t in c.entity_types() {
        let merged = merge_corpora(&inputs, t, &merge_opts)?;
        emit(&format!("bio/{t}.conll"), &write_conll(&merged.sentences)?, &mut summary)?;
        emit(&format!("bio/{t}.report.tsv"), &merged.report.to_tsv(), &mut summary)?;
        if merged.sentences.len() >= 2 {
            let (tr, dev) = holdout_split(merged.sentences, c.merge.holdout.unwrap_or(0.1), seed)?;
            emit(&format!("bio/{t}.train.conll"), &write_conll(&tr)?, &mut summary)?;
            emit(&format!("bio/{t}.dev.conll"), &write_conll(&dev)?, &mut summary)?;
        }
    }

    // entities for the test abstracts
    let gazetteer = Gazetteer::build(&train)?;
    let letters = if c.ner.ascii_letters.unwrap_or(false) { LetterClass::Ascii } else { LetterClass::Unicode };
    let mentions = run_ner(&gazetteer, &test, letters);
    emit("entities.tsv", &write_entity_submission(&mentions)?, &mut summary)?;

    // ontology linking of the predicted entities
    let predicted = Corpus::new(test.documents.clone(), mentions.clone(), Vec::new())?;
    let mut linked = predicted.clone();
    for source in c.ontology.sources.iter().flatten() {
        let graph = load_graph(source)?;
        let (annotated, coverage) = annotate_entities(&linked, &graph, &source.prefix);
        linked = annotated;
        let name = source.prefix.trim_end_matches(':').to_lowercase();
        emit(&format!("ontology/{name}.coverage.tsv"), &coverage.to_tsv(), &mut summary)?;
    }
    if c.ontology.sources.as_ref().is_some_and(|s| !s.is_empty()) {
        emit("ontology/lineage.tsv", &write_lineage(&linked.mentions), &mut summary)?;
    }

    // relations
    let scope = match c.re.scope.as_deref() {
        Some("abstract") => CandidateScope::Abstract,
        _ => CandidateScope::Sentence,
    };
    let policy: NoveltyPolicy = c.re.policy.as_deref().unwrap_or("majority").parse()?;
    let relations = run_re(&test, &mentions, scope, policy);
    emit("relations.tsv", &write_relation_submission(&relations)?, &mut summary)?;

    // scores against the test gold, when present
    let mode: MatchMode = c.score.mode.as_deref().unwrap_or("exact").parse()?;
    let re_opts = RelationOptions {
        abc: if c.score.independent_abc.unwrap_or(false) { AbcMode::Independent } else { AbcMode::Cascade },
        aggregation: c.score.aggregation.as_deref().unwrap_or("max").parse()?,
    };
    let predicted = Corpus::new(test.documents.clone(), mentions, relations)?;
    let mut scores = String::new();
    if test_dir.join("entities.tsv").exists() {
        let report = score_corpus(&predicted, &test, Task::Ner(mode))?;
        emit("score_ner.tsv", &report.to_tsv(), &mut summary)?;
        scores.push_str(&format!("ner\t{:.4}\n", report.corpus_score));
        summary.ner_score = Some(report.corpus_score);
    }
    if test_dir.join("relations.tsv").exists() {
        let report = score_corpus(&predicted, &test, Task::Re(re_opts))?;
        emit("score_re.tsv", &report.to_tsv(), &mut summary)?;
        scores.push_str(&format!("re\t{:.4}\n", report.corpus_score));
        summary.re_score = Some(report.corpus_score);
    }
    if !scores.is_empty() {
        emit("scores.tsv", &scores, &mut summary)?;
    }
    Ok(summary)
}

/// [`encode_document`] over every document of a challenge corpus.
pub fn corpus_to_bio(corpus: &Corpus, target: EntityType, style: TagStyle) -> Result<Vec<TaggedSentence>> {
    let per_doc: Vec<Vec<TaggedSentence>> = corpus
        .mentions_by_document()
        .par_iter()
        .map(|(d, ms)| {
            let owned: Vec<Mention> = ms.iter().map(|m| (*m).clone()).collect();
            encode_document(d, &owned, target, style)
        })
        .collect::<Result<_>>()?;
    Ok(per_doc.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for sub in ["train", "test"] {
            fs::create_dir_all(dir.path().join(sub)).unwrap();
            fs::write(
                dir.path().join(sub).join("abstracts.tsv"),
                "abstract_id\ttitle\tabstract\n1\tAspirin.\tIt helps.\n",
            )
            .unwrap();
            fs::write(
                dir.path().join(sub).join("entities.tsv"),
                "id\tabstract_id\toffset_start\toffset_finish\ttype\tmention\n0\t1\t0\t7\tChemicalEntity\tAspirin\n",
            )
            .unwrap();
        }
        dir
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = fixture();
        let v = validate_str("[input]\ntrain = \"train\"\ntest = \"test\"\n", dir.path()).unwrap();
        assert_eq!(v.config.merge.seed, Some(0));
        assert_eq!(v.config.re.policy.as_deref(), Some("majority"));
        assert_eq!(v.config.score.mode.as_deref(), Some("exact"));
        assert!(v.defaults_applied.iter().any(|d| d.starts_with("merge.seed")));
        assert!(v.config.input.train.as_ref().unwrap().is_absolute());
    }

    #[test]
    fn typo_keys_are_named() {
        let dir = fixture();
        let err = validate_str("[input]\ntrain = \"train\"\ntest = \"test\"\n[merge]\nseeed = 3\n", dir.path())
            .unwrap_err();
        assert!(err.to_string().contains("seeed"), "{err}");
        let err = validate_str("[input]\ntrain = \"nope\"\ntest = \"test\"\n", dir.path()).unwrap_err();
        assert!(err.to_string().contains("input.train"), "{err}");
        let err = validate_str("[input]\ntrain = \"train\"\ntest = \"test\"\n[re]\npolicy = \"vote\"\n", dir.path())
            .unwrap_err();
        assert!(err.to_string().contains("re.policy"), "{err}");
        let err = validate_str("[input]\ntrain = 3\ntest = \"test\"\n", dir.path()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn dump_revalidates_to_the_same_config() {
        let dir = fixture();
        let v = validate_str("[input]\ntrain = \"train\"\ntest = \"test\"\n[merge]\nseed = 9\n", dir.path()).unwrap();
        let again = validate_str(&v.config.to_toml().unwrap(), Path::new("/")).unwrap();
        assert_eq!(again.config, v.config);
        assert!(again.defaults_applied.is_empty());
    }

    #[test]
    fn tiny_pipeline_runs() {
        let dir = fixture();
        let mut v = validate_str("[input]\ntrain = \"train\"\ntest = \"test\"\n", dir.path()).unwrap();
        v.config.output.dir = Some(dir.path().join("out"));
        let summary = run_pipeline(&v.config, 2).unwrap();
        assert_eq!(summary.ner_score, Some(1.0));
        assert!(dir.path().join("out/entities.tsv").exists());
        assert!(dir.path().join("out/bio/ChemicalEntity.conll").exists());
    }
}
