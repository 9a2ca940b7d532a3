use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use biocurate_core::baselines::{CandidateScope, Gazetteer};
use biocurate_core::bio::TagStyle;
use biocurate_core::corpus::{
    load_challenge_dir, load_corpus_dir, parse_abstracts, parse_challenge_tsv, parse_conll, parse_entity_rows,
    parse_relation_rows, write_conll, ChallengeOptions, Corpus, ENTITIES_HEADER,
};
use biocurate_core::merge::{holdout_split, merge_corpora, MergeOptions, TypeMap};
use biocurate_core::ontology::{annotate_entities, parse_mesh_tree, parse_obo, write_lineage, OntologyGraph};
use biocurate_core::pipeline::{convert_to_bio, run_ner, run_pipeline, run_re, validate_config};
use biocurate_core::postprocess::{
    filter_short_mentions, resolve_novelty, write_entity_submission, write_relation_submission, LetterClass,
};
use biocurate_core::records::{frequency_count, parse_field_list, transform, FieldIndex, FieldOp, RecordOptions};
use biocurate_core::score::{
    score_corpus_mentions, score_corpus_relations, AbcMode, RelationOptions, ScoreReport,
};

use crate::{
    Command, ConvertArgs, MergeArgs, NerBaselineArgs, OntologyCommand, OntologySourceArgs, PipelineArgs,
    PostprocessCommand, ReBaselineArgs, RecordArgs, ScoreCommand, ScoreCommon, SplitArgs,
};

/// A malformed invocation that clap cannot detect on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::SelectFields { args, records } => {
            let (fields, file) = field_args(&args)?;
            record_command(file, &records, |input, out, opts, diag| {
                transform(input, out, &FieldOp::Select(fields), opts, diag)
            })
        }
        Command::Delf { args, records } => {
            let (fields, file) = field_args(&args)?;
            record_command(file, &records, |input, out, opts, diag| {
                transform(input, out, &FieldOp::Delete(fields.into_iter().collect()), opts, diag)
            })
        }
        Command::Count { args, records } => {
            let (keys, file) = field_args(&args)?;
            record_command(file, &records, |input, out, opts, diag| frequency_count(input, out, &keys, opts, diag))
        }
        Command::Convert(a) => convert(a),
        Command::Merge(a) => merge(a),
        Command::Split(a) => split(a),
        Command::Ontology { command } => ontology(command),
        Command::NerBaseline(a) => ner_baseline(a),
        Command::ReBaseline(a) => re_baseline(a),
        Command::Postprocess { command } => postprocess(command),
        Command::Score { command } => score(command),
        Command::Pipeline(a) => pipeline(a),
    }
}

/// Leading field lists, then at most one file name.
fn field_args(args: &[String]) -> Result<(Vec<FieldIndex>, Option<PathBuf>)> {
    let mut fields = Vec::new();
    let mut rest = args;
    while let Some((first, tail)) = rest.split_first() {
        match parse_field_list(first) {
            Ok(list) => fields.extend(list),
            Err(_) => break,
        }
        rest = tail;
    }
    let usage = |m: String| anyhow::Error::new(UsageError(m));
    if fields.is_empty() {
        return Err(usage(format!("expected field positions, got {:?}", args.first().map_or("", |s| s))));
    }
    match rest {
        [] => Ok((fields, None)),
        [file] if file == "-" => Ok((fields, None)),
        [file] => Ok((fields, Some(PathBuf::from(file)))),
        [_, extra, ..] => Err(usage(format!("unexpected argument {extra:?} after the input file"))),
    }
}

fn record_command<'a, F>(file: Option<PathBuf>, args: &RecordArgs, op: F) -> Result<()>
where
    F: FnOnce(
            Box<dyn BufRead>,
            &mut dyn Write,
            &RecordOptions,
            &mut dyn FnMut(&biocurate_core::Error),
        ) -> biocurate_core::Result<biocurate_core::records::StreamStats>
        + 'a,
{
    let input: Box<dyn BufRead> = match &file {
        Some(path) => Box::new(BufReader::with_capacity(
            1 << 16,
            File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
        )),
        None => Box::new(BufReader::with_capacity(1 << 16, io::stdin().lock())),
    };
    let opts = RecordOptions {
        delimiter: args.delimiter,
        strict: args.strict,
    };
    let stdout = io::stdout().lock();
    let mut out = BufWriter::with_capacity(1 << 16, stdout);
    let mut diag = |e: &biocurate_core::Error| eprintln!("warning: {e}");
    let stats = op(input, &mut out, &opts, &mut diag);
    match stats {
        Ok(stats) => {
            if stats.errors > 0 {
                log::warn!("{} of {} record(s) skipped", stats.errors, stats.records_in);
            }
            Ok(())
        }
        // a closed downstream pipe (`| head`) is not a failure
        Err(biocurate_core::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e.into()),
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, contents),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn corpus_name(dir: &Path) -> String {
    dir.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string())
}

fn style(typed: bool) -> TagStyle {
    if typed {
        TagStyle::Typed
    } else {
        TagStyle::Bare
    }
}

fn challenge_opts(sep: &str) -> ChallengeOptions {
    ChallengeOptions {
        concat_sep: sep.to_owned(),
    }
}

fn convert(a: ConvertArgs) -> Result<()> {
    let name = a.name.clone().unwrap_or_else(|| corpus_name(&a.corpus));
    let corpus = load_corpus_dir(&a.corpus, &name, &challenge_opts(&a.concat_sep))?;
    let map = match &a.map {
        Some(p) => TypeMap::parse(&read_file(p)?)?,
        None => TypeMap::identity(&name),
    };
    let typed = a.typed_tags || a.entity_type.is_none();
    let sentences = convert_to_bio(&corpus, &map, a.entity_type, style(typed))?;
    emit(a.out.as_deref(), &write_conll(&sentences)?)
}

fn merge(a: MergeArgs) -> Result<()> {
    let map = TypeMap::parse(&read_file(&a.map)?)?;
    let opts = challenge_opts(&a.concat_sep);
    let corpora = a
        .corpora
        .iter()
        .map(|dir| load_corpus_dir(dir, &corpus_name(dir), &opts))
        .collect::<biocurate_core::Result<Vec<_>>>()?;
    let inputs: Vec<_> = corpora.iter().map(|c| (c, &map)).collect();
    let merged = merge_corpora(
        &inputs,
        a.target_type,
        &MergeOptions {
            shuffle_seed: a.seed,
            style: style(a.typed_tags),
        },
    )?;
    if let Some(report) = &a.report {
        write_file(report, &merged.report.to_tsv())?;
    }
    emit(a.out.as_deref(), &merged.to_conll()?)
}

fn split(a: SplitArgs) -> Result<()> {
    let sentences = parse_conll(&read_file(&a.input)?)?;
    let (train, dev) = holdout_split(sentences, a.fraction, a.seed)?;
    write_file(&a.train, &write_conll(&train)?)?;
    write_file(&a.dev, &write_conll(&dev)?)
}

fn load_graph(obo: Option<&Path>, mesh_tree: Option<&Path>) -> Result<OntologyGraph> {
    let graph = match (obo, mesh_tree) {
        (Some(p), _) => parse_obo(&read_file(p)?).with_context(|| format!("in {}", p.display()))?,
        (None, Some(p)) => parse_mesh_tree(&read_file(p)?).with_context(|| format!("in {}", p.display()))?,
        (None, None) => bail!(UsageError("give an OBO file or --mesh-tree".into())),
    };
    Ok(graph)
}

fn source_graph(source: &OntologySourceArgs) -> Result<OntologyGraph> {
    load_graph(source.obo.as_deref(), source.mesh_tree.as_deref())
}

fn ontology(command: OntologyCommand) -> Result<()> {
    match command {
        OntologyCommand::Load {
            file,
            mesh_tree,
            validate,
        } => {
            let graph = load_graph(file.as_deref(), mesh_tree.as_deref())?;
            if !validate {
                let edges: usize = graph.terms().iter().map(|t| t.is_a.len()).sum();
                let obsolete = graph.terms().iter().filter(|t| t.obsolete).count();
                println!("terms\t{}", graph.len());
                println!("roots\t{}", graph.roots().count());
                println!("is_a\t{edges}");
                println!("obsolete\t{obsolete}");
            }
            Ok(())
        }
        OntologyCommand::Ancestors { id, source } => {
            let graph = source_graph(&source)?;
            let mut out = String::new();
            for a in graph.ancestors(&id)? {
                let name = graph.term(&a).map_or("", |t| t.name.as_str());
                out.push_str(&format!("{a}\t{name}\n"));
            }
            emit(None, &out)
        }
        OntologyCommand::Annotate {
            prefix,
            source,
            report,
            concat_sep,
            out,
            corpus,
        } => {
            let graph = source_graph(&source)?;
            let corpus = load_challenge_dir(&corpus, &challenge_opts(&concat_sep))?;
            let (annotated, coverage) = annotate_entities(&corpus, &graph, &prefix);
            if let Some(report) = &report {
                write_file(report, &coverage.to_tsv())?;
            }
            log::info!(
                "{prefix} coverage: {} of {} identifier(s) resolved",
                coverage.resolved,
                coverage.considered
            );
            emit(out.as_deref(), &write_lineage(&annotated.mentions))
        }
    }
}

/// A challenge directory, or a bare abstracts file.
fn load_documents(path: &Path, opts: &ChallengeOptions) -> Result<Corpus> {
    if path.is_dir() {
        return Ok(load_challenge_dir(path, opts)?);
    }
    Ok(parse_challenge_tsv(&read_file(path)?, ENTITIES_HEADER, None, opts)?)
}

fn letters(ascii: bool) -> LetterClass {
    if ascii {
        LetterClass::Ascii
    } else {
        LetterClass::Unicode
    }
}

fn ner_baseline(a: NerBaselineArgs) -> Result<()> {
    let opts = challenge_opts(&a.concat_sep);
    let train = load_challenge_dir(&a.train, &opts)?;
    let predict = load_documents(&a.predict, &opts)?;
    let gazetteer = Gazetteer::build(&train)?;
    log::info!("gazetteer: {} surface form(s)", gazetteer.len());
    let mentions = run_ner(&gazetteer, &predict, letters(a.ascii_letters));
    write_file(&a.out, &write_entity_submission(&mentions)?)
}

fn re_baseline(a: ReBaselineArgs) -> Result<()> {
    let opts = challenge_opts(&a.concat_sep);
    let documents = parse_abstracts(&read_file(&a.abstracts)?, &opts)?;
    let mentions = parse_entity_rows(&read_file(&a.entities)?)?;
    let corpus = Corpus::new(documents, mentions, Vec::new())?;
    let scope = if a.abstract_scope {
        CandidateScope::Abstract
    } else {
        CandidateScope::Sentence
    };
    let without_ids = corpus.mentions.iter().filter(|m| m.kb_ids.is_empty()).count();
    if without_ids > 0 {
        log::warn!("{without_ids} entit(ies) without identifiers skipped");
    }
    let relations = run_re(&corpus, &corpus.mentions, scope, a.policy);
    write_file(&a.out, &write_relation_submission(&relations)?)
}

fn postprocess(command: PostprocessCommand) -> Result<()> {
    match command {
        PostprocessCommand::Ner {
            input,
            ascii_letters,
            out,
        } => {
            let mentions = parse_entity_rows(&read_file(&input)?)?;
            let before = mentions.len();
            let kept = filter_short_mentions(mentions, letters(ascii_letters));
            log::info!("kept {} of {before} mention(s)", kept.len());
            write_file(&out, &write_entity_submission(&kept)?)
        }
        PostprocessCommand::Re { input, policy, out } => {
            let relations = parse_relation_rows(&read_file(&input)?)?;
            let resolved = resolve_novelty(relations, policy);
            write_file(&out, &write_relation_submission(&resolved)?)
        }
    }
}

fn universe(common: &ScoreCommon, named: impl Iterator<Item = String>) -> Result<Vec<String>> {
    match &common.abstracts {
        Some(path) => Ok(parse_abstracts(&read_file(path)?, &ChallengeOptions::default())?
            .into_iter()
            .map(|d| d.id)
            .collect()),
        None => Ok(named.collect()),
    }
}

fn finish_score(common: &ScoreCommon, report: ScoreReport) -> Result<()> {
    if let Some(path) = &common.report {
        write_file(path, &report.to_tsv())?;
    }
    println!("{:.4}", report.corpus_score);
    Ok(())
}

fn score(command: ScoreCommand) -> Result<()> {
    match command {
        ScoreCommand::Ner { common, mode } => {
            let gold = parse_entity_rows(&read_file(&common.gold)?).context("gold")?;
            let pred = parse_entity_rows(&read_file(&common.pred)?).context("predictions")?;
            let ids = gold.iter().chain(&pred).map(|m| m.document_id.clone());
            let universe = universe(&common, ids)?;
            finish_score(&common, score_corpus_mentions(&pred, &gold, universe, mode)?)
        }
        ScoreCommand::Re {
            common,
            independent_abc,
            agg,
        } => {
            let gold = parse_relation_rows(&read_file(&common.gold)?).context("gold")?;
            let pred = parse_relation_rows(&read_file(&common.pred)?).context("predictions")?;
            let ids = gold.iter().chain(&pred).map(|r| r.document_id.clone());
            let universe = universe(&common, ids)?;
            let opts = RelationOptions {
                abc: if independent_abc {
                    AbcMode::Independent
                } else {
                    AbcMode::Cascade
                },
                aggregation: agg,
            };
            finish_score(&common, score_corpus_relations(&pred, &gold, universe, opts)?)
        }
    }
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    if a.jobs == 0 {
        bail!(UsageError("--jobs must be at least 1".into()));
    }
    let mut config = validate_config(&a.config)
        .with_context(|| format!("invalid configuration {}", a.config.display()))?
        .config;
    if let Some(out) = a.out {
        config.output.dir = Some(std::path::absolute(&out)?);
    }
    if a.dump_config {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    let summary = run_pipeline(&config, a.jobs)?;
    let dir = config.output.dir.as_deref().unwrap_or(Path::new("."));
    for f in &summary.files {
        log::info!("wrote {}", dir.join(f).display());
    }
    if let Some(s) = summary.ner_score {
        println!("ner\t{s:.4}");
    }
    if let Some(s) = summary.re_score {
        println!("re\t{s:.4}");
    }
    Ok(())
}
