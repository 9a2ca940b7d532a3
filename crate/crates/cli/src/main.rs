//! `biocurate`: one binary for record tools, corpus conversion, merging,
//! ontology linking, baselines, post-processing, scoring and the pipeline.
//! Installed (or symlinked) under the names `self`, `delf` or `count`, it
//! behaves as that subcommand.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biocurate_core::corpus::EntityType;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "biocurate", version, about = "Biomedical corpus curation and evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RecordArgs {
    /// Field delimiter (a single character).
    #[arg(long, short = 'd', default_value = "\t")]
    delimiter: char,
    /// Stop at the first malformed record instead of reporting and skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the given fields of every record, in the given order.
    #[command(name = "self")]
    SelectFields {
        /// 1-based field positions (`3 1`, `3,1`, or `1/4` for a range), then an
        /// optional input file; standard input when omitted or `-`.
        #[arg(required = true)]
        args: Vec<String>,
        #[command(flatten)]
        records: RecordArgs,
    },
    /// Print every record without the given fields.
    Delf {
        /// 1-based field positions to remove (`2 4`, `2,4`, or `2/3`), then an
        /// optional input file; standard input when omitted or `-`.
        #[arg(required = true)]
        args: Vec<String>,
        #[command(flatten)]
        records: RecordArgs,
    },
    /// Count records per key, sorted by key; the count is the last field.
    Count {
        /// 1-based key field positions (`1`, `1 3`, or `1,3`), then an optional
        /// input file; standard input when omitted or `-`.
        #[arg(required = true)]
        args: Vec<String>,
        #[command(flatten)]
        records: RecordArgs,
    },
    /// Convert a challenge or standoff corpus directory to CoNLL/BIO.
    Convert(ConvertArgs),
    /// Merge corpora into one BIO training file for a target entity type.
    Merge(MergeArgs),
    /// Split a BIO file into training and validation sentences.
    Split(SplitArgs),
    /// Load ontologies, query ancestors and link corpus identifiers.
    Ontology {
        #[command(subcommand)]
        command: OntologyCommand,
    },
    /// Tag entities with a gazetteer built from a training corpus.
    NerBaseline(NerBaselineArgs),
    /// Generate co-occurrence relation candidates from entity predictions.
    ReBaseline(ReBaselineArgs),
    /// Apply submission post-processing rules.
    Postprocess {
        #[command(subcommand)]
        command: PostprocessCommand,
    },
    /// Score predictions against gold annotations.
    Score {
        #[command(subcommand)]
        command: ScoreCommand,
    },
    /// Run the full flow described by a configuration file.
    Pipeline(PipelineArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ConvertTarget {
    Bio,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    /// Output format.
    #[arg(long, value_enum)]
    to: ConvertTarget,
    /// Entity type to encode; without it every type is encoded with typed tags.
    #[arg(long, value_parser = entity_type)]
    entity_type: Option<EntityType>,
    /// Emit B-<TYPE>/I-<TYPE> tags instead of bare B/I.
    #[arg(long)]
    typed_tags: bool,
    /// Type map TSV (`corpus`, `source_type`, `target_type`); required for
    /// standoff labels that are not entity type names.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Corpus name used for type map lookups; defaults to the directory name.
    #[arg(long)]
    name: Option<String>,
    /// Separator between title and abstract in challenge offsets.
    #[arg(long, default_value = " ")]
    concat_sep: String,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Corpus directory.
    corpus: PathBuf,
}

#[derive(Args, Debug)]
struct MergeArgs {
    /// Entity type whose mentions become B/I tags; all others become O.
    #[arg(long, value_parser = entity_type)]
    target_type: EntityType,
    /// Type map TSV covering every source type of every corpus.
    #[arg(long)]
    map: PathBuf,
    /// Shuffle sentences with this seed; concatenate in input order without it.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit B-<TYPE>/I-<TYPE> tags instead of bare B/I.
    #[arg(long)]
    typed_tags: bool,
    /// Write the per-corpus merge report (TSV) here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Separator between title and abstract in challenge offsets.
    #[arg(long, default_value = " ")]
    concat_sep: String,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Corpus directories, named by their directory name in the type map.
    #[arg(required = true)]
    corpora: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Fraction of sentences held out for validation, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Seed for the sentence partition.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file for the training sentences.
    #[arg(long)]
    train: PathBuf,
    /// Output file for the validation sentences.
    #[arg(long)]
    dev: PathBuf,
    /// BIO input file.
    input: PathBuf,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct OntologySourceArgs {
    /// OBO ontology file.
    #[arg(long)]
    obo: Option<PathBuf>,
    /// MeSH tree TSV (`descriptor_id`, `name`, `tree_number`).
    #[arg(long)]
    mesh_tree: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OntologyCommand {
    /// Load an ontology and print term, root and edge counts.
    Load {
        /// OBO file; use `--mesh-tree` for the MeSH adapter instead.
        file: Option<PathBuf>,
        /// MeSH tree TSV (`descriptor_id`, `name`, `tree_number`).
        #[arg(long, conflicts_with = "file")]
        mesh_tree: Option<PathBuf>,
        /// Only validate; print nothing on success.
        #[arg(long)]
        validate: bool,
    },
    /// Print the ancestors of a term, nearest first.
    Ancestors {
        /// Term identifier, e.g. `MESH:D007153`.
        id: String,
        #[command(flatten)]
        source: OntologySourceArgs,
    },
    /// Attach ontology lineage to the entities of a challenge corpus.
    Annotate {
        /// Identifier prefix handled by this ontology, e.g. `MESH:`.
        #[arg(long)]
        prefix: String,
        #[command(flatten)]
        source: OntologySourceArgs,
        /// Write the coverage report (TSV) here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Separator between title and abstract in challenge offsets.
        #[arg(long, default_value = " ")]
        concat_sep: String,
        /// Lineage TSV output; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Challenge corpus directory.
        corpus: PathBuf,
    },
}

#[derive(Args, Debug)]
struct NerBaselineArgs {
    /// Challenge corpus directory with gold entities.
    #[arg(long)]
    train: PathBuf,
    /// Challenge corpus directory (or abstracts TSV) to tag.
    #[arg(long)]
    predict: PathBuf,
    /// Count only ASCII letters for the single-character rule.
    #[arg(long)]
    ascii_letters: bool,
    /// Separator between title and abstract in challenge offsets.
    #[arg(long, default_value = " ")]
    concat_sep: String,
    /// Entities TSV output.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReBaselineArgs {
    /// Predicted entities TSV with an `entity_ids` column.
    #[arg(long)]
    entities: PathBuf,
    /// Abstracts TSV the entities refer to.
    #[arg(long)]
    abstracts: PathBuf,
    /// Pair entities co-occurring anywhere in the abstract, not just in a sentence.
    #[arg(long)]
    abstract_scope: bool,
    /// Duplicate relation policy: majority, prefer_novel, prefer_no or first_seen.
    #[arg(long, default_value = "majority")]
    policy: biocurate_core::postprocess::NoveltyPolicy,
    /// Separator between title and abstract in challenge offsets.
    #[arg(long, default_value = " ")]
    concat_sep: String,
    /// Relations TSV output.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum PostprocessCommand {
    /// Drop single-character mentions other than letter chemicals.
    Ner {
        /// Entities TSV input.
        #[arg(long = "in")]
        input: PathBuf,
        /// Count only ASCII letters for the single-character rule.
        #[arg(long)]
        ascii_letters: bool,
        /// Entities TSV output.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Collapse duplicate relations under a novelty policy.
    Re {
        /// Relations TSV input.
        #[arg(long = "in")]
        input: PathBuf,
        /// majority, prefer_novel, prefer_no or first_seen.
        #[arg(long, default_value = "majority")]
        policy: biocurate_core::postprocess::NoveltyPolicy,
        /// Relations TSV output.
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ScoreCommon {
    /// Gold TSV.
    #[arg(long)]
    gold: PathBuf,
    /// Predicted TSV.
    #[arg(long)]
    pred: PathBuf,
    /// Abstracts TSV listing every scored document; defaults to the
    /// documents named in the gold and predicted files.
    #[arg(long)]
    abstracts: Option<PathBuf>,
    /// Write the per-document report (TSV) here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum ScoreCommand {
    /// Score entity predictions.
    Ner {
        #[command(flatten)]
        common: ScoreCommon,
        /// Span matching: exact offsets or any overlap.
        #[arg(long, default_value = "exact")]
        mode: biocurate_core::score::MatchMode,
    },
    /// Score relation predictions.
    Re {
        #[command(flatten)]
        common: ScoreCommon,
        /// Credit type and novelty matches without requiring the earlier components.
        #[arg(long)]
        independent_abc: bool,
        /// Combine several predictions for one gold pair by max or mean.
        #[arg(long, default_value = "max")]
        agg: biocurate_core::score::Aggregation,
    },
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for per-document stages.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override the configured output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

fn entity_type(s: &str) -> Result<EntityType, String> {
    s.parse().map_err(|e: biocurate_core::Error| e.to_string())
}

/// Rewrites `self 1 2` style invocations (by program name) into subcommands.
fn dispatch_argv(mut argv: Vec<OsString>) -> Vec<OsString> {
    let alias = argv
        .first()
        .and_then(|a| Path::new(a).file_stem())
        .and_then(|s| s.to_str())
        .filter(|s| matches!(*s, "self" | "delf" | "count"))
        .map(OsString::from);
    if let Some(alias) = alias {
        argv.insert(1, alias);
    }
    argv
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let argv = dispatch_argv(std::env::args_os().collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<commands::UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
