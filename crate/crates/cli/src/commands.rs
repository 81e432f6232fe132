//! Subcommand implementations.
//!
//! Each command checks that its inputs are configured and exist before
//! loading any of them.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dsr_core::collection::{
    build_collection, fleiss_kappa, read_annotations, read_pair_list, validate_collection, AgreementReport,
    CountExpectations, DsrCollection,
};
use dsr_core::corpus::{stream_corpus, BadRecordPolicy};
use dsr_core::embedding::{load_vectors, rank_by_embedding, EmbeddingError, EmbeddingTable};
use dsr_core::eval::{build_report, MetricReport, RankedRun};
use dsr_core::miner::{import_external_scores, rank_all, rank_symptoms, write_scores, Method};
use dsr_core::pipeline::{mine_articles, tag_batch, DEFAULT_BATCH};
use dsr_core::{ConceptKind, ConceptMatcher, Vocabulary};

use crate::config::PipelineConfig;
use crate::{DataError, UsageError};

fn policy(config: &PipelineConfig) -> BadRecordPolicy {
    if config.skip_bad_records {
        BadRecordPolicy::Skip
    } else {
        BadRecordPolicy::Abort
    }
}

fn load_vocab(path: &Path) -> Result<Vocabulary> {
    let v = Vocabulary::load(path).with_context(|| format!("vocabulary {}", path.display()))?;
    log::info!("{} concepts ({} diseases, {} symptoms)", v.len(), v.disease_count(), v.symptom_count());
    Ok(v)
}

fn load_collection(path: &Path) -> Result<DsrCollection> {
    DsrCollection::load(path).with_context(|| format!("collection {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writes `bytes` to `<out>/<name>` when an output directory is set,
/// otherwise to `stdout`.
fn emit(config: &PipelineConfig, name: &str, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match config.out_dir()? {
        Some(dir) => {
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            log::info!("wrote {}", path.display());
        }
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn to_json(value: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

pub fn cmd_tag(config: &PipelineConfig, stdout: &mut dyn Write) -> Result<()> {
    let vocab_path = config.require(&config.vocab, "vocab")?;
    let corpus_path = config.require(&config.corpus, "corpus")?;
    let vocab = load_vocab(vocab_path)?;
    let matcher = ConceptMatcher::new(&vocab);
    let mut reader = stream_corpus(corpus_path, policy(config)).with_context(|| format!("corpus {}", corpus_path.display()))?;

    let mut sink: Box<dyn Write + '_> = match config.out_dir()? {
        Some(dir) => Box::new(create(&dir.join("tags.jsonl"))?),
        None => Box::new(&mut *stdout),
    };
    loop {
        let batch = reader
            .by_ref()
            .take(DEFAULT_BATCH)
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("corpus {}", corpus_path.display()))?;
        if batch.is_empty() {
            break;
        }
        for tags in tag_batch(&matcher, &batch) {
            serde_json::to_writer(&mut sink, &tags.to_record(&vocab))?;
            sink.write_all(b"\n")?;
        }
    }
    sink.flush()?;
    let stats = reader.stats();
    log::info!(
        "tagged {} articles ({} with keywords, {} skipped)",
        stats.article_count,
        stats.with_keywords_count,
        stats.skipped_records
    );
    Ok(())
}

/// Index snapshot and score file names for a regime.
pub fn mine_outputs(dir: &Path, method: Method) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{method}.index.tsv")),
        dir.join(format!("{method}.scores.tsv")),
    )
}

pub fn cmd_mine(config: &PipelineConfig, batch_size: usize, stdout: &mut dyn Write) -> Result<()> {
    let vocab_path = config.require(&config.vocab, "vocab")?;
    let corpus_path = config.require(&config.corpus, "corpus")?;
    if config.out.is_none() {
        return Err(UsageError("--out is required for mine".into()).into());
    }
    if batch_size == 0 {
        return Err(UsageError("--batch-size must be positive".into()).into());
    }
    let vocab = load_vocab(vocab_path)?;
    let matcher = ConceptMatcher::new(&vocab);
    let mut reader = stream_corpus(corpus_path, policy(config)).with_context(|| format!("corpus {}", corpus_path.display()))?;
    let indexes = mine_articles(&mut reader, &matcher, &config.regimes, batch_size, |_| {})
        .with_context(|| format!("mining {}", corpus_path.display()))?;
    let stats = reader.stats();

    let dir = config.out_dir()?.expect("checked above");
    writeln!(
        stdout,
        "articles\t{}\nwith_keywords\t{}\nskipped\t{}",
        stats.article_count, stats.with_keywords_count, stats.skipped_records
    )?;
    for index in &indexes {
        let method = index.regime().method();
        let (index_path, scores_path) = mine_outputs(dir, method);
        let mut w = create(&index_path)?;
        index.write_snapshot(&vocab, &mut w)?;
        w.flush()?;
        let scores = index.relation_scores(&vocab);
        let mut w = create(&scores_path)?;
        write_scores(&scores, &mut w)?;
        w.flush()?;
        writeln!(stdout, "{method}\t{} pairs", scores.len())?;
    }
    Ok(())
}

enum Source {
    Scores(Vec<dsr_core::RelationScore>),
    Vectors(EmbeddingTable),
}

fn resolve_disease<'v>(vocab: &'v Vocabulary, key: &str) -> Result<&'v dsr_core::Concept> {
    let concept = vocab
        .resolve(key)
        .ok_or_else(|| DataError(format!("unknown disease `{key}`")))?;
    if concept.kind != ConceptKind::Disease {
        return Err(DataError(format!("`{key}` is a {}, not a disease", concept.kind)).into());
    }
    Ok(concept)
}

pub fn cmd_rank(
    config: &PipelineConfig,
    disease: Option<&str>,
    k: usize,
    method: Option<&str>,
    stdout: &mut dyn Write,
) -> Result<()> {
    if k == 0 {
        return Err(UsageError("-k must be positive".into()).into());
    }
    let vocab_path = config.require(&config.vocab, "vocab")?;
    let (source_path, is_vectors) = match (&config.scores, &config.vectors) {
        (Some(_), Some(_)) => return Err(UsageError("give either --scores or --vectors, not both".into()).into()),
        (Some(_), None) => (config.require(&config.scores, "scores")?, false),
        (None, Some(_)) => (config.require(&config.vectors, "vectors")?, true),
        (None, None) => return Err(UsageError("--scores or --vectors is required for rank".into()).into()),
    };
    let method: Method = match method {
        Some(m) => m.parse().map_err(UsageError)?,
        None if is_vectors => Method::Embedding,
        None => Method::Kwd,
    };
    let vocab = load_vocab(vocab_path)?;
    let source = if is_vectors {
        let (table, stats) = load_vectors(source_path, &vocab).with_context(|| format!("vectors {}", source_path.display()))?;
        log::info!("{} vectors kept, {} skipped", stats.kept, stats.skipped);
        Source::Vectors(table)
    } else {
        let imported =
            import_external_scores(source_path, &vocab, method).with_context(|| format!("scores {}", source_path.display()))?;
        if imported.skipped > 0 {
            log::warn!("{} score rows did not resolve to a vocabulary pair", imported.skipped);
        }
        Source::Scores(imported.scores)
    };

    if let Some(key) = disease {
        let concept = resolve_disease(&vocab, key)?;
        let ranked = match &source {
            Source::Scores(scores) => rank_symptoms(scores.iter().filter(|s| s.disease_id == concept.id), k),
            Source::Vectors(table) => rank_by_embedding(table, &concept.id, &vocab, k)?,
        };
        writeln!(stdout, "rank\tsymptom_id\tname\tscore")?;
        for (i, r) in ranked.iter().enumerate() {
            let name = vocab.get(&r.symptom_id).map_or("", |c| c.name.as_str());
            writeln!(stdout, "{}\t{}\t{}\t{}", i + 1, r.symptom_id, name, r.score)?;
        }
        return Ok(());
    }

    let mut run = RankedRun::new(method.as_str());
    match &source {
        Source::Scores(scores) => run.rankings = rank_all(scores, k),
        Source::Vectors(table) => {
            for (_, d) in vocab.diseases() {
                match rank_by_embedding(table, &d.id, &vocab, k) {
                    Ok(r) => {
                        run.rankings.insert(d.id.clone(), r);
                    }
                    Err(e @ (EmbeddingError::MissingVector(_) | EmbeddingError::ZeroNormVector(_))) => {
                        log::warn!("{e}; disease skipped")
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    let mut buf = Vec::new();
    run.write_tsv(&mut buf)?;
    emit(config, &format!("{method}.run.tsv"), &buf, stdout)
}

/// Splits `LABEL=PATH`; a bare path is labelled by its file name.
pub fn parse_run_spec(spec: &str) -> (String, PathBuf) {
    if let Some((label, path)) = spec.split_once('=') {
        if !label.is_empty() && !label.contains(['/', '\\']) {
            return (label.to_string(), PathBuf::from(path));
        }
    }
    let path = PathBuf::from(spec);
    let name = path.file_name().map_or_else(|| spec.to_string(), |n| n.to_string_lossy().into_owned());
    let label = name.trim_end_matches(".tsv").trim_end_matches(".run").to_string();
    (label, path)
}

pub fn cmd_eval(config: &PipelineConfig, specs: &[String], stdout: &mut dyn Write) -> Result<MetricReport> {
    let collection_path = config.require(&config.collection, "collection")?;
    let specs: Vec<(String, PathBuf)> = specs.iter().map(|s| parse_run_spec(s)).collect();
    if specs.len() > 26 {
        return Err(UsageError(format!("at most 26 runs can be compared, got {}", specs.len())).into());
    }
    for (i, (label, path)) in specs.iter().enumerate() {
        if !path.exists() {
            return Err(UsageError(format!("run {}: {} does not exist", label, path.display())).into());
        }
        if specs[..i].iter().any(|(l, _)| l == label) {
            return Err(UsageError(format!("run label `{label}` given twice")).into());
        }
    }
    let collection = load_collection(collection_path)?;
    let runs = specs
        .iter()
        .map(|(label, path)| RankedRun::load(path, label.as_str()).with_context(|| format!("run {}", path.display())))
        .collect::<Result<Vec<_>>>()?;
    let report = build_report(&runs, &collection, config.report_config())?;
    for run in &report.runs {
        if !run.evaluation.ignored_diseases.is_empty() {
            log::warn!(
                "run `{}`: {} diseases not in the collection were ignored",
                run.evaluation.label,
                run.evaluation.ignored_diseases.len()
            );
        }
    }
    let markdown = report.to_markdown();
    if let Some(dir) = config.out_dir()? {
        for (name, bytes) in [("report.json", report.to_json()?.into_bytes()), ("report.md", markdown.clone().into_bytes())] {
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    stdout.write_all(markdown.as_bytes())?;
    Ok(report)
}

fn read_records(path: &Path) -> Result<Vec<dsr_core::collection::AnnotationRecord>> {
    let f = File::open(path).with_context(|| format!("annotations {}", path.display()))?;
    read_annotations(BufReader::new(f)).with_context(|| format!("annotations {}", path.display()))
}

pub fn cmd_kappa(config: &PipelineConfig, annotations: &Path, stdout: &mut dyn Write) -> Result<AgreementReport> {
    if !annotations.exists() {
        return Err(UsageError(format!("--annotations: {} does not exist", annotations.display())).into());
    }
    let records = read_records(annotations)?;
    let report = fleiss_kappa(&records).with_context(|| format!("annotations {}", annotations.display()))?;
    emit(config, "kappa.json", &to_json(&report)?, stdout)?;
    Ok(report)
}

pub fn cmd_vote(config: &PipelineConfig, annotations: &Path, pairs: &Path, stdout: &mut dyn Write) -> Result<DsrCollection> {
    for (flag, p) in [("annotations", annotations), ("pairs", pairs)] {
        if !p.exists() {
            return Err(UsageError(format!("--{flag}: {} does not exist", p.display())).into());
        }
    }
    let vocab = match &config.vocab {
        Some(_) => Some(load_vocab(config.require(&config.vocab, "vocab")?)?),
        None => None,
    };
    let records = read_records(annotations)?;
    let f = File::open(pairs).with_context(|| format!("pairs {}", pairs.display()))?;
    let pair_list = read_pair_list(BufReader::new(f)).with_context(|| format!("pairs {}", pairs.display()))?;
    let name_of = |id: &str| {
        vocab
            .as_ref()
            .and_then(|v| v.get(id))
            .map_or_else(|| id.to_string(), |c| c.name.clone())
    };
    let collection = build_collection(&records, &pair_list, name_of)?;
    let mut buf = Vec::new();
    collection.write_json(&mut buf)?;
    emit(config, "collection.json", &buf, stdout)?;
    Ok(collection)
}

pub fn cmd_validate(config: &PipelineConfig, expect: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    if let Some(p) = expect {
        if !p.exists() {
            return Err(UsageError(format!("--expect: {} does not exist", p.display())).into());
        }
    }
    if config.collection.is_some() {
        let collection_path = config.require(&config.collection, "collection")?;
        let vocab = match &config.vocab {
            Some(_) => Some(load_vocab(config.require(&config.vocab, "vocab")?)?),
            None => None,
        };
        let expectations = match expect {
            Some(p) => Some(
                CountExpectations::from_reader(BufReader::new(File::open(p)?))
                    .with_context(|| format!("expectations {}", p.display()))?,
            ),
            None => None,
        };
        let collection = load_collection(collection_path)?;
        let report = validate_collection(&collection, expectations.as_ref(), vocab.as_ref());
        stdout.write_all(&to_json(&report)?)?;
        if !report.passed() {
            return Err(DataError(format!("validation failed with {} findings", report.findings.len())).into());
        }
        return Ok(());
    }
    if expect.is_some() {
        return Err(UsageError("--expect needs --collection".into()).into());
    }
    match (&config.vocab, &config.corpus) {
        (None, None) => Err(UsageError("validate needs --collection, --vocab or --corpus".into()).into()),
        (vocab, corpus) => {
            if vocab.is_some() {
                let v = load_vocab(config.require(&config.vocab, "vocab")?)?;
                writeln!(stdout, "vocabulary\t{} concepts\t{} diseases\t{} symptoms", v.len(), v.disease_count(), v.symptom_count())?;
            }
            if corpus.is_some() {
                let path = config.require(&config.corpus, "corpus")?;
                let mut reader = stream_corpus(path, policy(config))?;
                for article in reader.by_ref() {
                    article.with_context(|| format!("corpus {}", path.display()))?;
                }
                let s = reader.stats();
                writeln!(
                    stdout,
                    "corpus\t{} articles\t{} with keywords\t{} skipped",
                    s.article_count, s.with_keywords_count, s.skipped_records
                )?;
            }
            Ok(())
        }
    }
}
