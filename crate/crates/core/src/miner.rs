//! Co-occurrence counting and ISF-weighted relation scores.
//!
//! Two counting regimes are supported:
//!
//! * [`Regime::Keyword`]: an article counts for `(x, s)` when both concepts
//!   are among its keywords.
//! * [`Regime::FullText`]: an article is relevant to disease `x` when `x` is
//!   in its keywords or title, and counts for `(x, s)` when `s` also occurs in
//!   the body.
//!
//! Counts are article presence, never mention frequency. The relation score
//! is `co(x, s) * |X| / n_s` where `|X|` is the vocabulary's disease count and
//! `n_s` the number of diseases co-occurring with `s` at least once.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tagger::SectionTags;
use crate::vocab::{ConceptIdx, ConceptKind, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum MinerError {
    #[error("article `{article_id}` references concept index {index} outside the vocabulary")]
    VocabularyMismatch { article_id: String, index: u32 },
    #[error("ISF undefined for symptom `{0}`: it co-occurs with no disease")]
    UndefinedIsf(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("`{id}` is not a {expected}")]
    WrongKind { id: String, expected: ConceptKind },
    #[error("vocabulary needs at least one disease and one symptom for mining")]
    EmptyUniverse,
    #[error("cannot merge indexes with different regime or disease total")]
    IncompatibleIndexes,
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: duplicate pair {disease}/{symptom}")]
    DuplicatePair {
        line: usize,
        disease: String,
        symptom: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    Keyword,
    FullText,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Keyword => "keyword",
            Regime::FullText => "fulltext",
        }
    }

    pub fn method(self) -> Method {
        match self {
            Regime::Keyword => Method::Kwd,
            Regime::FullText => Method::FullText,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "keyword" | "kwd" => Ok(Regime::Keyword),
            "fulltext" | "full-text" => Ok(Regime::FullText),
            other => Err(format!("unknown regime `{other}` (expected kwd or fulltext)")),
        }
    }
}

/// Provenance of a relation score. Scores are only comparable within one method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kwd,
    KwdLarge,
    FullText,
    Embedding,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kwd => "kwd",
            Method::KwdLarge => "kwdlarge",
            Method::FullText => "fulltext",
            Method::Embedding => "embedding",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kwd" | "keyword" => Ok(Method::Kwd),
            "kwdlarge" | "kwd-large" => Ok(Method::KwdLarge),
            "fulltext" | "full-text" => Ok(Method::FullText),
            "embedding" => Ok(Method::Embedding),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationScore {
    pub disease_id: String,
    pub symptom_id: String,
    pub score: f64,
    pub method: Method,
}

type Pair = (ConceptIdx, ConceptIdx);

/// Accumulates co-occurrence counts over a subset of articles.
///
/// Builders over disjoint article sets merge by summation, so counting can be
/// split across workers in any order.
#[derive(Debug, Clone)]
pub struct IndexBuilder<'v> {
    vocab: &'v Vocabulary,
    regime: Regime,
    co: HashMap<Pair, u64>,
}

impl<'v> IndexBuilder<'v> {
    pub fn new(vocab: &'v Vocabulary, regime: Regime) -> Result<Self, MinerError> {
        if vocab.disease_count() == 0 || vocab.symptom_count() == 0 {
            return Err(MinerError::EmptyUniverse);
        }
        Ok(IndexBuilder {
            vocab,
            regime,
            co: HashMap::new(),
        })
    }

    pub fn observe(&mut self, tags: &SectionTags) -> Result<(), MinerError> {
        let sections = [&tags.title, &tags.keywords, &tags.body];
        if let Some(&bad) = sections
            .iter()
            .flat_map(|s| s.iter())
            .find(|i| i.get() >= self.vocab.len())
        {
            return Err(MinerError::VocabularyMismatch {
                article_id: tags.article_id.clone(),
                index: bad.0,
            });
        }
        let vocab = self.vocab;
        let select = |sets: &[&Vec<ConceptIdx>], kind: ConceptKind| -> Vec<ConceptIdx> {
            let mut out: Vec<ConceptIdx> = sets
                .iter()
                .flat_map(|s| s.iter().copied())
                .filter(|&i| vocab.concepts()[i.get()].kind == kind)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        };
        let (diseases, symptoms) = match self.regime {
            Regime::Keyword => (
                select(&[&tags.keywords], ConceptKind::Disease),
                select(&[&tags.keywords], ConceptKind::Symptom),
            ),
            Regime::FullText => (
                select(&[&tags.keywords, &tags.title], ConceptKind::Disease),
                select(&[&tags.body], ConceptKind::Symptom),
            ),
        };
        for &d in &diseases {
            for &s in &symptoms {
                *self.co.entry((d, s)).or_insert(0) += 1;
            }
        }
        Ok(())
    }

    pub fn merge(mut self, other: IndexBuilder<'v>) -> Self {
        debug_assert_eq!(self.regime, other.regime);
        if self.co.len() < other.co.len() {
            return other.merge(self);
        }
        for (pair, n) in other.co {
            *self.co.entry(pair).or_insert(0) += n;
        }
        self
    }

    pub fn finish(self) -> CooccurrenceIndex {
        CooccurrenceIndex::from_counts(self.regime, self.vocab.disease_count() as u64, self.co.into_iter().collect())
    }
}

/// Article-level co-occurrence counts for one regime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceIndex {
    regime: Regime,
    total_diseases: u64,
    co: BTreeMap<Pair, u64>,
    n_s: BTreeMap<ConceptIdx, u64>,
}

impl CooccurrenceIndex {
    fn from_counts(regime: Regime, total_diseases: u64, mut co: BTreeMap<Pair, u64>) -> Self {
        co.retain(|_, n| *n > 0);
        let mut n_s = BTreeMap::new();
        for &(_, s) in co.keys() {
            *n_s.entry(s).or_insert(0) += 1;
        }
        CooccurrenceIndex {
            regime,
            total_diseases,
            co,
            n_s,
        }
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// `|X|`, taken from the vocabulary rather than from observed data.
    pub fn total_diseases(&self) -> u64 {
        self.total_diseases
    }

    pub fn co(&self, disease: ConceptIdx, symptom: ConceptIdx) -> u64 {
        self.co.get(&(disease, symptom)).copied().unwrap_or(0)
    }

    /// Number of distinct diseases with `co(x, s) >= 1`.
    pub fn n_s(&self, symptom: ConceptIdx) -> u64 {
        self.n_s.get(&symptom).copied().unwrap_or(0)
    }

    pub fn pair_count(&self) -> usize {
        self.co.len()
    }

    pub fn is_empty(&self) -> bool {
        self.co.is_empty()
    }

    /// Stored pairs in `(disease, symptom)` order.
    pub fn pairs(&self) -> impl Iterator<Item = (ConceptIdx, ConceptIdx, u64)> + '_ {
        self.co.iter().map(|(&(d, s), &n)| (d, s, n))
    }

    /// Sums counts pairwise and recomputes `n_s`.
    pub fn merge(&self, other: &CooccurrenceIndex) -> Result<CooccurrenceIndex, MinerError> {
        if self.regime != other.regime || self.total_diseases != other.total_diseases {
            return Err(MinerError::IncompatibleIndexes);
        }
        let mut co = self.co.clone();
        for (&pair, &n) in &other.co {
            *co.entry(pair).or_insert(0) += n;
        }
        Ok(Self::from_counts(self.regime, self.total_diseases, co))
    }

    /// `|X| / n_s`.
    pub fn inverse_symptom_frequency(&self, symptom: ConceptIdx) -> Option<f64> {
        match self.n_s(symptom) {
            0 => None,
            n => Some(self.total_diseases as f64 / n as f64),
        }
    }

    /// `co(x, s) * ISF(s)`, or 0 for a pair that never co-occurs.
    pub fn score(&self, disease: ConceptIdx, symptom: ConceptIdx) -> f64 {
        match self.co(disease, symptom) {
            0 => 0.0,
            co => co as f64 * self.inverse_symptom_frequency(symptom).unwrap_or(0.0),
        }
    }

    /// Scores of every stored pair, sorted by disease then symptom id.
    pub fn relation_scores(&self, vocab: &Vocabulary) -> Vec<RelationScore> {
        let method = self.regime.method();
        self.pairs()
            .map(|(d, s, _)| RelationScore {
                disease_id: id_of(vocab, d),
                symptom_id: id_of(vocab, s),
                score: self.score(d, s),
                method,
            })
            .collect()
    }

    /// Writes the `#|X|=` / `#regime=` header followed by
    /// `disease_id<TAB>symptom_id<TAB>count` rows.
    pub fn write_snapshot(&self, vocab: &Vocabulary, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "#|X|={}", self.total_diseases)?;
        writeln!(w, "#regime={}", self.regime)?;
        for (d, s, n) in self.pairs() {
            writeln!(w, "{}\t{}\t{}", id_of(vocab, d), id_of(vocab, s), n)?;
        }
        Ok(())
    }

    pub fn read_snapshot(reader: impl BufRead, vocab: &Vocabulary) -> Result<Self, MinerError> {
        let mut total = None;
        let mut regime = None;
        let mut co = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let malformed = |reason: String| MinerError::MalformedRow { line: line_no, reason };
            if let Some(rest) = line.strip_prefix("#|X|=") {
                total = Some(rest.trim().parse::<u64>().map_err(|e| malformed(e.to_string()))?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("#regime=") {
                regime = Some(rest.parse::<Regime>().map_err(malformed)?);
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(malformed(format!("expected 3 fields, found {}", fields.len())));
            }
            let d = resolve(vocab, fields[0], ConceptKind::Disease)?;
            let s = resolve(vocab, fields[1], ConceptKind::Symptom)?;
            let n: u64 = fields[2].trim().parse().map_err(|e| malformed(format!("count: {e}")))?;
            if n == 0 {
                return Err(malformed("zero counts are not stored".into()));
            }
            if co.insert((d, s), n).is_some() {
                return Err(MinerError::DuplicatePair {
                    line: line_no,
                    disease: fields[0].into(),
                    symptom: fields[1].into(),
                });
            }
        }
        let total = total.ok_or_else(|| MinerError::MalformedRow {
            line: 0,
            reason: "missing #|X|= header".into(),
        })?;
        let regime = regime.ok_or_else(|| MinerError::MalformedRow {
            line: 0,
            reason: "missing #regime= header".into(),
        })?;
        Ok(Self::from_counts(regime, total, co))
    }
}

fn id_of(vocab: &Vocabulary, idx: ConceptIdx) -> String {
    vocab
        .concept(idx)
        .map(|c| c.id.clone())
        .expect("index built from this vocabulary")
}

fn resolve(vocab: &Vocabulary, id: &str, kind: ConceptKind) -> Result<ConceptIdx, MinerError> {
    let idx = vocab
        .index_of(id)
        .ok_or_else(|| MinerError::UnknownConcept(id.to_string()))?;
    if vocab.concept(idx).map(|c| c.kind) != Some(kind) {
        return Err(MinerError::WrongKind {
            id: id.to_string(),
            expected: kind,
        });
    }
    Ok(idx)
}

pub fn count_cooccurrence<'a>(
    tags: impl IntoIterator<Item = &'a SectionTags>,
    vocab: &Vocabulary,
    regime: Regime,
) -> Result<CooccurrenceIndex, MinerError> {
    let mut builder = IndexBuilder::new(vocab, regime)?;
    for t in tags {
        builder.observe(t)?;
    }
    Ok(builder.finish())
}

pub fn count_keyword_cooccurrence<'a>(
    tags: impl IntoIterator<Item = &'a SectionTags>,
    vocab: &Vocabulary,
) -> Result<CooccurrenceIndex, MinerError> {
    count_cooccurrence(tags, vocab, Regime::Keyword)
}

pub fn count_fulltext_cooccurrence<'a>(
    tags: impl IntoIterator<Item = &'a SectionTags>,
    vocab: &Vocabulary,
) -> Result<CooccurrenceIndex, MinerError> {
    count_cooccurrence(tags, vocab, Regime::FullText)
}

/// Counts `tags` in parallel chunks on the current rayon pool.
pub fn count_parallel<'v>(
    tags: &[SectionTags],
    vocab: &'v Vocabulary,
    regime: Regime,
    chunk_size: usize,
) -> Result<IndexBuilder<'v>, MinerError> {
    let empty = IndexBuilder::new(vocab, regime)?;
    tags.par_chunks(chunk_size.max(1))
        .map(|chunk| {
            let mut b = empty.clone();
            for t in chunk {
                b.observe(t)?;
            }
            Ok(b)
        })
        .try_reduce(|| empty.clone(), |a, b| Ok(a.merge(b)))
}

/// `|X| / n_s` for a symptom id.
pub fn inverse_symptom_frequency(index: &CooccurrenceIndex, vocab: &Vocabulary, symptom_id: &str) -> Result<f64, MinerError> {
    let s = resolve(vocab, symptom_id, ConceptKind::Symptom)?;
    index
        .inverse_symptom_frequency(s)
        .ok_or_else(|| MinerError::UndefinedIsf(symptom_id.to_string()))
}

/// `co(x, s) * ISF(s)`; 0 when the pair never co-occurs.
pub fn relation_score(
    index: &CooccurrenceIndex,
    vocab: &Vocabulary,
    disease_id: &str,
    symptom_id: &str,
) -> Result<f64, MinerError> {
    let d = resolve(vocab, disease_id, ConceptKind::Disease)?;
    let s = resolve(vocab, symptom_id, ConceptKind::Symptom)?;
    Ok(index.score(d, s))
}

/// A ranked symptom with its score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranked {
    pub symptom_id: String,
    pub score: f64,
}

/// Sorts descending by score, ascending symptom id on ties.
pub fn sort_ranking(items: &mut [Ranked]) {
    items.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.symptom_id.cmp(&b.symptom_id)));
}

/// Top `k` symptoms for one disease and method; scores `<= 0` are dropped.
pub fn rank_symptoms<'a>(scores: impl IntoIterator<Item = &'a RelationScore>, k: usize) -> Vec<Ranked> {
    let mut items: Vec<Ranked> = scores
        .into_iter()
        .filter(|r| r.score > 0.0)
        .map(|r| Ranked {
            symptom_id: r.symptom_id.clone(),
            score: r.score,
        })
        .collect();
    sort_ranking(&mut items);
    items.truncate(k);
    items
}

/// Groups scores by disease and ranks each group.
pub fn rank_all(scores: &[RelationScore], k: usize) -> BTreeMap<String, Vec<Ranked>> {
    let mut by_disease: BTreeMap<&str, Vec<&RelationScore>> = BTreeMap::new();
    for s in scores {
        by_disease.entry(&s.disease_id).or_default().push(s);
    }
    by_disease
        .into_iter()
        .map(|(d, group)| (d.to_string(), rank_symptoms(group, k)))
        .collect()
}

pub fn write_scores<'a>(scores: impl IntoIterator<Item = &'a RelationScore>, mut w: impl Write) -> io::Result<()> {
    for s in scores {
        writeln!(w, "{}\t{}\t{}", s.disease_id, s.symptom_id, s.score)?;
    }
    Ok(())
}

/// Scores read from a TSV file, plus the number of rows that did not resolve.
#[derive(Debug, Clone, Default)]
pub struct ImportedScores {
    pub scores: Vec<RelationScore>,
    pub skipped: usize,
}

/// Reads `disease_id<TAB>symptom_id<TAB>score` rows.
///
/// Rows whose ids are not a disease and a symptom of `vocab` are skipped and
/// counted rather than rejected.
pub fn read_scores(reader: impl BufRead, vocab: &Vocabulary, method: Method) -> Result<ImportedScores, MinerError> {
    let mut out = ImportedScores::default();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(MinerError::MalformedRow {
                line: line_no,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let (d, s) = (fields[0].trim(), fields[1].trim());
        let score: f64 = fields[2].trim().parse().map_err(|e| MinerError::MalformedRow {
            line: line_no,
            reason: format!("score: {e}"),
        })?;
        if !score.is_finite() {
            return Err(MinerError::MalformedRow {
                line: line_no,
                reason: "score is not finite".into(),
            });
        }
        let known = vocab.get(d).is_some_and(|c| c.is_disease()) && vocab.get(s).is_some_and(|c| c.is_symptom());
        if !known {
            log::warn!("line {line_no}: skipping unresolved pair {d}/{s}");
            out.skipped += 1;
            continue;
        }
        if !seen.insert((d.to_string(), s.to_string())) {
            return Err(MinerError::DuplicatePair {
                line: line_no,
                disease: d.into(),
                symptom: s.into(),
            });
        }
        out.scores.push(RelationScore {
            disease_id: d.to_string(),
            symptom_id: s.to_string(),
            score,
            method,
        });
    }
    Ok(out)
}

/// Imports externally published relation scores as opaque values.
pub fn import_external_scores(path: impl AsRef<Path>, vocab: &Vocabulary, method: Method) -> Result<ImportedScores, MinerError> {
    let file = File::open(path)?;
    read_scores(BufReader::new(file), vocab, method)
}
