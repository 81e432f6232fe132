//! Cosine-similarity relations over externally trained concept vectors.
//!
//! Vector file format: a first line holding the dimension (a word2vec style
//! `<count> <dimension>` header is also accepted), then one
//! `token c1 ... cd` row per vector. A token is either a concept id or an
//! underscore-joined synonym such as `abdominal_pain`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use crate::miner::{sort_ranking, Ranked};
use crate::vocab::Vocabulary;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("no vector for `{0}`")]
    MissingVector(String),
    #[error("vector for `{0}` has zero norm")]
    ZeroNormVector(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub kept: usize,
    pub skipped: usize,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, concept_id: &str) -> Option<&[f64]> {
        self.vectors.get(concept_id).map(Vec::as_slice)
    }

    /// Inserts a vector, replacing any previous one for the id.
    pub fn insert(&mut self, concept_id: impl Into<String>, vector: Vec<f64>) -> Result<(), EmbeddingError> {
        if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                line: 0,
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|c| !c.is_finite()) {
            return Err(EmbeddingError::MalformedRow {
                line: 0,
                reason: "non-finite component".into(),
            });
        }
        self.vectors.insert(concept_id.into(), vector);
        Ok(())
    }

    pub fn from_reader(reader: impl BufRead, vocab: &Vocabulary) -> Result<(Self, LoadStats), EmbeddingError> {
        let mut lines = reader.lines().enumerate();
        let dimension = loop {
            let Some((i, line)) = lines.next() else {
                return Err(EmbeddingError::MalformedRow {
                    line: 1,
                    reason: "missing dimension header".into(),
                });
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = line
                .split_whitespace()
                .last()
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&d| d > 0 && line.split_whitespace().count() <= 2);
            break parsed.ok_or_else(|| EmbeddingError::MalformedRow {
                line: i + 1,
                reason: format!("bad dimension header `{line}`"),
            })?;
        };

        let mut table = EmbeddingTable::new(dimension);
        let mut stats = LoadStats::default();
        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let components = parts
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| EmbeddingError::MalformedRow {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            if components.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line_no,
                    expected: dimension,
                    found: components.len(),
                });
            }
            if components.iter().any(|c| !c.is_finite()) {
                return Err(EmbeddingError::MalformedRow {
                    line: line_no,
                    reason: "non-finite component".into(),
                });
            }
            let concept = vocab.get(token).or_else(|| vocab.lookup(&token.replace('_', " ")));
            match concept {
                Some(c) if !table.vectors.contains_key(&c.id) => {
                    table.vectors.insert(c.id.clone(), components);
                    stats.kept += 1;
                }
                Some(c) => {
                    log::warn!("line {line_no}: second vector for `{}` ignored", c.id);
                    stats.skipped += 1;
                }
                None => stats.skipped += 1,
            }
        }
        Ok((table, stats))
    }
}

pub fn load_vectors(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<(EmbeddingTable, LoadStats), EmbeddingError> {
    let file = File::open(path)?;
    EmbeddingTable::from_reader(BufReader::new(file), vocab)
}

/// Neumaier-compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Cosine of two equal-length vectors, clamped to `[-1, 1]`.
/// `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    for (&x, &y) in a.iter().zip(b) {
        dot.add(x * y);
        na.add(x * x);
        nb.add(y * y);
    }
    let (na, nb) = (na.value(), nb.value());
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot.value() / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine_relation(table: &EmbeddingTable, disease_id: &str, symptom_id: &str) -> Result<f64, EmbeddingError> {
    let x = table
        .get(disease_id)
        .ok_or_else(|| EmbeddingError::MissingVector(disease_id.to_string()))?;
    let s = table
        .get(symptom_id)
        .ok_or_else(|| EmbeddingError::MissingVector(symptom_id.to_string()))?;
    cosine(x, s).ok_or_else(|| {
        let zero = if x.iter().all(|&c| c == 0.0) { disease_id } else { symptom_id };
        EmbeddingError::ZeroNormVector(zero.to_string())
    })
}

/// Top `k` vocabulary symptoms by cosine with `disease_id`.
///
/// Symptoms without a usable vector are omitted; every other symptom is
/// ranked, including those with cosine `<= 0`.
pub fn rank_by_embedding(
    table: &EmbeddingTable,
    disease_id: &str,
    vocab: &Vocabulary,
    k: usize,
) -> Result<Vec<Ranked>, EmbeddingError> {
    let x = table
        .get(disease_id)
        .ok_or_else(|| EmbeddingError::MissingVector(disease_id.to_string()))?;
    if x.iter().all(|&c| c == 0.0) {
        return Err(EmbeddingError::ZeroNormVector(disease_id.to_string()));
    }
    let mut ranked: Vec<Ranked> = vocab
        .symptoms()
        .filter_map(|(_, c)| {
            let s = table.get(&c.id)?;
            cosine(x, s).map(|score| Ranked {
                symptom_id: c.id.clone(),
                score,
            })
        })
        .collect();
    sort_ranking(&mut ranked);
    ranked.truncate(k);
    Ok(ranked)
}
