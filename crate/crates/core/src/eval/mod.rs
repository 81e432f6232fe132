//! Evaluation of ranked symptom lists against a graded collection.
//!
//! Run files are TSV, one ranked symptom per line:
//! `disease_id<TAB>rank<TAB>symptom_id<TAB>score`, ranks starting at 1.

mod metrics;
mod report;
mod significance;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::collection::DsrCollection;
use crate::miner::Ranked;

pub use metrics::{ndcg_at_k, precision_at_k, recall_at_k, Gain, Judged, MetricConfig, PrecisionDenominator};
pub use report::{build_report, Comparison, Metric, MetricReport, ReportConfig};
pub use significance::{paired_ttest, PairedTTest};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("disease has no judgments")]
    NoJudgments,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("paired t-test needs at least 2 pairs, found {0}")]
    TooFewPairs(usize),
    #[error("line {line}: malformed run row: {reason}")]
    MalformedRun { line: usize, reason: String },
    #[error("at most 26 runs can be compared, got {0}")]
    TooManyRuns(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One method's ranked symptom lists, keyed by disease id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedRun {
    pub label: String,
    pub rankings: BTreeMap<String, Vec<Ranked>>,
}

impl RankedRun {
    pub fn new(label: impl Into<String>) -> Self {
        RankedRun {
            label: label.into(),
            rankings: BTreeMap::new(),
        }
    }

    pub fn symptoms(&self, disease_id: &str) -> Vec<&str> {
        self.rankings
            .get(disease_id)
            .map(|r| r.iter().map(|x| x.symptom_id.as_str()).collect())
            .unwrap_or_default()
    }

    pub fn write_tsv(&self, mut w: impl Write) -> io::Result<()> {
        for (disease, ranking) in &self.rankings {
            for (i, r) in ranking.iter().enumerate() {
                writeln!(w, "{disease}\t{}\t{}\t{}", i + 1, r.symptom_id, r.score)?;
            }
        }
        Ok(())
    }

    pub fn from_reader(reader: impl BufRead, label: impl Into<String>) -> Result<Self, EvalError> {
        let mut rows: BTreeMap<String, Vec<(usize, Ranked)>> = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| EvalError::MalformedRun { line: line_no, reason };
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", f.len())));
            }
            let rank: usize = f[1].parse().map_err(|e| bad(format!("rank: {e}")))?;
            if rank == 0 {
                return Err(bad("ranks start at 1".into()));
            }
            let score: f64 = f[3].parse().map_err(|e| bad(format!("score: {e}")))?;
            rows.entry(f[0].to_string()).or_default().push((
                rank,
                Ranked {
                    symptom_id: f[2].to_string(),
                    score,
                },
            ));
        }
        let mut run = RankedRun::new(label);
        for (disease, mut items) in rows {
            items.sort_by_key(|(rank, _)| *rank);
            let mut ranks = HashSet::new();
            let mut symptoms = HashSet::new();
            for (rank, r) in &items {
                if !ranks.insert(*rank) || !symptoms.insert(r.symptom_id.clone()) {
                    return Err(EvalError::MalformedRun {
                        line: 0,
                        reason: format!("duplicate rank or symptom for disease `{disease}`"),
                    });
                }
            }
            run.rankings.insert(disease, items.into_iter().map(|(_, r)| r).collect());
        }
        Ok(run)
    }

    pub fn load(path: impl AsRef<Path>, label: impl Into<String>) -> Result<Self, EvalError> {
        Self::from_reader(BufReader::new(File::open(path)?), label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffScores {
    pub k: usize,
    pub ndcg: f64,
    pub precision: f64,
    pub recall: f64,
}

impl CutoffScores {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Ndcg => self.ndcg,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiseaseScores {
    pub disease_id: String,
    pub scores: Vec<CutoffScores>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEvaluation {
    pub label: String,
    /// In collection order.
    pub per_disease: Vec<DiseaseScores>,
    /// Arithmetic mean over every collection disease.
    pub macro_avg: Vec<CutoffScores>,
    /// Run diseases absent from the collection (ignored).
    pub ignored_diseases: Vec<String>,
}

impl RunEvaluation {
    /// Per-disease values of one metric at cutoff position `ki`.
    pub fn column(&self, metric: Metric, ki: usize) -> Vec<f64> {
        self.per_disease.iter().map(|d| d.scores[ki].get(metric)).collect()
    }
}

/// Scores `run` at every cutoff for every disease of `collection`.
///
/// Diseases the run does not cover are scored as empty rankings.
pub fn evaluate_run(
    run: &RankedRun,
    collection: &DsrCollection,
    cutoffs: &[usize],
    config: MetricConfig,
) -> Result<RunEvaluation, EvalError> {
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(EvalError::InvalidConfig("cutoffs must be positive and non-empty".into()));
    }
    let mut per_disease = Vec::with_capacity(collection.diseases.len());
    for entry in &collection.diseases {
        let judged = Judged::from_entry(entry);
        let ranking = run.symptoms(&entry.id);
        let scores = cutoffs
            .iter()
            .map(|&k| {
                Ok(CutoffScores {
                    k,
                    ndcg: ndcg_at_k(&ranking, &judged, k, config.gain)?,
                    precision: precision_at_k(&ranking, &judged, k, config.precision_denominator),
                    recall: recall_at_k(&ranking, &judged, k)?,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        per_disease.push(DiseaseScores {
            disease_id: entry.id.clone(),
            scores,
        });
    }
    let n = per_disease.len().max(1) as f64;
    let macro_avg = cutoffs
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let sum = |m: Metric| per_disease.iter().map(|d| d.scores[ki].get(m)).sum::<f64>() / n;
            CutoffScores {
                k,
                ndcg: sum(Metric::Ndcg),
                precision: sum(Metric::Precision),
                recall: sum(Metric::Recall),
            }
        })
        .collect();
    let ignored_diseases = run
        .rankings
        .keys()
        .filter(|d| collection.get(d).is_none())
        .cloned()
        .collect();
    Ok(RunEvaluation {
        label: run.label.clone(),
        per_disease,
        macro_avg,
        ignored_diseases,
    })
}
