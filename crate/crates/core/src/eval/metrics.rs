use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::collection::DiseaseEntry;

/// nDCG gain applied to a grade.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `grade`
    #[default]
    Linear,
    /// `2^grade - 1`
    Exponential,
}

impl Gain {
    fn apply(self, grade: u8) -> f64 {
        match self {
            Gain::Linear => f64::from(grade),
            Gain::Exponential => f64::from(grade).exp2() - 1.0,
        }
    }
}

impl FromStr for Gain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Gain::Linear),
            "exponential" | "exp" | "exp2" => Ok(Gain::Exponential),
            other => Err(format!("unknown gain `{other}` (expected linear or exponential)")),
        }
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gain::Linear => "linear",
            Gain::Exponential => "exponential",
        })
    }
}

/// Denominator of P@k when fewer than `k` items were retrieved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionDenominator {
    /// Always `k`.
    #[default]
    Cutoff,
    /// `min(k, retrieved)`; an empty ranking scores 0.
    Retrieved,
}

impl FromStr for PrecisionDenominator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cutoff" | "k" => Ok(PrecisionDenominator::Cutoff),
            "retrieved" => Ok(PrecisionDenominator::Retrieved),
            other => Err(format!("unknown precision denominator `{other}` (expected cutoff or retrieved)")),
        }
    }
}

impl fmt::Display for PrecisionDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecisionDenominator::Cutoff => "cutoff",
            PrecisionDenominator::Retrieved => "retrieved",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub gain: Gain,
    pub precision_denominator: PrecisionDenominator,
}

/// Graded judgments of one disease, keyed by symptom id.
#[derive(Debug, Clone, Default)]
pub struct Judged<'a> {
    grades: HashMap<&'a str, u8>,
}

impl<'a> Judged<'a> {
    pub fn new(pairs: impl IntoIterator<Item = (&'a str, u8)>) -> Self {
        Judged {
            grades: pairs.into_iter().filter(|&(_, g)| g > 0).collect(),
        }
    }

    pub fn from_entry(entry: &'a DiseaseEntry) -> Self {
        Self::new(entry.judgments.iter().map(|j| (j.symptom_id.as_str(), j.grade.value())))
    }

    pub fn grade(&self, symptom_id: &str) -> u8 {
        self.grades.get(symptom_id).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    fn sorted_grades(&self) -> Vec<u8> {
        let mut g: Vec<u8> = self.grades.values().copied().collect();
        g.sort_unstable_by(|a, b| b.cmp(a));
        g
    }
}

fn relevant_in_top<S: AsRef<str>>(ranking: &[S], judged: &Judged, k: usize) -> usize {
    ranking.iter().take(k).filter(|s| judged.grade(s.as_ref()) > 0).count()
}

pub fn precision_at_k<S: AsRef<str>>(ranking: &[S], judged: &Judged, k: usize, denominator: PrecisionDenominator) -> f64 {
    assert!(k >= 1, "cutoff must be positive");
    let hits = relevant_in_top(ranking, judged, k) as f64;
    let denom = match denominator {
        PrecisionDenominator::Cutoff => k,
        PrecisionDenominator::Retrieved => k.min(ranking.len()),
    };
    if denom == 0 {
        0.0
    } else {
        hits / denom as f64
    }
}

pub fn recall_at_k<S: AsRef<str>>(ranking: &[S], judged: &Judged, k: usize) -> Result<f64, EvalError> {
    assert!(k >= 1, "cutoff must be positive");
    if judged.is_empty() {
        return Err(EvalError::NoJudgments);
    }
    Ok(relevant_in_top(ranking, judged, k) as f64 / judged.len() as f64)
}

fn dcg(gains: impl Iterator<Item = f64>) -> f64 {
    gains.enumerate().map(|(i, g)| g / ((i + 2) as f64).log2()).sum()
}

pub fn ndcg_at_k<S: AsRef<str>>(ranking: &[S], judged: &Judged, k: usize, gain: Gain) -> Result<f64, EvalError> {
    assert!(k >= 1, "cutoff must be positive");
    if judged.is_empty() {
        return Err(EvalError::NoJudgments);
    }
    let actual = dcg(ranking.iter().take(k).map(|s| gain.apply(judged.grade(s.as_ref()))));
    let ideal = dcg(judged.sorted_grades().into_iter().take(k).map(|g| gain.apply(g)));
    Ok(actual / ideal)
}
