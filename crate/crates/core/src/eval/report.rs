use std::fmt::{self, Write as _};

use serde::Serialize;

use super::{evaluate_run, paired_ttest, EvalError, Gain, MetricConfig, PrecisionDenominator, RankedRun, RunEvaluation};
use crate::collection::DsrCollection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ndcg,
    Precision,
    Recall,
}

impl Metric {
    /// Column order of the comparison table.
    pub const ALL: [Metric; 3] = [Metric::Ndcg, Metric::Precision, Metric::Recall];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Ndcg => "nDCG",
            Metric::Precision => "P",
            Metric::Recall => "R",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Settings a report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub cutoffs: Vec<usize>,
    pub alpha: f64,
    pub gain: Gain,
    pub precision_denominator: PrecisionDenominator,
    pub test: &'static str,
}

impl ReportConfig {
    pub fn new(cutoffs: Vec<usize>, alpha: f64, metrics: MetricConfig) -> Self {
        ReportConfig {
            cutoffs,
            alpha,
            gain: metrics.gain,
            precision_denominator: metrics.precision_denominator,
            test: "two-sided paired t-test",
        }
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            gain: self.gain,
            precision_denominator: self.precision_denominator,
        }
    }
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self::new(vec![5, 10], 0.01, MetricConfig::default())
    }
}

/// Paired t-test of run `a` against run `b` on one metric column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub metric: Metric,
    pub k: usize,
    pub a: String,
    pub b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub t: f64,
    pub p_value: f64,
    pub degenerate: bool,
    /// Label of the significantly better run, if any.
    pub better: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledRun {
    pub letter: char,
    #[serde(flatten)]
    pub evaluation: RunEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub config: ReportConfig,
    pub diseases: usize,
    pub runs: Vec<LabelledRun>,
    pub comparisons: Vec<Comparison>,
}

/// Evaluates every run and compares each pair of runs on every metric and
/// cutoff. Runs are lettered `a`, `b`, ... in the given order.
pub fn build_report(runs: &[RankedRun], collection: &DsrCollection, config: ReportConfig) -> Result<MetricReport, EvalError> {
    if runs.len() > 26 {
        return Err(EvalError::TooManyRuns(runs.len()));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(EvalError::InvalidConfig(format!("alpha must be in (0, 1), got {}", config.alpha)));
    }
    let evaluations = runs
        .iter()
        .map(|r| evaluate_run(r, collection, &config.cutoffs, config.metric_config()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut comparisons = Vec::new();
    if collection.diseases.len() >= 2 {
        for (ki, &k) in config.cutoffs.iter().enumerate() {
            for metric in Metric::ALL {
                for i in 0..evaluations.len() {
                    for j in i + 1..evaluations.len() {
                        let (ea, eb) = (&evaluations[i], &evaluations[j]);
                        let test = paired_ttest(&ea.column(metric, ki), &eb.column(metric, ki))?;
                        let (mean_a, mean_b) = (ea.macro_avg[ki].get(metric), eb.macro_avg[ki].get(metric));
                        let better = (test.p_value < config.alpha && mean_a != mean_b)
                            .then(|| if mean_a > mean_b { ea.label.clone() } else { eb.label.clone() });
                        comparisons.push(Comparison {
                            metric,
                            k,
                            a: ea.label.clone(),
                            b: eb.label.clone(),
                            mean_a,
                            mean_b,
                            t: test.t,
                            p_value: test.p_value,
                            degenerate: test.degenerate,
                            better,
                        });
                    }
                }
            }
        }
    }

    Ok(MetricReport {
        config,
        diseases: collection.diseases.len(),
        runs: evaluations
            .into_iter()
            .zip('a'..='z')
            .map(|(evaluation, letter)| LabelledRun { letter, evaluation })
            .collect(),
        comparisons,
    })
}

impl MetricReport {
    /// Letters of the runs that `label` beats significantly on `metric@k`.
    pub fn marks(&self, label: &str, metric: Metric, k: usize) -> String {
        let mut letters: Vec<char> = self
            .comparisons
            .iter()
            .filter(|c| c.metric == metric && c.k == k && c.better.as_deref() == Some(label))
            .filter_map(|c| {
                let loser = if c.a == label { &c.b } else { &c.a };
                self.runs.iter().find(|r| &r.evaluation.label == loser).map(|r| r.letter)
            })
            .collect();
        letters.sort_unstable();
        letters.into_iter().collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Table of macro means, one row per run, with significance superscripts.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Method |");
        for &k in &self.config.cutoffs {
            for m in Metric::ALL {
                let _ = write!(out, " {m}@{k} |");
            }
        }
        out.push_str("\n|---|");
        for _ in 0..self.config.cutoffs.len() * Metric::ALL.len() {
            out.push_str("---:|");
        }
        out.push('\n');
        for run in &self.runs {
            let e = &run.evaluation;
            let _ = write!(out, "| ({}) {} |", run.letter, e.label);
            for (ki, &k) in self.config.cutoffs.iter().enumerate() {
                for m in Metric::ALL {
                    let marks = self.marks(&e.label, m, k);
                    let _ = write!(out, " {:.4}", e.macro_avg[ki].get(m));
                    if !marks.is_empty() {
                        let _ = write!(out, "<sup>{marks}</sup>");
                    }
                    out.push_str(" |");
                }
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nMacro averages over {} diseases. A superscript letter marks a significant improvement over that method ({}, p < {}).",
            self.diseases, self.config.test, self.config.alpha
        );
        out
    }
}
