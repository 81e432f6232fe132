use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{CollectionError, DiseaseEntry, DsrCollection};
use crate::vocab::{normalize_term, Vocabulary};

/// Expected per-disease counts: grade-1 judgments and grade-2 judgments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiseaseCounts {
    pub relevant: usize,
    pub primary: usize,
}

/// Optional count expectations checked against a collection.
///
/// Disease keys in `per_disease` match a disease id, a disease name (after
/// normalization), or a vocabulary synonym. Symptom keys in
/// `symptom_frequency` match a symptom id or a vocabulary synonym.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountExpectations {
    #[serde(default)]
    pub diseases: Option<usize>,
    #[serde(default)]
    pub judgments: Option<usize>,
    #[serde(default)]
    pub primaries: Option<usize>,
    #[serde(default)]
    pub per_disease: BTreeMap<String, DiseaseCounts>,
    #[serde(default)]
    pub symptom_frequency: BTreeMap<String, usize>,
}

impl CountExpectations {
    pub fn from_reader(reader: impl Read) -> Result<Self, CollectionError> {
        serde_json::from_reader(reader).map_err(|e| CollectionError::MalformedCollection(format!("expectations: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FindingKind {
    Structure,
    Expectation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub diseases: usize,
    pub judgments: usize,
    pub primaries: usize,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.findings.is_empty()
    }

    fn structure(&mut self, message: String) {
        self.findings.push(Finding {
            kind: FindingKind::Structure,
            message,
        });
    }

    fn expectation(&mut self, message: String) {
        self.findings.push(Finding {
            kind: FindingKind::Expectation,
            message,
        });
    }
}

fn find_disease<'c>(c: &'c DsrCollection, key: &str, vocab: Option<&Vocabulary>) -> Option<&'c DiseaseEntry> {
    c.get(key)
        .or_else(|| {
            let norm = normalize_term(key);
            c.diseases.iter().find(|e| normalize_term(&e.name) == norm)
        })
        .or_else(|| vocab.and_then(|v| v.lookup(key)).and_then(|concept| c.get(&concept.id)))
}

pub fn validate_collection(
    c: &DsrCollection,
    expectations: Option<&CountExpectations>,
    vocab: Option<&Vocabulary>,
) -> ValidationReport {
    let mut report = ValidationReport {
        diseases: c.diseases.len(),
        judgments: c.judgment_count(),
        primaries: c.primary_count(),
        findings: Vec::new(),
    };

    let mut seen = HashSet::new();
    for e in &c.diseases {
        if !seen.insert(e.id.as_str()) {
            report.structure(format!("duplicate disease `{}`", e.id));
        }
        if e.judgments.is_empty() {
            report.structure(format!("disease `{}` has no judgments", e.id));
        }
        let mut symptoms = HashSet::new();
        for j in &e.judgments {
            if !symptoms.insert(j.symptom_id.as_str()) {
                report.structure(format!("symptom `{}` judged twice for `{}`", j.symptom_id, e.id));
            }
        }
        if let Some(v) = vocab {
            match v.get(&e.id) {
                Some(concept) if concept.is_disease() => {}
                Some(_) => report.structure(format!("`{}` is not a disease in the vocabulary", e.id)),
                None => report.structure(format!("disease `{}` is not in the vocabulary", e.id)),
            }
            for j in &e.judgments {
                if !v.get(&j.symptom_id).is_some_and(|s| s.is_symptom()) {
                    report.structure(format!("`{}` (judged for `{}`) is not a vocabulary symptom", j.symptom_id, e.id));
                }
            }
        }
    }

    let Some(exp) = expectations else {
        return report;
    };
    let mut check_total = |what: &str, expected: Option<usize>, actual: usize| {
        if let Some(expected) = expected.filter(|&e| e != actual) {
            report.expectation(format!("{what}: expected {expected}, found {actual}"));
        }
    };
    check_total("diseases", exp.diseases, c.diseases.len());
    check_total("judgments", exp.judgments, c.judgment_count());
    check_total("primaries", exp.primaries, c.primary_count());

    for (key, counts) in &exp.per_disease {
        match find_disease(c, key, vocab) {
            None => report.expectation(format!("disease `{key}` not found")),
            Some(e) => {
                let actual = DiseaseCounts {
                    relevant: e.relevant_count(),
                    primary: e.primary_count(),
                };
                if actual != *counts {
                    report.expectation(format!(
                        "`{key}`: expected {} relevant / {} primary, found {} / {}",
                        counts.relevant, counts.primary, actual.relevant, actual.primary
                    ));
                }
            }
        }
    }

    let freq = c.symptom_frequencies();
    for (key, &expected) in &exp.symptom_frequency {
        let actual = freq.get(key.as_str()).copied().or_else(|| {
            vocab
                .and_then(|v| v.lookup(key))
                .map(|concept| freq.get(concept.id.as_str()).copied().unwrap_or(0))
        });
        match actual {
            None => report.expectation(format!("symptom `{key}` not found")),
            Some(n) if n != expected => {
                report.expectation(format!("symptom `{key}`: expected in {expected} diseases, found {n}"))
            }
            Some(_) => {}
        }
    }
    report
}
