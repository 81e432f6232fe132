//! Graded disease-symptom collections.
//!
//! Each disease lists the symptoms judged for it with grade 1 (relevant) or
//! grade 2 (primary). Symptoms that are not listed have an implicit grade 0.
//!
//! ```json
//! {"diseases": [{"id": "D1", "name": "Appendicitis",
//!                "judgments": [{"symptom_id": "S1", "grade": 2}]}],
//!  "metadata": {"source": "..."}}
//! ```

mod agreement;
mod validate;
mod vote;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use agreement::{fleiss_kappa, fleiss_kappa_table, AgreementReport};
pub use validate::{validate_collection, CountExpectations, DiseaseCounts, Finding, ValidationReport};
pub use vote::{build_collection, majority_vote, read_annotations, read_pair_list, AnnotationRecord};

#[derive(Debug, thiserror::Error)]
pub enum CollectionError {
    #[error("malformed collection: {0}")]
    MalformedCollection(String),
    #[error("duplicate disease `{0}`")]
    DuplicateDisease(String),
    #[error("symptom `{symptom}` judged twice for disease `{disease}`")]
    DuplicateSymptomInEntry { disease: String, symptom: String },
    #[error("invalid grade {grade} for {disease}/{symptom} (expected 1 or 2)")]
    InvalidGrade {
        disease: String,
        symptom: String,
        grade: i64,
    },
    #[error("malformed annotations: {0}")]
    MalformedAnnotations(String),
    #[error("duplicate annotation by `{annotator}` for {disease}/{symptom}")]
    DuplicateAnnotation {
        disease: String,
        symptom: String,
        annotator: String,
    },
    #[error("disease `{disease}` has an even panel of {size} annotators")]
    EvenPanel { disease: String, size: usize },
    #[error("disease `{disease}` has a panel of {size}; majority voting needs at least 3")]
    PanelTooSmall { disease: String, size: usize },
    #[error("annotator `{annotator}` has no record for {disease}/{symptom}")]
    MissingAnnotator {
        disease: String,
        symptom: String,
        annotator: String,
    },
    #[error("pair {disease}/{symptom} has annotations but is not in the pair list")]
    UnlistedPair { disease: String, symptom: String },
    #[error("items are rated by different numbers of annotators ({0} and {1})")]
    UnequalPanelSizes(usize, usize),
    #[error("kappa needs at least two items, found {0}")]
    SingleItem(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Judgment grade. Unjudged symptoms are grade 0 and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    Relevant = 1,
    Primary = 2,
}

impl Grade {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Grade::Relevant),
            2 => Some(Grade::Primary),
            _ => None,
        }
    }
}

impl Serialize for Grade {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradedJudgment {
    pub symptom_id: String,
    pub grade: Grade,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiseaseEntry {
    pub id: String,
    pub name: String,
    pub judgments: Vec<GradedJudgment>,
}

impl DiseaseEntry {
    pub fn grade_of(&self, symptom_id: &str) -> u8 {
        self.judgments
            .iter()
            .find(|j| j.symptom_id == symptom_id)
            .map_or(0, |j| j.grade.value())
    }

    pub fn primary_count(&self) -> usize {
        self.judgments.iter().filter(|j| j.grade == Grade::Primary).count()
    }

    pub fn relevant_count(&self) -> usize {
        self.judgments.iter().filter(|j| j.grade == Grade::Relevant).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DsrCollection {
    pub diseases: Vec<DiseaseEntry>,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct RawCollection {
    diseases: Vec<RawEntry>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct RawEntry {
    id: String,
    name: String,
    judgments: Vec<RawJudgment>,
}

#[derive(Deserialize)]
struct RawJudgment {
    symptom_id: String,
    grade: i64,
}

impl DsrCollection {
    pub fn from_reader(reader: impl Read) -> Result<Self, CollectionError> {
        let raw: RawCollection =
            serde_json::from_reader(reader).map_err(|e| CollectionError::MalformedCollection(e.to_string()))?;
        let mut diseases = Vec::with_capacity(raw.diseases.len());
        for e in raw.diseases {
            let mut judgments = Vec::with_capacity(e.judgments.len());
            for j in e.judgments {
                let grade = Grade::from_value(j.grade).ok_or_else(|| CollectionError::InvalidGrade {
                    disease: e.id.clone(),
                    symptom: j.symptom_id.clone(),
                    grade: j.grade,
                })?;
                judgments.push(GradedJudgment {
                    symptom_id: j.symptom_id,
                    grade,
                });
            }
            diseases.push(DiseaseEntry {
                id: e.id,
                name: e.name,
                judgments,
            });
        }
        let c = DsrCollection {
            diseases,
            metadata: raw.metadata,
        };
        c.check()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CollectionError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }

    pub fn write_json(&self, mut w: impl Write) -> Result<(), CollectionError> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| CollectionError::MalformedCollection(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CollectionError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_json(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Structural invariants: unique diseases, non-empty and duplicate-free judgments.
    pub fn check(&self) -> Result<(), CollectionError> {
        let mut seen = HashSet::new();
        for e in &self.diseases {
            if e.id.is_empty() {
                return Err(CollectionError::MalformedCollection("empty disease id".into()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(CollectionError::DuplicateDisease(e.id.clone()));
            }
            if e.judgments.is_empty() {
                return Err(CollectionError::MalformedCollection(format!("disease `{}` has no judgments", e.id)));
            }
            let mut symptoms = HashSet::new();
            for j in &e.judgments {
                if !symptoms.insert(j.symptom_id.as_str()) {
                    return Err(CollectionError::DuplicateSymptomInEntry {
                        disease: e.id.clone(),
                        symptom: j.symptom_id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, disease_id: &str) -> Option<&DiseaseEntry> {
        self.diseases.iter().find(|e| e.id == disease_id)
    }

    pub fn judgment_count(&self) -> usize {
        self.diseases.iter().map(|e| e.judgments.len()).sum()
    }

    pub fn primary_count(&self) -> usize {
        self.diseases.iter().map(DiseaseEntry::primary_count).sum()
    }

    /// Number of diseases each symptom is judged for.
    pub fn symptom_frequencies(&self) -> BTreeMap<&str, usize> {
        let mut freq = BTreeMap::new();
        for e in &self.diseases {
            for j in &e.judgments {
                *freq.entry(j.symptom_id.as_str()).or_insert(0) += 1;
            }
        }
        freq
    }
}
