//! Disease and symptom vocabulary.
//!
//! A vocabulary fixes the universe of diseases and symptoms that every other
//! stage works with. Concepts are stored sorted by id, so a [`ConceptIdx`] is
//! stable for a given file and iteration order is deterministic.
//!
//! File format (UTF-8, tab separated, `#` starts a comment line):
//!
//! ```text
//! id<TAB>kind<TAB>canonical_name<TAB>synonym|synonym|...
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use unicode_normalization::UnicodeNormalization;

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: duplicate concept id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: empty synonym for concept `{id}`")]
    EmptySynonym { line: usize, id: String },
    #[error("line {line}: unknown concept kind `{kind}` (expected disease or symptom)")]
    UnknownKind { line: usize, kind: String },
    #[error("synonym `{synonym}` is shared by concepts `{first}` and `{second}`")]
    DuplicateSynonym {
        synonym: String,
        first: String,
        second: String,
    },
    #[error("vocabulary contains no concepts")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptKind {
    Disease,
    Symptom,
}

impl ConceptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConceptKind::Disease => "disease",
            ConceptKind::Symptom => "symptom",
        }
    }
}

impl fmt::Display for ConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disease" => Ok(ConceptKind::Disease),
            "symptom" => Ok(ConceptKind::Symptom),
            other => Err(other.to_string()),
        }
    }
}

/// Dense index of a concept inside one [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptIdx(pub u32);

impl ConceptIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: String,
    pub kind: ConceptKind,
    /// Name as written in the source file, used for display.
    pub name: String,
    pub canonical_name: String,
    /// Normalized, sorted, deduplicated; always contains `canonical_name`.
    pub synonyms: Vec<String>,
}

impl Concept {
    /// Builds a concept, normalizing the name and synonyms.
    ///
    /// Returns `None` when the name or any synonym normalizes to the empty
    /// string.
    pub fn new<I, S>(id: impl Into<String>, kind: ConceptKind, name: impl Into<String>, synonyms: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let canonical_name = normalize_term(&name);
        if canonical_name.is_empty() {
            return None;
        }
        let mut all = vec![canonical_name.clone()];
        for syn in synonyms {
            let norm = normalize_term(syn.as_ref());
            if norm.is_empty() {
                return None;
            }
            all.push(norm);
        }
        all.sort();
        all.dedup();
        Some(Concept {
            id: id.into(),
            kind,
            name,
            canonical_name,
            synonyms: all,
        })
    }

    pub fn is_disease(&self) -> bool {
        self.kind == ConceptKind::Disease
    }

    pub fn is_symptom(&self) -> bool {
        self.kind == ConceptKind::Symptom
    }
}

/// Immutable set of concepts with id and synonym lookup.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    concepts: Vec<Concept>,
    by_id: HashMap<String, ConceptIdx>,
    by_synonym: HashMap<String, ConceptIdx>,
    disease_count: usize,
    symptom_count: usize,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.concepts == other.concepts
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    pub fn from_concepts(mut concepts: Vec<Concept>) -> Result<Self, VocabError> {
        if concepts.is_empty() {
            return Err(VocabError::Empty);
        }
        concepts.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in concepts.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(VocabError::DuplicateId {
                    line: 0,
                    id: pair[1].id.clone(),
                });
            }
        }
        Self::index(concepts)
    }

    fn index(concepts: Vec<Concept>) -> Result<Self, VocabError> {
        let mut by_id = HashMap::with_capacity(concepts.len());
        let mut by_synonym = HashMap::new();
        let (mut disease_count, mut symptom_count) = (0, 0);
        for (i, c) in concepts.iter().enumerate() {
            let idx = ConceptIdx(u32::try_from(i).expect("more than u32::MAX concepts"));
            by_id.insert(c.id.clone(), idx);
            match c.kind {
                ConceptKind::Disease => disease_count += 1,
                ConceptKind::Symptom => symptom_count += 1,
            }
            for syn in &c.synonyms {
                if let Some(prev) = by_synonym.insert(syn.clone(), idx) {
                    return Err(VocabError::DuplicateSynonym {
                        synonym: syn.clone(),
                        first: concepts[prev.get()].id.clone(),
                        second: c.id.clone(),
                    });
                }
            }
        }
        Ok(Vocabulary {
            concepts,
            by_id,
            by_synonym,
            disease_count,
            symptom_count,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::new(file))
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, VocabError> {
        let mut concepts = Vec::new();
        let mut lines_of: HashMap<String, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let concept = parse_row(trimmed, line_no)?;
            if lines_of.insert(concept.id.clone(), line_no).is_some() {
                return Err(VocabError::DuplicateId {
                    line: line_no,
                    id: concept.id,
                });
            }
            concepts.push(concept);
        }
        if concepts.is_empty() {
            return Err(VocabError::Empty);
        }
        concepts.sort_by(|a, b| a.id.cmp(&b.id));
        Self::index(concepts)
    }

    pub fn parse_str(s: &str) -> Result<Self, VocabError> {
        Self::from_reader(s.as_bytes())
    }

    /// Writes the vocabulary back in the TSV format it was loaded from.
    pub fn write_tsv(&self, mut w: impl Write) -> io::Result<()> {
        for c in &self.concepts {
            writeln!(w, "{}\t{}\t{}\t{}", c.id, c.kind, c.name, c.synonyms.join("|"))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn disease_count(&self) -> usize {
        self.disease_count
    }

    pub fn symptom_count(&self) -> usize {
        self.symptom_count
    }

    pub fn concept(&self, idx: ConceptIdx) -> Option<&Concept> {
        self.concepts.get(idx.get())
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn index_of(&self, id: &str) -> Option<ConceptIdx> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&Concept> {
        self.index_of(id).map(|i| &self.concepts[i.get()])
    }

    /// Concept owning the normalized form of `surface`, if any.
    pub fn lookup(&self, surface: &str) -> Option<&Concept> {
        self.lookup_idx(surface).map(|i| &self.concepts[i.get()])
    }

    pub fn lookup_idx(&self, surface: &str) -> Option<ConceptIdx> {
        self.by_synonym.get(&normalize_term(surface)).copied()
    }

    /// Resolves a concept by exact id first, then by synonym.
    pub fn resolve(&self, id_or_name: &str) -> Option<&Concept> {
        self.get(id_or_name).or_else(|| self.lookup(id_or_name))
    }

    pub fn diseases(&self) -> impl Iterator<Item = (ConceptIdx, &Concept)> {
        self.iter().filter(|(_, c)| c.is_disease())
    }

    pub fn symptoms(&self) -> impl Iterator<Item = (ConceptIdx, &Concept)> {
        self.iter().filter(|(_, c)| c.is_symptom())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConceptIdx, &Concept)> {
        self.concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (ConceptIdx(i as u32), c))
    }
}

fn parse_row(line: &str, line_no: usize) -> Result<Concept, VocabError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 3 || fields.len() > 4 {
        return Err(VocabError::MalformedRow {
            line: line_no,
            reason: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
        });
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return Err(VocabError::MalformedRow {
            line: line_no,
            reason: "empty id".into(),
        });
    }
    let kind = fields[1]
        .parse::<ConceptKind>()
        .map_err(|kind| VocabError::UnknownKind { line: line_no, kind })?;
    let name = fields[2].trim();
    let synonyms: Vec<&str> = match fields.get(3) {
        Some(s) if !s.trim().is_empty() => s.split('|').collect(),
        _ => Vec::new(),
    };
    Concept::new(id, kind, name, synonyms).ok_or_else(|| VocabError::EmptySynonym {
        line: line_no,
        id: id.to_string(),
    })
}

/// Normalizes a surface string for dictionary matching.
///
/// Lowercases (after NFC), keeps hyphens that sit between two alphanumeric
/// characters, turns every other non-alphanumeric character into a
/// separator, and collapses separators into single spaces.
pub fn normalize_term(raw: &str) -> String {
    let lowered: String = raw.nfc().flat_map(char::to_lowercase).collect();
    let chars: Vec<char> = lowered.nfc().collect();
    let mut out = String::with_capacity(chars.len());
    let mut pending_space = false;
    for (i, &c) in chars.iter().enumerate() {
        let keep = c.is_alphanumeric()
            || (c == '-'
                && i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()));
        if keep {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}
