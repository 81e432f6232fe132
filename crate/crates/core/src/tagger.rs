//! Dictionary concept tagging over article sections.
//!
//! Text is normalized with [`normalize_term`] and scanned with an
//! Aho-Corasick automaton over every synonym in the vocabulary. Only matches
//! flanked by the string edge or a non-alphanumeric character are kept, and
//! among those the leftmost-longest match consumes its span.

use aho_corasick::{AhoCorasick, AhoCorasickBuilder, MatchKind};
use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::vocab::{normalize_term, ConceptIdx, Vocabulary};

/// A sorted, duplicate-free set of concepts.
pub type ConceptSet = Vec<ConceptIdx>;

pub struct ConceptMatcher<'v> {
    vocab: &'v Vocabulary,
    automaton: AhoCorasick,
    /// Concept owning each automaton pattern.
    owners: Vec<ConceptIdx>,
}

impl<'v> ConceptMatcher<'v> {
    pub fn new(vocab: &'v Vocabulary) -> Self {
        let mut patterns = Vec::new();
        let mut owners = Vec::new();
        for (idx, concept) in vocab.iter() {
            for syn in &concept.synonyms {
                patterns.push(syn.as_str());
                owners.push(idx);
            }
        }
        let automaton = AhoCorasickBuilder::new()
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .expect("vocabulary synonyms exceed automaton limits");
        ConceptMatcher {
            vocab,
            automaton,
            owners,
        }
    }

    pub fn vocabulary(&self) -> &'v Vocabulary {
        self.vocab
    }

    /// Concepts mentioned anywhere in `text`.
    pub fn tag_text(&self, text: &str) -> ConceptSet {
        self.tag_normalized(&normalize_term(text))
    }

    /// Like [`tag_text`](Self::tag_text) for input that is already normalized.
    pub fn tag_normalized(&self, text: &str) -> ConceptSet {
        let mut candidates: Vec<(usize, usize, ConceptIdx)> = self
            .automaton
            .find_overlapping_iter(text)
            .filter(|m| on_word_boundaries(text, m.start(), m.end()))
            .map(|m| (m.start(), m.end(), self.owners[m.pattern().as_usize()]))
            .collect();
        // leftmost first, longest first at equal start
        candidates.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));

        let mut found = Vec::new();
        let mut cursor = 0;
        for (start, end, owner) in candidates {
            if start >= cursor {
                found.push(owner);
                cursor = end;
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    }

    pub fn tag_article(&self, article: &Article) -> SectionTags {
        let mut keywords: ConceptSet = article
            .keywords
            .iter()
            .filter_map(|kw| self.vocab.lookup_idx(strip_qualifier(kw)))
            .collect();
        keywords.sort_unstable();
        keywords.dedup();
        SectionTags {
            article_id: article.article_id.clone(),
            title: self.tag_text(&article.title),
            keywords,
            body: self.tag_text(&article.body),
        }
    }
}

/// Drops a `descriptor/qualifier` suffix from a keyword.
pub fn strip_qualifier(keyword: &str) -> &str {
    match keyword.find('/') {
        Some(pos) => &keyword[..pos],
        None => keyword,
    }
}

fn on_word_boundaries(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
}

/// Concepts present in each section of one article.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SectionTags {
    pub article_id: String,
    pub title: ConceptSet,
    pub keywords: ConceptSet,
    pub body: ConceptSet,
}

/// Serialized form of [`SectionTags`] with concept ids instead of indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRecord {
    pub id: String,
    pub title: Vec<String>,
    pub keywords: Vec<String>,
    pub body: Vec<String>,
}

impl SectionTags {
    pub fn to_record(&self, vocab: &Vocabulary) -> TagRecord {
        let ids = |set: &ConceptSet| -> Vec<String> {
            set.iter()
                .filter_map(|&i| vocab.concept(i).map(|c| c.id.clone()))
                .collect()
        };
        TagRecord {
            id: self.article_id.clone(),
            title: ids(&self.title),
            keywords: ids(&self.keywords),
            body: ids(&self.body),
        }
    }

    /// Resolves a record against `vocab`; the unknown id is returned on failure.
    pub fn from_record(record: &TagRecord, vocab: &Vocabulary) -> Result<Self, String> {
        let resolve = |ids: &[String]| -> Result<ConceptSet, String> {
            let mut set = ids
                .iter()
                .map(|id| vocab.index_of(id).ok_or_else(|| id.clone()))
                .collect::<Result<ConceptSet, _>>()?;
            set.sort_unstable();
            set.dedup();
            Ok(set)
        };
        Ok(SectionTags {
            article_id: record.id.clone(),
            title: resolve(&record.title)?,
            keywords: resolve(&record.keywords)?,
            body: resolve(&record.body)?,
        })
    }
}
