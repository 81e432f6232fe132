//! Streaming reader for JSON-lines article corpora.
//!
//! One article per line: `{"id": str, "title": str, "keywords": [str], "text": str}`.
//! Blank lines are ignored. The reader is single pass and keeps only the set
//! of article ids seen so far.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: duplicate article id `{id}`")]
    DuplicateArticleId { line: usize, id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    #[serde(rename = "id")]
    pub article_id: String,
    pub title: String,
    pub keywords: Vec<String>,
    #[serde(rename = "text")]
    pub body: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub article_count: u64,
    pub with_keywords_count: u64,
    /// Records dropped under [`BadRecordPolicy::Skip`].
    pub skipped_records: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BadRecordPolicy {
    #[default]
    Abort,
    Skip,
}

pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    seen: HashSet<String>,
    stats: CorpusStats,
    policy: BadRecordPolicy,
    done: bool,
}

/// Opens a corpus file for streaming.
pub fn stream_corpus(path: impl AsRef<Path>, policy: BadRecordPolicy) -> Result<CorpusReader<BufReader<File>>, CorpusError> {
    let file = File::open(path)?;
    Ok(CorpusReader::new(BufReader::with_capacity(1 << 16, file), policy))
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, policy: BadRecordPolicy) -> Self {
        CorpusReader {
            lines: reader.lines(),
            line_no: 0,
            seen: HashSet::new(),
            stats: CorpusStats::default(),
            policy,
            done: false,
        }
    }

    /// Statistics over the records yielded so far; exact once the stream is exhausted.
    pub fn stats(&self) -> CorpusStats {
        self.stats
    }

    fn parse(&mut self, line: &str) -> Result<Article, CorpusError> {
        let article: Article = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
            line: self.line_no,
            reason: e.to_string(),
        })?;
        if !self.seen.insert(article.article_id.clone()) {
            return Err(CorpusError::DuplicateArticleId {
                line: self.line_no,
                id: article.article_id,
            });
        }
        Ok(article)
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<Article, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match self.parse(&line) {
                Ok(article) => {
                    self.stats.article_count += 1;
                    if !article.keywords.is_empty() {
                        self.stats.with_keywords_count += 1;
                    }
                    return Some(Ok(article));
                }
                Err(e) if self.policy == BadRecordPolicy::Skip => {
                    log::warn!("skipping record: {e}");
                    self.stats.skipped_records += 1;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        None
    }
}
