//! Batched, parallel tag-and-count over an article stream.
//!
//! Articles are read in batches; each batch is tagged on the current rayon
//! pool and counted into one builder per regime. Builders are merged by
//! summation, so the result does not depend on the number of workers.

use rayon::prelude::*;

use crate::corpus::{Article, CorpusError};
use crate::miner::{CooccurrenceIndex, IndexBuilder, MinerError, Regime};
use crate::tagger::{ConceptMatcher, SectionTags};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Miner(#[from] MinerError),
}

pub const DEFAULT_BATCH: usize = 4096;

/// Tags a batch in parallel, preserving input order.
pub fn tag_batch(matcher: &ConceptMatcher<'_>, articles: &[Article]) -> Vec<SectionTags> {
    articles.par_iter().map(|a| matcher.tag_article(a)).collect()
}

fn count_batch<'v>(
    tags: &[SectionTags],
    empty: &[IndexBuilder<'v>],
) -> Result<Vec<IndexBuilder<'v>>, MinerError> {
    tags.par_chunks(256)
        .map(|chunk| {
            let mut builders = empty.to_vec();
            for t in chunk {
                for b in &mut builders {
                    b.observe(t)?;
                }
            }
            Ok(builders)
        })
        .try_reduce(
            || empty.to_vec(),
            |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
        )
}

/// Tags and counts every article, returning one index per requested regime
/// in the same order. `on_batch` sees each tagged batch (for debug output).
pub fn mine_articles<'v, I>(
    articles: I,
    matcher: &ConceptMatcher<'v>,
    regimes: &[Regime],
    batch_size: usize,
    mut on_batch: impl FnMut(&[SectionTags]),
) -> Result<Vec<CooccurrenceIndex>, PipelineError>
where
    I: IntoIterator<Item = Result<Article, CorpusError>>,
{
    let vocab = matcher.vocabulary();
    let empty = regimes
        .iter()
        .map(|&r| IndexBuilder::new(vocab, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mut totals = empty.clone();
    let mut batch = Vec::with_capacity(batch_size.max(1));
    let mut flush = |batch: &mut Vec<Article>, totals: &mut Vec<IndexBuilder<'v>>| -> Result<(), MinerError> {
        let tags = tag_batch(matcher, batch);
        batch.clear();
        on_batch(&tags);
        let counted = count_batch(&tags, &empty)?;
        *totals = std::mem::take(totals).into_iter().zip(counted).map(|(x, y)| x.merge(y)).collect();
        Ok(())
    };
    for article in articles {
        batch.push(article?);
        if batch.len() >= batch_size.max(1) {
            flush(&mut batch, &mut totals)?;
        }
    }
    if !batch.is_empty() {
        flush(&mut batch, &mut totals)?;
    }
    Ok(totals.into_iter().map(IndexBuilder::finish).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::count_cooccurrence;
    use crate::vocab::Vocabulary;

    fn article(id: &str, title: &str, keywords: &[&str], body: &str) -> Article {
        Article {
            article_id: id.into(),
            title: title.into(),
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            body: body.into(),
        }
    }

    #[test]
    fn batched_matches_sequential() {
        let vocab = Vocabulary::parse_str(
            "D1\tdisease\tinfluenza\nD2\tdisease\tmeasles\nS1\tsymptom\tfever\nS2\tsymptom\tcough\nS3\tsymptom\trash\n",
        )
        .unwrap();
        let matcher = ConceptMatcher::new(&vocab);
        let articles: Vec<Article> = (0..37)
            .map(|i| {
                let kw: &[&str] = match i % 3 {
                    0 => &["Influenza", "Fever"],
                    1 => &["Measles/complications", "Rash", "Fever"],
                    _ => &[],
                };
                article(&format!("a{i}"), if i % 4 == 0 { "measles outbreak" } else { "" }, kw, "fever and cough")
            })
            .collect();
        let tags: Vec<SectionTags> = articles.iter().map(|a| matcher.tag_article(a)).collect();
        let regimes = [Regime::Keyword, Regime::FullText];
        for batch in [1, 5, 100] {
            let got = mine_articles(articles.iter().cloned().map(Ok), &matcher, &regimes, batch, |_| {}).unwrap();
            for (idx, &r) in got.iter().zip(&regimes) {
                assert_eq!(idx, &count_cooccurrence(&tags, &vocab, r).unwrap());
            }
        }
    }
}
