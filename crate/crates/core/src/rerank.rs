//! Tag-guided retrieval.
//!
//! `score = alpha * cos(q, item) + (1 - alpha) * |q.tags ∩ item.tags| / max(1, |q.tags|)`
//!
//! Shared tags act as visible alignment indicators on top of embedding
//! similarity. Results are ordered by descending score, ties by ascending id.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semparse::caption_tags;
use crate::vocab::{TagId, TagVocabulary};

/// Default blend weight on cosine similarity.
pub const DEFAULT_ALPHA: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum RerankError {
    #[error("query embedding has zero norm")]
    ZeroQuery,
    #[error("item {0:?} embedding has zero norm")]
    ZeroItem(String),
    #[error("item {id:?} has dimension {found}, query has {expected}")]
    Dimension { id: String, expected: usize, found: usize },
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("keyword set is empty")]
    NoKeywords,
    #[error("non-finite embedding")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryItem {
    pub id: String,
    #[serde(rename = "vector")]
    pub embedding: Vec<f64>,
    pub tags: BTreeSet<TagId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub embedding: Vec<f64>,
    pub tags: BTreeSet<TagId>,
}

impl Query {
    /// Tags come from parsing `text` and resolving through `vocab`.
    pub fn from_text(text: &str, embedding: Vec<f64>, vocab: &TagVocabulary) -> Self {
        Self {
            embedding,
            tags: vocab.resolve_tags(&caption_tags(text)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub id: String,
    pub score: f64,
}

/// Ordered results: descending score, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub items: Vec<Ranked>,
}

impl RankedList {
    fn from_scored(mut items: Vec<Ranked>, top_k: usize) -> Self {
        items.sort_by(rank_order);
        items.truncate(top_k);
        Self { items }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|r| r.id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// TSV `rank id score`, rank from 1.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("rank\tid\tscore\n");
        for (i, r) in self.items.iter().enumerate() {
            s.push_str(&format!("{}\t{}\t{:.6}\n", i + 1, r.id, r.score));
        }
        s
    }
}

fn rank_order(a: &Ranked, b: &Ranked) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity; errors on zero norms or mismatched lengths.
pub fn cosine(query: &[f64], item: &GalleryItem) -> Result<f64, RerankError> {
    if item.embedding.len() != query.len() {
        return Err(RerankError::Dimension {
            id: item.id.clone(),
            expected: query.len(),
            found: item.embedding.len(),
        });
    }
    let qn = norm(query);
    if qn == 0.0 {
        return Err(RerankError::ZeroQuery);
    }
    let inorm = norm(&item.embedding);
    if inorm == 0.0 {
        return Err(RerankError::ZeroItem(item.id.clone()));
    }
    let dot: f64 = query.iter().zip(&item.embedding).map(|(a, b)| a * b).sum();
    if !dot.is_finite() {
        return Err(RerankError::NonFinite);
    }
    Ok((dot / (qn * inorm)).clamp(-1.0, 1.0))
}

fn overlap(query: &BTreeSet<TagId>, item: &BTreeSet<TagId>) -> usize {
    query.intersection(item).count()
}

fn check_alpha(alpha: f64) -> Result<(), RerankError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(RerankError::Alpha(alpha))
    }
}

pub fn combined_score(query: &Query, item: &GalleryItem, alpha: f64) -> Result<f64, RerankError> {
    check_alpha(alpha)?;
    let cos = cosine(&query.embedding, item)?;
    let frac = overlap(&query.tags, &item.tags) as f64 / query.tags.len().max(1) as f64;
    Ok(alpha * cos + (1.0 - alpha) * frac)
}

/// Top `top_k` gallery items by [`combined_score`].
pub fn rerank(query: &Query, gallery: &[GalleryItem], alpha: f64, top_k: usize) -> Result<RankedList, RerankError> {
    if top_k == 0 {
        return Err(RerankError::ZeroTopK);
    }
    check_alpha(alpha)?;
    let scored = gallery
        .par_iter()
        .map(|item| {
            combined_score(query, item, alpha).map(|score| Ranked {
                id: item.id.clone(),
                score,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RankedList::from_scored(scored, top_k))
}

/// Rank by the fraction of `keywords` each item carries.
pub fn keyword_search(
    keywords: &BTreeSet<TagId>,
    gallery: &[GalleryItem],
    top_k: usize,
) -> Result<RankedList, RerankError> {
    if keywords.is_empty() {
        return Err(RerankError::NoKeywords);
    }
    if top_k == 0 {
        return Err(RerankError::ZeroTopK);
    }
    let k = keywords.len() as f64;
    let scored = gallery
        .iter()
        .map(|item| Ranked {
            id: item.id.clone(),
            score: overlap(keywords, &item.tags) as f64 / k,
        })
        .collect();
    Ok(RankedList::from_scored(scored, top_k))
}
