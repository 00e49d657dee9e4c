//! Tagging and retrieval metrics.
//!
//! Average precision is the direct (uninterpolated) variant: images are
//! ranked by descending score with ties kept in index order, and AP is the
//! mean of precision@k over the ranks k of the positives.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CaptionRecord, ImageTagSet, TagAggregator};
use crate::semparse::caption_tags;
use crate::vocab::{TagId, TagVocabulary};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no category has a positive example; mAP is undefined")]
    NoDefinedCategory,
    #[error("image {image_id:?} has {found} scores, expected {expected}")]
    ScoreLength {
        image_id: String,
        expected: usize,
        found: usize,
    },
    #[error("image {image_id:?} has truth id {id} outside {classes} categories")]
    TruthRange {
        image_id: String,
        id: u32,
        classes: usize,
    },
    #[error("duplicate prediction for image {0:?}")]
    DuplicateImage(String),
    #[error("no truth for image {0:?}")]
    MissingTruth(String),
    #[error("thresholds must be strictly increasing")]
    Grid,
    #[error("bad sweep spec {0:?}: expected START:STOP:STEP with STEP > 0")]
    SweepSpec(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{0} queries ranked but {1} truth sets given")]
    QueryCount(usize, usize),
}

/// Per-image scores with aligned ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPredictions {
    classes: usize,
    image_ids: Vec<String>,
    scores: Vec<Vec<f64>>,
    truth: Vec<Vec<bool>>,
}

/// One line of a predictions file: either a score vector or a binary tag
/// list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictionRecord {
    Scores { image_id: String, scores: Vec<f64> },
    Tags { image_id: String, tags: Vec<TagId> },
}

impl PredictionRecord {
    pub fn image_id(&self) -> &str {
        match self {
            PredictionRecord::Scores { image_id, .. } | PredictionRecord::Tags { image_id, .. } => image_id,
        }
    }

    /// Dense score vector; binary predictions score 1 for listed ids.
    pub fn dense(&self, classes: usize) -> Result<Vec<f64>, EvalError> {
        match self {
            PredictionRecord::Scores { image_id, scores } => {
                if scores.len() != classes {
                    return Err(EvalError::ScoreLength {
                        image_id: image_id.clone(),
                        expected: classes,
                        found: scores.len(),
                    });
                }
                Ok(scores.clone())
            }
            PredictionRecord::Tags { image_id, tags } => {
                let mut v = vec![0.0; classes];
                for t in tags {
                    *v.get_mut(t.index()).ok_or_else(|| EvalError::TruthRange {
                        image_id: image_id.clone(),
                        id: t.0,
                        classes,
                    })? = 1.0;
                }
                Ok(v)
            }
        }
    }
}

impl ScoredPredictions {
    /// Build from `(image_id, scores)` rows and truth sets. Every scored
    /// image must have a truth entry; truth for unscored images is ignored.
    pub fn new(
        classes: usize,
        rows: impl IntoIterator<Item = (String, Vec<f64>)>,
        truth: &[ImageTagSet],
    ) -> Result<Self, EvalError> {
        let by_id: HashMap<&str, &ImageTagSet> = truth.iter().map(|t| (t.image_id.as_str(), t)).collect();
        let mut seen = BTreeSet::new();
        let mut out = Self {
            classes,
            image_ids: Vec::new(),
            scores: Vec::new(),
            truth: Vec::new(),
        };
        for (image_id, s) in rows {
            if s.len() != classes {
                return Err(EvalError::ScoreLength {
                    image_id,
                    expected: classes,
                    found: s.len(),
                });
            }
            if !seen.insert(image_id.clone()) {
                return Err(EvalError::DuplicateImage(image_id));
            }
            let t = by_id
                .get(image_id.as_str())
                .ok_or_else(|| EvalError::MissingTruth(image_id.clone()))?;
            let mut row = vec![false; classes];
            for id in &t.tags {
                *row.get_mut(id.index()).ok_or_else(|| EvalError::TruthRange {
                    image_id: image_id.clone(),
                    id: id.0,
                    classes,
                })? = true;
            }
            out.image_ids.push(image_id);
            out.scores.push(s);
            out.truth.push(row);
        }
        Ok(out)
    }

    /// From dense matrices; rows are images.
    pub fn from_dense(scores: Vec<Vec<f64>>, truth: Vec<Vec<bool>>) -> Result<Self, EvalError> {
        let classes = scores.first().map_or(0, Vec::len);
        for (i, (s, t)) in scores.iter().zip(&truth).enumerate() {
            if s.len() != classes || t.len() != classes {
                return Err(EvalError::ScoreLength {
                    image_id: i.to_string(),
                    expected: classes,
                    found: s.len().min(t.len()),
                });
            }
        }
        if scores.len() != truth.len() {
            return Err(EvalError::MissingTruth(scores.len().min(truth.len()).to_string()));
        }
        Ok(Self {
            classes,
            image_ids: (0..scores.len()).map(|i| i.to_string()).collect(),
            scores,
            truth,
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    fn column(&self, c: usize) -> (Vec<f64>, Vec<bool>) {
        (
            self.scores.iter().map(|r| r[c]).collect(),
            self.truth.iter().map(|r| r[c]).collect(),
        )
    }
}

/// Direct average precision, or `None` when there is no positive.
pub fn average_precision(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let n_pos = truth.iter().filter(|&&t| t).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if truth[i] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Some(sum / n_pos as f64)
}

/// Per-category AP; `None` for categories without positives.
pub fn per_category_ap(preds: &ScoredPredictions) -> Vec<Option<f64>> {
    (0..preds.classes)
        .into_par_iter()
        .map(|c| {
            let (s, t) = preds.column(c);
            average_precision(&s, &t)
        })
        .collect()
}

/// Unweighted mean AP over categories with at least one positive,
/// optionally restricted to `subset`.
pub fn mean_ap(preds: &ScoredPredictions, subset: Option<&BTreeSet<TagId>>) -> Result<f64, EvalError> {
    let aps = per_category_ap(preds);
    let defined: Vec<f64> = aps
        .iter()
        .enumerate()
        .filter(|(c, _)| subset.is_none_or(|s| s.contains(&TagId(*c as u32))))
        .filter_map(|(_, ap)| *ap)
        .collect();
    if defined.is_empty() {
        return Err(EvalError::NoDefinedCategory);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }

    fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        Self::from_pr(precision, recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrfReport {
    pub micro: Prf,
    pub macro_: Prf,
}

impl fmt::Display for PrfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "metric\tprecision\trecall\tf1")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, p: &Prf| {
            writeln!(f, "{name}\t{:.6}\t{:.6}\t{:.6}", p.precision, p.recall, p.f1)
        };
        row(f, "micro", &self.micro)?;
        row(f, "macro", &self.macro_)
    }
}

/// Counts per category from binary predictions and truth.
fn prf_from_binary<'a>(
    classes: usize,
    cells: impl Iterator<Item = (&'a [bool], &'a [bool])>,
    subset: Option<&BTreeSet<TagId>>,
) -> PrfReport {
    let mut tp = vec![0u64; classes];
    let mut fp = vec![0u64; classes];
    let mut fn_ = vec![0u64; classes];
    for (pred, truth) in cells {
        for c in 0..classes {
            match (pred[c], truth[c]) {
                (true, true) => tp[c] += 1,
                (true, false) => fp[c] += 1,
                (false, true) => fn_[c] += 1,
                (false, false) => {}
            }
        }
    }
    let keep = |c: usize| subset.is_none_or(|s| s.contains(&TagId(c as u32)));
    let cats: Vec<usize> = (0..classes).filter(|&c| keep(c)).collect();
    let sum = |v: &[u64]| cats.iter().map(|&c| v[c]).sum::<u64>();
    let micro = Prf::from_counts(sum(&tp), sum(&fp), sum(&fn_));
    let defined: Vec<usize> = cats.iter().copied().filter(|&c| tp[c] + fn_[c] > 0).collect();
    let macro_ = if defined.is_empty() {
        Prf::default()
    } else {
        let n = defined.len() as f64;
        let p = defined
            .iter()
            .map(|&c| Prf::from_counts(tp[c], fp[c], fn_[c]).precision)
            .sum::<f64>()
            / n;
        let r = defined
            .iter()
            .map(|&c| Prf::from_counts(tp[c], fp[c], fn_[c]).recall)
            .sum::<f64>()
            / n;
        Prf::from_pr(p, r)
    };
    PrfReport { micro, macro_ }
}

/// Micro and macro precision, recall and F1 predicting `score > threshold`.
pub fn prf_at_threshold(preds: &ScoredPredictions, threshold: f64, subset: Option<&BTreeSet<TagId>>) -> PrfReport {
    let binary: Vec<Vec<bool>> = preds
        .scores
        .iter()
        .map(|r| r.iter().map(|&s| s > threshold).collect())
        .collect();
    prf_from_binary(
        preds.classes,
        binary.iter().map(Vec::as_slice).zip(preds.truth.iter().map(Vec::as_slice)),
        subset,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Total predicted tags at this threshold.
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl fmt::Display for SweepCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "threshold\tprecision\trecall\tf1\tpredicted")?;
        for p in &self.points {
            writeln!(
                f,
                "{:.4}\t{:.6}\t{:.6}\t{:.6}\t{}",
                p.threshold, p.precision, p.recall, p.f1, p.predicted
            )?;
        }
        Ok(())
    }
}

/// Micro P/R/F1 at each threshold of a strictly increasing grid.
pub fn threshold_sweep(preds: &ScoredPredictions, grid: &[f64]) -> Result<SweepCurve, EvalError> {
    if grid.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less)) || grid.iter().any(|t| t.is_nan()) {
        return Err(EvalError::Grid);
    }
    let points = grid
        .iter()
        .map(|&t| {
            let m = prf_at_threshold(preds, t, None).micro;
            let predicted = preds.scores.iter().flatten().filter(|&&s| s > t).count();
            SweepPoint {
                threshold: t,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                predicted,
            }
        })
        .collect();
    Ok(SweepCurve { points })
}

/// Parse `START:STOP:STEP` into an inclusive grid. Points are computed as
/// `START + i * STEP` to avoid accumulating rounding.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>, EvalError> {
    let bad = || EvalError::SweepSpec(spec.to_string());
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if step.partial_cmp(&0.0) != Some(Ordering::Greater) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Score captions as a tagger: every caption is parsed and projected, tags
/// are resolved through `vocab`, unioned per image, and compared with the
/// truth as binary predictions.
pub fn eval_caption_as_tagger(
    captions: &[CaptionRecord],
    truth: &[ImageTagSet],
    vocab: &TagVocabulary,
    subset: Option<&BTreeSet<TagId>>,
) -> PrfReport {
    let mut agg = TagAggregator::new();
    for rec in captions {
        agg.add(&rec.image_id, vocab.resolve_tags(&caption_tags(&rec.text)));
    }
    let predicted: HashMap<String, Vec<TagId>> = agg.finish().into_iter().map(|s| (s.image_id, s.tags)).collect();
    let classes = vocab.len();
    let mut rows = Vec::with_capacity(truth.len());
    for t in truth {
        let mut p = vec![false; classes];
        for id in predicted.get(&t.image_id).into_iter().flatten() {
            p[id.index()] = true;
        }
        let mut g = vec![false; classes];
        for id in &t.tags {
            if let Some(cell) = g.get_mut(id.index()) {
                *cell = true;
            }
        }
        rows.push((p, g));
    }
    prf_from_binary(
        classes,
        rows.iter().map(|(p, g)| (p.as_slice(), g.as_slice())),
        subset,
    )
}

/// Fraction of queries with a relevant id among the first `k` results.
pub fn recall_at_k<T: Eq>(ranked: &[Vec<T>], relevant: &[Vec<T>], k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if ranked.len() != relevant.len() {
        return Err(EvalError::QueryCount(ranked.len(), relevant.len()));
    }
    if ranked.is_empty() {
        return Ok(0.0);
    }
    let hits = ranked
        .iter()
        .zip(relevant)
        .filter(|(r, rel)| r.iter().take(k).any(|id| rel.contains(id)))
        .count();
    Ok(hits as f64 / ranked.len() as f64)
}
