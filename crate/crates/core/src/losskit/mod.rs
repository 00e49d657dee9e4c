//! Pre-training objectives with analytic gradients.
//!
//! Reductions: tagging losses sum over categories and average over the
//! batch; the language-model loss averages over non-PAD positions; the
//! contrastive loss takes half the sum of the image-to-text and
//! text-to-image cross-entropies, each averaged over the batch.
//! Probabilities are clamped to `[EPS, 1 - EPS]` when they enter a kernel.

pub mod gradcheck;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use thiserror::Error;

use crate::rng;

/// Probability clamp.
pub const EPS: f64 = 1e-8;

/// Default contrastive temperature.
pub const DEFAULT_TEMPERATURE: f64 = 0.07;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("every label is IGNORE; the loss is undefined")]
    AllIgnored,
    #[error("every target is PAD; the loss is undefined")]
    AllPad,
    #[error("target {target} at position {pos} is outside [0, {vocab})")]
    TargetRange {
        pos: usize,
        target: usize,
        vocab: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("embedding dimension must be at least 1")]
    EmptyDim,
    #[error("temperature must be positive and finite, got {0}")]
    Temperature(f64),
    #[error("{which} row {row} has zero norm")]
    ZeroNorm { which: &'static str, row: usize },
    #[error("focusing parameters must be finite and non-negative")]
    Focus,
    #[error("label value {0} is not 0, 1 or -1")]
    LabelValue(i64),
    #[error("non-finite input")]
    NonFinite,
    #[error("need at least two candidates to sample a negative, got {0}")]
    TooFewCandidates(usize),
    #[error("anchor {anchor} out of range for {len} candidates")]
    Anchor { anchor: usize, len: usize },
}

/// Label cell: negative, positive, or excluded from the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Negative,
    Positive,
    Ignore,
}

impl Label {
    pub const IGNORE_VALUE: i8 = -1;

    pub fn from_value(v: i64) -> Result<Self, LossError> {
        match v {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Ignore),
            other => Err(LossError::LabelValue(other)),
        }
    }
}

/// B×C label matrix over {0, 1, IGNORE}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    values: Array2<Label>,
}

impl LabelMatrix {
    pub fn new(values: Array2<Label>) -> Self {
        Self { values }
    }

    /// From integer codes: 0, 1, or -1 for IGNORE.
    pub fn from_codes(codes: &Array2<i8>) -> Result<Self, LossError> {
        let mut values = Array2::from_elem(codes.dim(), Label::Ignore);
        for (dst, &c) in values.iter_mut().zip(codes.iter()) {
            *dst = Label::from_value(c as i64)?;
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[&[i8]]) -> Result<Self, LossError> {
        Self::from_codes(&rows_to_array(rows, 0i8)?)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array2<Label> {
        &self.values
    }
}

/// B×C probabilities, clamped to `[EPS, 1 - EPS]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    values: Array2<f64>,
}

impl ProbMatrix {
    pub fn new(mut values: Array2<f64>) -> Result<Self, LossError> {
        for v in values.iter_mut() {
            if v.is_nan() {
                return Err(LossError::NonFinite);
            }
            *v = clamp_prob(*v);
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LossError> {
        Self::new(rows_to_array(rows, 0.0)?)
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

fn rows_to_array<T: Copy>(rows: &[&[T]], fill: T) -> Result<Array2<T>, LossError> {
    let c = rows.first().map_or(0, |r| r.len());
    let mut a = Array2::from_elem((rows.len(), c), fill);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != c {
            return Err(LossError::Shape {
                left: (1, c),
                right: (1, r.len()),
            });
        }
        for (j, &v) in r.iter().enumerate() {
            a[[i, j]] = v;
        }
    }
    Ok(a)
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

/// Focusing exponents for the asymmetric loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocusParams {
    pub gamma_pos: f64,
    pub gamma_neg: f64,
}

impl FocusParams {
    pub fn new(gamma_pos: f64, gamma_neg: f64) -> Result<Self, LossError> {
        let ok = |g: f64| g.is_finite() && g >= 0.0;
        if ok(gamma_pos) && ok(gamma_neg) {
            Ok(Self {
                gamma_pos,
                gamma_neg,
            })
        } else {
            Err(LossError::Focus)
        }
    }
}

/// Token logits with their targets; positions whose target equals `pad`
/// are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBatch {
    logits: Array2<f64>,
    targets: Vec<usize>,
    pad: usize,
}

impl TokenBatch {
    pub fn new(logits: Array2<f64>, targets: Vec<usize>, pad: usize) -> Result<Self, LossError> {
        let (n, v) = logits.dim();
        if targets.len() != n {
            return Err(LossError::Shape {
                left: (n, v),
                right: (targets.len(), 1),
            });
        }
        for (pos, &t) in targets.iter().enumerate() {
            if t != pad && t >= v {
                return Err(LossError::TargetRange {
                    pos,
                    target: t,
                    vocab: v,
                });
            }
        }
        if targets.iter().all(|&t| t == pad) {
            return Err(LossError::AllPad);
        }
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(Self {
            logits,
            targets,
            pad,
        })
    }

    pub fn logits(&self) -> &Array2<f64> {
        &self.logits
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn pad(&self) -> usize {
        self.pad
    }
}

/// Paired image and text embeddings; row i of each is a matched pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    image: Array2<f64>,
    text: Array2<f64>,
    temperature: f64,
}

impl EmbeddingBatch {
    pub fn new(image: Array2<f64>, text: Array2<f64>, temperature: f64) -> Result<Self, LossError> {
        if image.dim() != text.dim() {
            return Err(LossError::Shape {
                left: image.dim(),
                right: text.dim(),
            });
        }
        let (b, d) = image.dim();
        if b == 0 {
            return Err(LossError::EmptyBatch);
        }
        if d == 0 {
            return Err(LossError::EmptyDim);
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(LossError::Temperature(temperature));
        }
        if image.iter().chain(text.iter()).any(|x| !x.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(Self {
            image,
            text,
            temperature,
        })
    }

    pub fn image(&self) -> &Array2<f64> {
        &self.image
    }

    pub fn text(&self) -> &Array2<f64> {
        &self.text
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// Loss value with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad<G> {
    pub loss: f64,
    pub grad: G,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItcGrad {
    pub image: Array2<f64>,
    pub text: Array2<f64>,
}

fn check_tagging_shapes(labels: &LabelMatrix, probs: &ProbMatrix) -> Result<(), LossError> {
    if labels.dim() != probs.dim() {
        return Err(LossError::Shape {
            left: labels.dim(),
            right: probs.dim(),
        });
    }
    if labels.values.iter().all(|&l| l == Label::Ignore) {
        return Err(LossError::AllIgnored);
    }
    Ok(())
}

/// Binary cross-entropy summed over categories, averaged over the batch.
/// The gradient is with respect to the (clamped) probabilities.
pub fn bce_loss(labels: &LabelMatrix, probs: &ProbMatrix) -> Result<LossGrad<Array2<f64>>, LossError> {
    check_tagging_shapes(labels, probs)?;
    let b = labels.dim().0 as f64;
    let mut grad = Array2::zeros(probs.dim());
    let mut total = 0.0;
    for ((&y, &p), g) in labels.values.iter().zip(probs.values.iter()).zip(grad.iter_mut()) {
        match y {
            Label::Positive => {
                total += -p.ln();
                *g = -(1.0 / p) / b;
            }
            Label::Negative => {
                total += -(1.0 - p).ln();
                *g = (1.0 / (1.0 - p)) / b;
            }
            Label::Ignore => {}
        }
    }
    Ok(LossGrad {
        loss: total / b,
        grad,
    })
}

/// Asymmetric loss without a probability margin:
/// `-[y (1-p)^g+ ln p + (1-y) p^g- ln(1-p)]`, same reduction as [`bce_loss`].
/// With both exponents zero the result equals [`bce_loss`] bit for bit.
pub fn asl_loss(
    labels: &LabelMatrix,
    probs: &ProbMatrix,
    focus: FocusParams,
) -> Result<LossGrad<Array2<f64>>, LossError> {
    check_tagging_shapes(labels, probs)?;
    let FocusParams {
        gamma_pos: gp,
        gamma_neg: gn,
    } = focus;
    let b = labels.dim().0 as f64;
    let mut grad = Array2::zeros(probs.dim());
    let mut total = 0.0;
    for ((&y, &p), g) in labels.values.iter().zip(probs.values.iter()).zip(grad.iter_mut()) {
        match y {
            Label::Positive => {
                let q = 1.0 - p;
                let w = q.powf(gp);
                total += -(w * p.ln());
                let mut d = -(w / p);
                if gp != 0.0 {
                    d += gp * q.powf(gp - 1.0) * p.ln();
                }
                *g = d / b;
            }
            Label::Negative => {
                let q = 1.0 - p;
                let w = p.powf(gn);
                total += -(w * q.ln());
                let mut d = w / q;
                if gn != 0.0 {
                    d -= gn * p.powf(gn - 1.0) * q.ln();
                }
                *g = d / b;
            }
            Label::Ignore => {}
        }
    }
    Ok(LossGrad {
        loss: total / b,
        grad,
    })
}

/// Numerically stable softmax of one row.
pub fn softmax(row: ArrayView1<f64>) -> Array1<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = row.mapv(|x| (x - m).exp());
    let s = e.sum();
    e / s
}

fn log_sum_exp(row: ArrayView1<f64>) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Token cross-entropy averaged over non-PAD positions. The gradient with
/// respect to the logits is `(softmax - onehot) / n` on scored rows.
pub fn lm_loss(batch: &TokenBatch) -> Result<LossGrad<Array2<f64>>, LossError> {
    let n = batch.targets.iter().filter(|&&t| t != batch.pad).count() as f64;
    let mut grad = Array2::zeros(batch.logits.dim());
    let mut total = 0.0;
    for (i, &t) in batch.targets.iter().enumerate() {
        if t == batch.pad {
            continue;
        }
        let row = batch.logits.row(i);
        total += log_sum_exp(row) - row[t];
        let mut g = softmax(row);
        g[t] -= 1.0;
        grad.row_mut(i).assign(&(g / n));
    }
    Ok(LossGrad {
        loss: total / n,
        grad,
    })
}

fn normalize_rows(x: &Array2<f64>, which: &'static str) -> Result<(Array2<f64>, Array1<f64>), LossError> {
    let norms = x.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    if let Some(row) = norms.iter().position(|&n| n == 0.0) {
        return Err(LossError::ZeroNorm { which, row });
    }
    let unit = x / &norms.view().insert_axis(Axis(1));
    Ok((unit, norms))
}

/// Back-propagate through `x / |x|` row-wise.
fn normalize_rows_backward(g: &Array2<f64>, unit: &Array2<f64>, norms: &Array1<f64>) -> Array2<f64> {
    let mut out = g.clone();
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let u = unit.row(i);
        let proj = row.dot(&u);
        row.zip_mut_with(&u, |gi, &ui| *gi = (*gi - proj * ui) / norms[i]);
    }
    out
}

/// Image-text contrastive loss on the cosine similarity matrix divided by
/// the temperature, with matched pairs on the diagonal.
pub fn itc_loss(batch: &EmbeddingBatch) -> Result<LossGrad<ItcGrad>, LossError> {
    let (img_u, img_n) = normalize_rows(&batch.image, "image")?;
    let (txt_u, txt_n) = normalize_rows(&batch.text, "text")?;
    let tau = batch.temperature;
    let b = img_u.nrows();
    let s = img_u.dot(&txt_u.t()) / tau;

    let mut ds = Array2::<f64>::zeros((b, b));
    let mut row_ce = 0.0;
    let mut col_ce = 0.0;
    for i in 0..b {
        row_ce += log_sum_exp(s.row(i)) - s[[i, i]];
        col_ce += log_sum_exp(s.column(i)) - s[[i, i]];
        let pr = softmax(s.row(i));
        let pc = softmax(s.column(i));
        for j in 0..b {
            ds[[i, j]] += pr[j];
            ds[[j, i]] += pc[j];
        }
        ds[[i, i]] -= 2.0;
    }
    let bf = b as f64;
    let loss = 0.5 * (row_ce / bf + col_ce / bf);
    ds *= 0.5 / bf;

    let g_img_u = ds.dot(&txt_u) / tau;
    let g_txt_u = ds.t().dot(&img_u) / tau;
    Ok(LossGrad {
        loss,
        grad: ItcGrad {
            image: normalize_rows_backward(&g_img_u, &img_u, &img_n),
            text: normalize_rows_backward(&g_txt_u, &txt_u, &txt_n),
        },
    })
}

/// Matched/unmatched binary cross-entropy averaged over candidate pairs.
pub fn itm_loss(match_probs: &[f64], labels: &[u8]) -> Result<LossGrad<Vec<f64>>, LossError> {
    if match_probs.len() != labels.len() {
        return Err(LossError::Shape {
            left: (match_probs.len(), 1),
            right: (labels.len(), 1),
        });
    }
    if match_probs.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let m = match_probs.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(match_probs.len());
    for (&p, &y) in match_probs.iter().zip(labels) {
        if p.is_nan() {
            return Err(LossError::NonFinite);
        }
        let p = clamp_prob(p);
        match y {
            1 => {
                total += -p.ln();
                grad.push(-(1.0 / p) / m);
            }
            0 => {
                total += -(1.0 - p).ln();
                grad.push((1.0 / (1.0 - p)) / m);
            }
            other => return Err(LossError::LabelValue(other as i64)),
        }
    }
    Ok(LossGrad {
        loss: total / m,
        grad,
    })
}

/// Draw a negative index `j != anchor` with probability proportional to
/// `exp(similarity[j])`, by inverse CDF over one uniform from the seeded
/// generator.
pub fn hard_negative_sample(similarity_row: &[f64], anchor: usize, seed: u64) -> Result<usize, LossError> {
    let n = similarity_row.len();
    if n < 2 {
        return Err(LossError::TooFewCandidates(n));
    }
    if anchor >= n {
        return Err(LossError::Anchor { anchor, len: n });
    }
    if similarity_row.iter().any(|x| !x.is_finite()) {
        return Err(LossError::NonFinite);
    }
    let m = similarity_row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != anchor)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = similarity_row
        .iter()
        .enumerate()
        .map(|(j, &x)| if j == anchor { 0.0 } else { (x - m).exp() })
        .collect();
    let total: f64 = weights.iter().sum();
    let u: f64 = rng::seeded(seed).random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = anchor;
    for (j, &w) in weights.iter().enumerate() {
        if j == anchor {
            continue;
        }
        acc += w;
        last = j;
        if u < acc {
            return Ok(j);
        }
    }
    Ok(last)
}
