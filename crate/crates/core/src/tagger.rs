//! Linear multi-label tagger trained with the asymmetric loss.
//!
//! `p = sigmoid(W x + b)`, optimised by plain minibatch SGD in a seeded
//! order. The loss gradient with respect to `p` comes from
//! [`crate::losskit::asl_loss`] and is chained through the sigmoid; where the
//! probability clamp is active the gradient is zero.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{shuffle_tags, ImageTagSet};
use crate::losskit::{asl_loss, FocusParams, Label, LabelMatrix, LossError, ProbMatrix, EPS};
use crate::rng;
use crate::vocab::{TagId, TagVocabulary};

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("feature {image_id:?} has dimension {found}, expected {expected}")]
    Dimension {
        image_id: String,
        expected: usize,
        found: usize,
    },
    #[error("image {image_id:?} has tag id {id} but the vocabulary has {classes} entries")]
    UnknownTag {
        image_id: String,
        id: u32,
        classes: usize,
    },
    #[error("no labels for image {0:?}")]
    MissingLabels(String),
    #[error("feature {0:?} has a non-finite entry")]
    NonFinite(String),
    #[error("no training examples")]
    NoExamples,
    #[error("model was trained against vocabulary {model}, but the loaded vocabulary is {vocab}")]
    VocabMismatch { model: String, vocab: String },
    #[error("learning rate must be positive and finite")]
    LearningRate,
    #[error("batch size must be at least 1")]
    BatchSize,
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One image's feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub image_id: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTagger {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub vocab_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub focus: FocusParams,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            focus: FocusParams {
                gamma_pos: 0.0,
                gamma_neg: 4.0,
            },
            lr: 0.1,
            epochs: 20,
            seed: 0,
            batch_size: 32,
        }
    }
}

/// Loss and gradients of the training objective at a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGrad {
    pub loss: f64,
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearTagger,
    /// Full training loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinearTagger {
    /// Weights uniform in `(-1/sqrt(d), 1/sqrt(d))` from `seed`, zero bias.
    pub fn init(classes: usize, dim: usize, seed: u64, vocab_hash: &str) -> Self {
        let mut r = rng::seeded(rng::derive_seed(seed, 0));
        let bound = 1.0 / (dim.max(1) as f64).sqrt();
        let weights = Array2::from_shape_fn((classes, dim), |_| r.random_range(-bound..bound));
        Self {
            weights,
            bias: Array1::zeros(classes),
            vocab_hash: vocab_hash.to_string(),
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn check_vocab(&self, vocab: &TagVocabulary) -> Result<(), TaggerError> {
        let hash = vocab.checksum();
        if hash != self.vocab_hash || vocab.len() != self.classes() {
            return Err(TaggerError::VocabMismatch {
                model: self.vocab_hash.clone(),
                vocab: hash,
            });
        }
        Ok(())
    }

    /// Probabilities for a batch of rows.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        z += &self.bias.view().insert_axis(Axis(0));
        z.mapv_inplace(sigmoid);
        z
    }

    /// Loss and parameter gradients over the rows of `x` with labels `y`.
    pub fn objective(&self, x: &Array2<f64>, y: &LabelMatrix, focus: FocusParams) -> Result<ObjectiveGrad, TaggerError> {
        let raw = self.forward(x);
        let probs = ProbMatrix::new(raw.clone())?;
        let lg = asl_loss(y, &probs, focus)?;
        let mut dz = lg.grad;
        dz.zip_mut_with(&raw, |g, &p| {
            *g = if (EPS..=1.0 - EPS).contains(&p) {
                *g * p * (1.0 - p)
            } else {
                0.0
            };
        });
        Ok(ObjectiveGrad {
            loss: lg.loss,
            weights: dz.t().dot(x),
            bias: dz.sum_axis(Axis(0)),
        })
    }

    pub const HEADER: &'static str = "C\td\tvocab_hash";

    /// TSV: header, one values line, then per class the bias followed by the
    /// weights. Floats use the shortest representation that round-trips.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        writeln!(w, "{}\t{}\t{}", self.classes(), self.dim(), self.vocab_hash)?;
        for (b, row) in self.bias.iter().zip(self.weights.rows()) {
            write!(w, "{b}")?;
            for v in row {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_tsv(reader: impl BufRead) -> Result<Self, TaggerError> {
        let bad = |line: usize, message: &str| TaggerError::Format {
            line,
            message: message.to_string(),
        };
        let mut lines = reader.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim_end) != Some(Self::HEADER) {
            return Err(bad(1, "missing header"));
        }
        let meta = lines.next().transpose()?.ok_or_else(|| bad(2, "missing sizes"))?;
        let cols: Vec<&str> = meta.trim_end().split('\t').collect();
        if cols.len() != 3 {
            return Err(bad(2, "expected C, d and vocab_hash"));
        }
        let c: usize = cols[0].parse().map_err(|_| bad(2, "bad C"))?;
        let d: usize = cols[1].parse().map_err(|_| bad(2, "bad d"))?;
        let vocab_hash = cols[2].to_string();
        let mut weights = Array2::zeros((c, d));
        let mut bias = Array1::zeros(c);
        for k in 0..c {
            let n = k + 3;
            let line = lines.next().transpose()?.ok_or_else(|| bad(n, "missing class row"))?;
            let vals: Vec<f64> = line
                .trim_end()
                .split('\t')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(n, "bad number"))?;
            if vals.len() != d + 1 {
                return Err(bad(n, "wrong number of columns"));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(bad(n, "non-finite value"));
            }
            bias[k] = vals[0];
            weights.row_mut(k).assign(&ndarray::ArrayView1::from(&vals[1..]));
        }
        Ok(Self {
            weights,
            bias,
            vocab_hash,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TaggerError> {
        Self::read_tsv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Per-class probabilities `sigmoid(W x + b)` for one feature vector.
pub fn predict_logits(model: &LinearTagger, features: &FeatureRecord) -> Result<Vec<f64>, TaggerError> {
    check_feature(features, model.dim())?;
    let x = ndarray::ArrayView1::from(&features.vector);
    Ok(model
        .weights
        .dot(&x)
        .iter()
        .zip(model.bias.iter())
        .map(|(z, b)| sigmoid(z + b))
        .collect())
}

/// Ids whose probability is strictly above `threshold`, ascending.
pub fn threshold_tags(probs: &[f64], threshold: f64) -> Vec<TagId> {
    probs
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p > threshold)
        .map(|(i, _)| TagId(i as u32))
        .collect()
}

fn check_feature(f: &FeatureRecord, dim: usize) -> Result<(), TaggerError> {
    if f.vector.len() != dim {
        return Err(TaggerError::Dimension {
            image_id: f.image_id.clone(),
            expected: dim,
            found: f.vector.len(),
        });
    }
    if f.vector.iter().any(|v| !v.is_finite()) {
        return Err(TaggerError::NonFinite(f.image_id.clone()));
    }
    Ok(())
}

/// Join features with labels into a design matrix and a {0,1} label matrix.
/// Labels without features are ignored; features without labels are an
/// error.
pub fn training_matrices(
    features: &[FeatureRecord],
    labels: &[ImageTagSet],
    classes: usize,
) -> Result<(Array2<f64>, LabelMatrix), TaggerError> {
    let first = features.first().ok_or(TaggerError::NoExamples)?;
    let dim = first.vector.len();
    let by_id: HashMap<&str, &ImageTagSet> = labels.iter().map(|l| (l.image_id.as_str(), l)).collect();
    for l in labels {
        if let Some(t) = l.tags.iter().find(|t| t.index() >= classes) {
            return Err(TaggerError::UnknownTag {
                image_id: l.image_id.clone(),
                id: t.0,
                classes,
            });
        }
    }
    let mut x = Array2::zeros((features.len(), dim));
    let mut y = Array2::from_elem((features.len(), classes), Label::Negative);
    for (i, f) in features.iter().enumerate() {
        check_feature(f, dim)?;
        let tags = by_id
            .get(f.image_id.as_str())
            .ok_or_else(|| TaggerError::MissingLabels(f.image_id.clone()))?;
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&f.vector));
        for t in &tags.tags {
            y[[i, t.index()]] = Label::Positive;
        }
    }
    Ok((x, LabelMatrix::new(y)))
}

/// Train a tagger for `vocab` from joined features and labels.
pub fn train(
    features: &[FeatureRecord],
    labels: &[ImageTagSet],
    vocab: &TagVocabulary,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TaggerError> {
    if !(cfg.lr.is_finite() && cfg.lr > 0.0) {
        return Err(TaggerError::LearningRate);
    }
    if cfg.batch_size == 0 {
        return Err(TaggerError::BatchSize);
    }
    let classes = vocab.len();
    let (x, y) = training_matrices(features, labels, classes)?;
    let mut model = LinearTagger::init(classes, x.ncols(), cfg.seed, &vocab.checksum());
    let n = x.nrows();
    let order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let perm = shuffle_tags(&order, rng::derive_seed(cfg.seed, 1 + epoch as u64));
        for chunk in perm.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), chunk);
            let yb = LabelMatrix::new(y.values().select(Axis(0), chunk));
            let g = model.objective(&xb, &yb, cfg.focus)?;
            model.weights.scaled_add(-cfg.lr, &g.weights);
            model.bias.scaled_add(-cfg.lr, &g.bias);
        }
        epoch_losses.push(model.objective(&x, &y, cfg.focus)?.loss);
    }
    Ok(TrainOutcome { model, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{build_vocab, BuildOptions, SynonymTable, TagFrequencies, TagType};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn vocab(n: usize) -> TagVocabulary {
        let mut f = TagFrequencies::new();
        for i in 0..n {
            f.add(&format!("t{i:02}"), TagType::Entity, 100 - i as u64);
        }
        build_vocab(&f, BuildOptions::default(), &SynonymTable::new()).unwrap()
    }

    fn feature(id: &str, v: &[f64]) -> FeatureRecord {
        FeatureRecord {
            image_id: id.into(),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let v = vocab(2);
        let feats = [feature("a", &[1.0, 0.0, 0.5])];
        let labels = [ImageTagSet::new("a", [TagId(1)])];
        let cfg = TrainConfig {
            epochs: 0,
            seed: 9,
            ..Default::default()
        };
        let out = train(&feats, &labels, &v, &cfg).unwrap();
        assert_eq!(out.model, LinearTagger::init(2, 3, 9, &v.checksum()));
        assert!(out.epoch_losses.is_empty());
        let bound = 1.0 / 3f64.sqrt();
        assert!(out.model.weights.iter().all(|w| w.abs() < bound));
        assert!(out.model.bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn rejects_bad_inputs_before_training() {
        let v = vocab(2);
        let feats = [feature("a", &[1.0, 0.0]), feature("b", &[1.0])];
        let labels = [ImageTagSet::new("a", []), ImageTagSet::new("b", [])];
        let cfg = TrainConfig::default();
        assert!(matches!(train(&feats, &labels, &v, &cfg), Err(TaggerError::Dimension { .. })));
        let feats = [feature("a", &[1.0, 0.0])];
        let labels = [ImageTagSet::new("a", [TagId(5)])];
        assert!(matches!(train(&feats, &labels, &v, &cfg), Err(TaggerError::UnknownTag { id: 5, .. })));
        assert!(matches!(train(&feats, &[], &v, &cfg), Err(TaggerError::MissingLabels(_))));
    }

    #[test]
    fn predict_examples() {
        let mut m = LinearTagger {
            weights: Array2::zeros((3, 2)),
            bias: Array1::zeros(3),
            vocab_hash: String::new(),
        };
        let f = feature("x", &[0.7, -2.0]);
        assert_eq!(predict_logits(&m, &f).unwrap(), vec![0.5; 3]);
        m.bias[1] = 50.0;
        assert!(predict_logits(&m, &f).unwrap()[1] > 1.0 - 1e-12);
        assert!(matches!(
            predict_logits(&m, &feature("x", &[1.0])),
            Err(TaggerError::Dimension { .. })
        ));

        // z0 = 1*1 + 2*(-1) + 0 = -1, z1 = 0.5*1 + 0*(-1) + 0.5 = 1
        let m = LinearTagger {
            weights: array![[1.0, 2.0], [0.5, 0.0]],
            bias: array![0.0, 0.5],
            vocab_hash: String::new(),
        };
        let p = predict_logits(&m, &feature("x", &[1.0, -1.0])).unwrap();
        let e = (1.0f64).exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_tags(&[0.8, 0.4], 0.5), vec![TagId(0)]);
        assert_eq!(threshold_tags(&[0.8, 0.4, 1e-9], 0.0).len(), 3);
        let p = [0.35, 0.55, 0.75, 0.1, 0.5];
        let s3 = threshold_tags(&p, 0.3);
        let s5 = threshold_tags(&p, 0.5);
        let s7 = threshold_tags(&p, 0.7);
        assert!(s7.iter().all(|t| s5.contains(t)));
        assert!(s5.iter().all(|t| s3.contains(t)));
        assert_eq!(s5, vec![TagId(1), TagId(2)]);
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let m = LinearTagger::init(3, 4, 11, "abc123");
        let mut buf = Vec::new();
        m.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("C\td\tvocab_hash\n3\t4\tabc123\n0\t"));
        assert_eq!(LinearTagger::read_tsv(buf.as_slice()).unwrap(), m);
        assert!(LinearTagger::read_tsv("C\td\tvocab_hash\n1\t2\th\n0\t1\n".as_bytes()).is_err());
    }

    fn toy_problem(seed: u64) -> (Vec<FeatureRecord>, Vec<ImageTagSet>, TagVocabulary) {
        let mut r = rng::seeded(seed);
        let v = vocab(3);
        let mut feats = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let tags: Vec<TagId> = (0..3u32).filter(|_| r.random_bool(0.4)).map(TagId).collect();
            let mut x: Vec<f64> = (0..4).map(|_| r.random_range(-0.1..0.1)).collect();
            for t in &tags {
                x[t.index()] += 1.0;
            }
            feats.push(feature(&format!("i{i}"), &x));
            labels.push(ImageTagSet::new(format!("i{i}"), tags));
        }
        (feats, labels, v)
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let (f, l, v) = toy_problem(3);
        let cfg = TrainConfig {
            epochs: 15,
            lr: 0.5,
            seed: 4,
            ..Default::default()
        };
        let a = train(&f, &l, &v, &cfg).unwrap();
        let b = train(&f, &l, &v, &cfg).unwrap();
        assert_eq!(a, b);
        let first = a.epoch_losses[0];
        let last = *a.epoch_losses.last().unwrap();
        assert!(last < first);
        let c = train(&f, &l, &v, &TrainConfig { seed: 5, ..cfg }).unwrap();
        assert_ne!(a.model, c.model);
    }

    fn fd_check(model: &LinearTagger, x: &Array2<f64>, y: &LabelMatrix, focus: FocusParams) -> f64 {
        let h = 1e-5;
        let g = model.objective(x, y, focus).unwrap();
        let loss = |m: &LinearTagger| m.objective(x, y, focus).unwrap().loss;
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
        let mut worst: f64 = 0.0;
        let mut m = model.clone();
        for idx in ndarray::indices(model.weights.dim()) {
            let w = m.weights[idx];
            m.weights[idx] = w + h;
            let up = loss(&m);
            m.weights[idx] = w - h;
            let down = loss(&m);
            m.weights[idx] = w;
            worst = worst.max(rel(g.weights[idx], (up - down) / (2.0 * h)));
        }
        for k in 0..model.classes() {
            let b = m.bias[k];
            m.bias[k] = b + h;
            let up = loss(&m);
            m.bias[k] = b - h;
            let down = loss(&m);
            m.bias[k] = b;
            worst = worst.max(rel(g.bias[k], (up - down) / (2.0 * h)));
        }
        worst
    }

    #[test]
    fn objective_gradient_at_trained_model_matches_fd() {
        let (f, l, v) = toy_problem(8);
        let focus = FocusParams::new(1.0, 2.0).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            lr: 0.2,
            focus,
            ..Default::default()
        };
        let out = train(&f, &l, &v, &cfg).unwrap();
        let (x, y) = training_matrices(&f[..6], &l, 3).unwrap();
        assert!(fd_check(&out.model, &x, &y, focus) < 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn objective_gradient_matches_fd_on_tiny_models(
            seed in any::<u64>(),
            gp in 0.0..3.0f64,
            gn in 0.0..3.0f64,
        ) {
            let mut r = rng::seeded(seed);
            let model = LinearTagger::init(3, 2, seed, "");
            let mut model = model;
            model.bias.mapv_inplace(|_| r.random_range(-1.0..1.0));
            let x = Array2::from_shape_fn((4, 2), |_| r.random_range(-2.0..2.0));
            let y = LabelMatrix::new(Array2::from_shape_fn((4, 3), |_| {
                if r.random_bool(0.5) { Label::Positive } else { Label::Negative }
            }));
            let focus = FocusParams::new(gp, gn).unwrap();
            prop_assert!(fd_check(&model, &x, &y, focus) < 1e-4);
        }

        #[test]
        fn threshold_monotone(p in proptest::collection::vec(0.0..1.0f64, 0..20), a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let high = threshold_tags(&p, hi);
            let low = threshold_tags(&p, lo);
            prop_assert!(high.iter().all(|t| low.contains(t)));
        }
    }
}
