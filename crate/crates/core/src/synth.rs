//! Seeded synthetic corpora with known ground truth.
//!
//! Captions are generated from a fixed tag inventory with simple templates,
//! and image features are the sum of per-tag prototype vectors plus Gaussian
//! noise, so the correspondence between tags and features is known exactly.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::corpus::CaptionRecord;
use crate::rerank::GalleryItem;
use crate::rng::{self, ChaCha8Rng};
use crate::tagger::FeatureRecord;
use crate::vocab::TagId;

pub const NOUNS: [&str; 24] = [
    "dog", "cat", "horse", "bird", "car", "bus", "truck", "bicycle", "boat", "train", "table", "chair", "bench",
    "bed", "clock", "desk", "tree", "beach", "street", "field", "kitchen", "man", "woman", "child",
];
pub const COLORS: [&str; 4] = ["red", "blue", "green", "wooden"];
/// Relation words with the surface form used in captions.
pub const RELATIONS: [(&str, &str); 4] = [("on", "on"), ("near", "near"), ("hold", "holding"), ("chase", "chasing")];

/// All 32 tag names: nouns, then attributes, then actions.
pub fn tag_names() -> Vec<&'static str> {
    NOUNS
        .iter()
        .chain(COLORS.iter())
        .copied()
        .chain(RELATIONS.iter().map(|r| r.0))
        .collect()
}

/// A generated caption with the tags it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCaption {
    pub record: CaptionRecord,
    pub tags: BTreeSet<&'static str>,
}

fn caption(r: &mut ChaCha8Rng) -> (String, BTreeSet<&'static str>) {
    let picked: Vec<&'static str> = NOUNS.choose_multiple(r, 3).copied().collect();
    let (rel, rel_surface) = *RELATIONS.choose(r).expect("non-empty");
    let mut tags: BTreeSet<&'static str> = [picked[0], picked[1], rel].into();
    let mut text = String::from("a ");
    if r.random_bool(0.5) {
        let color = *COLORS.choose(r).expect("non-empty");
        tags.insert(color);
        text.push_str(color);
        text.push(' ');
    }
    text.push_str(&format!("{} {rel_surface} a {}", picked[0], picked[1]));
    if r.random_bool(0.5) {
        tags.insert(picked[2]);
        text.push_str(&format!(" and a {}", picked[2]));
    }
    (text, tags)
}

/// `n` captions for images `img{i}`, one caption per image.
pub fn captions(n: usize, seed: u64) -> Vec<SynthCaption> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|i| {
            let (text, tags) = caption(&mut r);
            SynthCaption {
                record: CaptionRecord {
                    image_id: format!("img{i:06}"),
                    text,
                },
                tags,
            }
        })
        .collect()
}

/// Unit-norm random prototype per tag name, in [`tag_names`] order.
pub fn prototypes(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(rng::derive_seed(seed, 1));
    (0..tag_names().len())
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

/// Feature vector for a tag set: sum of its prototypes plus N(0, sigma²)
/// per coordinate.
pub fn features_for(
    image_id: &str,
    tags: &BTreeSet<&'static str>,
    protos: &[Vec<f64>],
    sigma: f64,
    r: &mut ChaCha8Rng,
) -> FeatureRecord {
    let names = tag_names();
    let dim = protos.first().map_or(0, Vec::len);
    let noise = Normal::new(0.0, sigma).expect("sigma >= 0");
    let mut v: Vec<f64> = (0..dim).map(|_| noise.sample(r)).collect();
    for t in tags {
        let k = names.iter().position(|n| n == t).expect("known tag");
        for (x, p) in v.iter_mut().zip(&protos[k]) {
            *x += p;
        }
    }
    FeatureRecord {
        image_id: image_id.to_string(),
        vector: v,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureCorpusConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for FeatureCorpusConfig {
    fn default() -> Self {
        Self {
            n_train: 2000,
            n_test: 500,
            dim: 64,
            sigma: 0.1,
            seed: 0,
        }
    }
}

/// Captioned images with features; the first `n_train` are the training
/// split.
#[derive(Debug, Clone)]
pub struct FeatureCorpus {
    pub captions: Vec<SynthCaption>,
    pub features: Vec<FeatureRecord>,
    pub n_train: usize,
}

impl FeatureCorpus {
    pub fn generate(cfg: &FeatureCorpusConfig) -> Self {
        let captions = captions(cfg.n_train + cfg.n_test, cfg.seed);
        let protos = prototypes(cfg.dim, cfg.seed);
        let mut r = rng::seeded(rng::derive_seed(cfg.seed, 2));
        let features = captions
            .iter()
            .map(|c| features_for(&c.record.image_id, &c.tags, &protos, cfg.sigma, &mut r))
            .collect();
        Self {
            captions,
            features,
            n_train: cfg.n_train,
        }
    }

    pub fn train(&self) -> (&[SynthCaption], &[FeatureRecord]) {
        (&self.captions[..self.n_train], &self.features[..self.n_train])
    }

    pub fn test(&self) -> (&[SynthCaption], &[FeatureRecord]) {
        (&self.captions[self.n_train..], &self.features[self.n_train..])
    }
}

/// A retrieval benchmark: every query has exactly one relevant item, which
/// is also the only item whose tag set equals the query's tags.
#[derive(Debug, Clone)]
pub struct Gallery {
    pub items: Vec<GalleryItem>,
    /// (query embedding, query tags, index of the relevant item)
    pub queries: Vec<(Vec<f64>, BTreeSet<TagId>, usize)>,
}

/// `n_items` items with distinct 3-tag sets over `n_tags` tags and unit
/// random embeddings; queries are noisy copies of random items' embeddings
/// carrying those items' tags.
pub fn gallery(n_items: usize, n_queries: usize, n_tags: u32, dim: usize, noise: f64, seed: u64) -> Gallery {
    let mut r = rng::seeded(seed);
    let mut seen = BTreeSet::new();
    let mut items = Vec::with_capacity(n_items);
    while items.len() < n_items {
        let mut t: Vec<u32> = (0..n_tags).collect::<Vec<_>>().choose_multiple(&mut r, 3).copied().collect();
        t.sort_unstable();
        if !seen.insert(t.clone()) {
            continue;
        }
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut r)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        items.push(GalleryItem {
            id: format!("item{:05}", items.len()),
            embedding: v.into_iter().map(|x| x / n).collect(),
            tags: t.into_iter().map(TagId).collect(),
        });
    }
    let noise = Normal::new(0.0, noise).expect("noise >= 0");
    let queries = (0..n_queries)
        .map(|_| {
            let k = r.random_range(0..n_items);
            let e = items[k].embedding.iter().map(|x| x + noise.sample(&mut r)).collect();
            (e, items[k].tags.clone(), k)
        })
        .collect();
    Gallery { items, queries }
}
