//! File plumbing shared by the subcommands.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use tagmine::corpus::{read_jsonl, TagAggregator};
use tagmine::semparse::caption_tags;
use tagmine::vocab::FilterList;
use tagmine::{ImageTagSet, ParsedTags, Shard, TagId, TagVocabulary};

/// Fail before any work starts if an input is not a readable file.
pub fn check_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        let meta = std::fs::metadata(p).with_context(|| format!("cannot read {}", p.display()))?;
        if !meta.is_file() {
            bail!("{} is not a file", p.display());
        }
    }
    Ok(())
}

/// Buffered writer on `path`, or on stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Every record of a JSON-lines file; the first malformed line is fatal.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for item in read_jsonl::<T>(path, Shard::ALL)? {
        let (_, v) = item.with_context(|| format!("in {}", path.display()))?;
        out.push(v);
    }
    Ok(out)
}

/// A line of a tag-bearing file. Three shapes are accepted: tag ids
/// (`"tags"`), parse output (`"entities"`, `"attributes"`, `"actions"`), or a
/// raw caption (`"text"`), which is parsed with the builtin parser.
#[derive(Debug, Deserialize)]
pub struct TagLine {
    pub image_id: String,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub tags: Option<Vec<TagId>>,
    #[serde(default)]
    pub entities: Option<Vec<String>>,
    #[serde(default)]
    pub attributes: Option<Vec<String>>,
    #[serde(default)]
    pub actions: Option<Vec<String>>,
}

impl TagLine {
    pub fn parsed(&self) -> Option<ParsedTags> {
        if self.entities.is_some() || self.attributes.is_some() || self.actions.is_some() {
            let list = |v: &Option<Vec<String>>| v.clone().unwrap_or_default();
            return Some(ParsedTags {
                entities: list(&self.entities),
                attributes: list(&self.attributes),
                actions: list(&self.actions),
            });
        }
        self.text.as_deref().map(caption_tags)
    }

    pub fn ids(&self, vocab: &TagVocabulary) -> Result<BTreeSet<TagId>> {
        if let Some(tags) = &self.tags {
            if let Some(t) = tags.iter().find(|t| t.index() >= vocab.len()) {
                bail!("image {}: tag id {t} is not in the vocabulary", self.image_id);
            }
            return Ok(tags.iter().copied().collect());
        }
        match self.parsed() {
            Some(p) => Ok(vocab.resolve_tags(&p)),
            None => bail!("image {}: no tags, parsed tags or text", self.image_id),
        }
    }
}

/// Per-image tag-id sets from a labels file, unioned over repeated images.
pub fn read_labels(path: &Path, vocab: &TagVocabulary) -> Result<Vec<ImageTagSet>> {
    let mut agg = TagAggregator::new();
    for line in read_all::<TagLine>(path)? {
        agg.add(&line.image_id, line.ids(vocab)?);
    }
    Ok(agg.finish())
}

pub fn load_vocab(path: &Path) -> Result<TagVocabulary> {
    TagVocabulary::load(path).with_context(|| format!("vocabulary {}", path.display()))
}

/// Ids of the vocabulary entries an allow/deny list keeps.
pub fn subset(vocab: &TagVocabulary, allowlist: Option<&PathBuf>) -> Result<Option<BTreeSet<TagId>>> {
    let Some(path) = allowlist else {
        return Ok(None);
    };
    let list = FilterList::load(path).with_context(|| format!("allowlist {}", path.display()))?;
    Ok(Some(
        vocab
            .entries()
            .iter()
            .filter(|e| list.keeps(&e.canonical))
            .map(|e| e.id)
            .collect(),
    ))
}
