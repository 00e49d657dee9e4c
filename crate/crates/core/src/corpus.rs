//! Caption corpora: sharded JSON-lines streaming, per-image tag aggregation
//! and seeded tag shuffling.
//!
//! A corpus file holds one `{"image_id": ..., "text": ...}` object per line.
//! Images with several captions appear on several lines sharing the same
//! `image_id`. Shard `(index, count)` selects the lines whose zero-based line
//! number is congruent to `index` modulo `count`, so the shards of one file
//! partition it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::vocab::TagId;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid shard {index}/{count}: index must be below count")]
    ShardOutOfRange { index: usize, count: usize },
    #[error("invalid shard spec {0:?}: expected I/N")]
    BadShardSpec(String),
}

/// A per-line failure inside a JSON-lines stream. The stream keeps going.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {}: {message}", .line + 1)]
pub struct LineError {
    /// Zero-based line number.
    pub line: usize,
    pub message: String,
}

/// One image-id / caption pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub image_id: String,
    pub text: String,
}

/// The union of tags parsed from all captions of one image.
///
/// `tags` is kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageTagSet {
    pub image_id: String,
    pub tags: Vec<TagId>,
}

impl ImageTagSet {
    pub fn new(image_id: impl Into<String>, tags: impl IntoIterator<Item = TagId>) -> Self {
        let tags: BTreeSet<TagId> = tags.into_iter().collect();
        Self {
            image_id: image_id.into(),
            tags: tags.into_iter().collect(),
        }
    }

    /// Sort and de-duplicate `tags` in place (for values read from disk).
    pub fn canonicalize(&mut self) {
        self.tags.sort_unstable();
        self.tags.dedup();
    }

    pub fn contains(&self, id: TagId) -> bool {
        self.tags.binary_search(&id).is_ok()
    }
}

/// Selects lines `i` with `i % count == index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shard {
    index: usize,
    count: usize,
}

impl Shard {
    pub const ALL: Shard = Shard { index: 0, count: 1 };

    pub fn new(index: usize, count: usize) -> Result<Self, CorpusError> {
        if count == 0 || index >= count {
            return Err(CorpusError::ShardOutOfRange { index, count });
        }
        Ok(Self { index, count })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn selects(&self, line: usize) -> bool {
        line % self.count == self.index
    }
}

impl Default for Shard {
    fn default() -> Self {
        Shard::ALL
    }
}

impl fmt::Display for Shard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.index, self.count)
    }
}

impl FromStr for Shard {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CorpusError::BadShardSpec(s.to_string());
        let (i, n) = s.split_once('/').ok_or_else(bad)?;
        let index = i.trim().parse().map_err(|_| bad())?;
        let count = n.trim().parse().map_err(|_| bad())?;
        Shard::new(index, count)
    }
}

/// Lazily decoded JSON-lines stream restricted to one shard.
///
/// Yields `(line, value)` pairs; blank lines are skipped but still counted.
pub struct JsonLines<R, T> {
    reader: R,
    shard: Shard,
    line: usize,
    buf: Vec<u8>,
    done: bool,
    _marker: std::marker::PhantomData<fn() -> T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonLines<R, T> {
    pub fn new(reader: R, shard: Shard) -> Self {
        Self {
            reader,
            shard,
            line: 0,
            buf: Vec::new(),
            done: false,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonLines<R, T> {
    type Item = Result<(usize, T), LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            let line = self.line;
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(LineError {
                        line,
                        message: format!("read failed: {e}"),
                    }));
                }
            }
            self.line += 1;
            if !self.shard.selects(line) {
                continue;
            }
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t.trim(),
                Err(e) => {
                    return Some(Err(LineError {
                        line,
                        message: format!("invalid UTF-8: {e}"),
                    }))
                }
            };
            if text.is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(text)
                    .map(|v| (line, v))
                    .map_err(|e| LineError {
                        line,
                        message: e.to_string(),
                    }),
            );
        }
        None
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Open `path` as a typed JSON-lines stream over `shard`.
pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    shard: Shard,
) -> Result<JsonLines<BufReader<File>, T>, CorpusError> {
    Ok(JsonLines::new(open(path)?, shard))
}

#[derive(Deserialize)]
struct RawRecord {
    image_id: String,
    text: String,
}

/// Caption records of one shard, in file order.
pub struct RecordStream<R> {
    inner: JsonLines<R, RawRecord>,
}

impl<R: BufRead> Iterator for RecordStream<R> {
    type Item = Result<(usize, CaptionRecord), LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        let item = self.inner.next()?;
        Some(item.and_then(|(line, raw)| {
            if raw.image_id.is_empty() {
                Err(LineError {
                    line,
                    message: "empty image_id".into(),
                })
            } else {
                Ok((
                    line,
                    CaptionRecord {
                        image_id: raw.image_id,
                        text: raw.text,
                    },
                ))
            }
        }))
    }
}

/// Stream the caption records of `shard` from a JSON-lines corpus file.
///
/// Opening the file is fatal on failure; malformed lines surface as
/// [`LineError`] items carrying their line number and the stream continues.
pub fn stream_records(
    path: &Path,
    shard: Shard,
) -> Result<RecordStream<BufReader<File>>, CorpusError> {
    Ok(records_from_reader(open(path)?, shard))
}

pub fn records_from_reader<R: BufRead>(reader: R, shard: Shard) -> RecordStream<R> {
    RecordStream {
        inner: JsonLines::new(reader, shard),
    }
}

/// Read everything from `reader` into memory and stream it; handy for tests
/// and stdin.
pub fn records_from_bytes(bytes: impl Read, shard: Shard) -> RecordStream<BufReader<impl Read>> {
    records_from_reader(BufReader::new(bytes), shard)
}

/// Incremental per-image union of tag sets. Partial aggregators built on
/// different shards combine with [`TagAggregator::merge`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagAggregator {
    images: BTreeMap<String, BTreeSet<TagId>>,
}

impl TagAggregator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, image_id: &str, tags: impl IntoIterator<Item = TagId>) {
        let entry = match self.images.get_mut(image_id) {
            Some(e) => e,
            None => self.images.entry(image_id.to_string()).or_default(),
        };
        entry.extend(tags);
    }

    pub fn merge(&mut self, other: TagAggregator) {
        for (id, tags) in other.images {
            self.images.entry(id).or_default().extend(tags);
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// One set per distinct image, ordered by image id.
    pub fn finish(self) -> Vec<ImageTagSet> {
        self.images
            .into_iter()
            .map(|(image_id, tags)| ImageTagSet {
                image_id,
                tags: tags.into_iter().collect(),
            })
            .collect()
    }
}

/// Union the tag sets of each image across all of its captions.
pub fn aggregate_image_tags<I, S, T>(parsed: I) -> Vec<ImageTagSet>
where
    I: IntoIterator<Item = (S, T)>,
    S: AsRef<str>,
    T: IntoIterator<Item = TagId>,
{
    let mut agg = TagAggregator::new();
    for (id, tags) in parsed {
        agg.add(id.as_ref(), tags);
    }
    agg.finish()
}

/// Seeded Fisher–Yates permutation of `tags`.
///
/// Walks positions from the back, swapping each with a uniformly chosen
/// position at or before it, drawing from [`rng::seeded`]`(seed)`.
pub fn shuffle_tags<T: Clone>(tags: &[T], seed: u64) -> Vec<T> {
    let mut out = tags.to_vec();
    let mut rng = rng::seeded(seed);
    for i in (1..out.len()).rev() {
        let j = rng.random_range(0..=i);
        out.swap(i, j);
    }
    out
}
