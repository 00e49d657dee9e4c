//! The tag category system.
//!
//! Tags parsed from captions are counted once per caption, synonyms are
//! folded into their canonical form, and the most frequent canonicals become
//! a dense, ranked [`TagVocabulary`]. Frequency maps from separate shards
//! merge by addition and the final ordering is fully specified (descending
//! frequency, then ascending canonical string), so the vocabulary does not
//! depend on how the corpus was split.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::CaptionRecord;
use crate::semparse::{normalize_tag, ParsedTags};

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("synonym cycle through {0:?}")]
    SynonymCycle(String),
    #[error("{file} line {line}: {message}")]
    Format {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("surface form {0:?} maps to more than one id")]
    DuplicateSurface(String),
    #[error("corpus has no images; averages are undefined")]
    NoImages,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense tag index into a [`TagVocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagId(pub u32);

impl TagId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TagId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Object/scene, attribute or action. The declaration order is the
/// tie-break order when a surface form is seen with several types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagType {
    Entity,
    Attribute,
    Action,
}

impl TagType {
    pub const ALL: [TagType; 3] = [TagType::Entity, TagType::Attribute, TagType::Action];

    pub fn as_str(self) -> &'static str {
        match self {
            TagType::Entity => "entity",
            TagType::Attribute => "attribute",
            TagType::Action => "action",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TagType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entity" => Ok(TagType::Entity),
            "attribute" => Ok(TagType::Attribute),
            "action" => Ok(TagType::Action),
            other => Err(format!("unknown tag type {other:?}")),
        }
    }
}

/// Per-type occurrence counts, keyed by normalised tag string.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagFrequencies {
    counts: BTreeMap<String, [u64; 3]>,
}

impl TagFrequencies {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, tag: &str, ty: TagType, n: u64) {
        let slot = match self.counts.get_mut(tag) {
            Some(s) => s,
            None => self.counts.entry(tag.to_string()).or_default(),
        };
        slot[ty.slot()] += n;
    }

    /// Count the tags of one caption. Each distinct (tag, type) counts once.
    pub fn add_caption(&mut self, tags: &ParsedTags) {
        let mut seen = HashSet::new();
        for (ty, tag) in tags.iter() {
            if seen.insert((ty, tag)) {
                self.add(tag, ty, 1);
            }
        }
    }

    pub fn merge(&mut self, other: TagFrequencies) {
        for (tag, c) in other.counts {
            let slot = self.counts.entry(tag).or_default();
            for i in 0..3 {
                slot[i] += c[i];
            }
        }
    }

    pub fn get(&self, tag: &str, ty: TagType) -> u64 {
        self.counts.get(tag).map_or(0, |c| c[ty.slot()])
    }

    /// Occurrences of `tag` across all types.
    pub fn total_of(&self, tag: &str) -> u64 {
        self.counts.get(tag).map_or(0, |c| c.iter().sum())
    }

    pub fn total(&self) -> u64 {
        self.counts.values().flat_map(|c| c.iter()).sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, [u64; 3])> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Count tag frequencies over a stream of parsed captions.
pub fn count_frequencies<'a>(parsed: impl IntoIterator<Item = &'a ParsedTags>) -> TagFrequencies {
    let mut f = TagFrequencies::new();
    for tags in parsed {
        f.add_caption(tags);
    }
    f
}

/// Surface form -> canonical form, both normalised.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    map: BTreeMap<String, String>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: &str, canonical: &str) {
        let s = normalize_tag(surface);
        let c = normalize_tag(canonical);
        if !s.is_empty() && !c.is_empty() && s != c {
            self.map.insert(s, c);
        }
    }

    /// Parse `surface<TAB>canonical` lines. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn read(reader: impl BufRead) -> Result<Self, VocabError> {
        let mut table = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (s, c) = line.split_once('\t').ok_or_else(|| VocabError::Format {
                file: "synonyms",
                line: i + 1,
                message: "expected surface<TAB>canonical".into(),
            })?;
            table.insert(s, c);
        }
        table.check_acyclic()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    fn check_acyclic(&self) -> Result<(), VocabError> {
        for start in self.map.keys() {
            self.resolve_checked(start)?;
        }
        Ok(())
    }

    fn resolve_checked<'a>(&'a self, tag: &'a str) -> Result<&'a str, VocabError> {
        let mut cur = tag;
        let mut steps = 0;
        while let Some(next) = self.map.get(cur) {
            cur = next;
            steps += 1;
            if steps > self.map.len() {
                return Err(VocabError::SynonymCycle(tag.to_string()));
            }
        }
        Ok(cur)
    }

    /// Follow synonym links to the final canonical form.
    pub fn resolve<'a>(&'a self, tag: &'a str) -> &'a str {
        self.resolve_checked(tag).unwrap_or(tag)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(s, c)| (s.as_str(), c.as_str()))
    }
}

/// Fold synonym counts into their canonical forms. Conserves the total.
pub fn fold_synonyms(
    freqs: &TagFrequencies,
    synonyms: &SynonymTable,
) -> Result<TagFrequencies, VocabError> {
    synonyms.check_acyclic()?;
    let mut out = TagFrequencies::new();
    for (tag, counts) in freqs.iter() {
        let canonical = synonyms.resolve(tag);
        for ty in TagType::ALL {
            if counts[ty.slot()] > 0 {
                out.add(canonical, ty, counts[ty.slot()]);
            }
        }
    }
    Ok(out)
}

/// Post-selection allow/deny list. A non-empty allow set keeps only listed
/// canonicals; the deny set removes canonicals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterList {
    pub allow: BTreeSet<String>,
    pub deny: BTreeSet<String>,
}

impl FilterList {
    /// One canonical per line; a leading `-` marks a denial.
    pub fn read(reader: impl BufRead) -> Result<Self, VocabError> {
        let mut list = Self::default();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(denied) = line.strip_prefix('-') {
                list.deny.insert(normalize_tag(denied));
            } else {
                list.allow.insert(normalize_tag(line));
            }
        }
        Ok(list)
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn keeps(&self, canonical: &str) -> bool {
        (self.allow.is_empty() || self.allow.contains(canonical)) && !self.deny.contains(canonical)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub id: TagId,
    pub canonical: String,
    pub tag_type: TagType,
    pub frequency: u64,
    pub synonyms: BTreeSet<String>,
}

/// Ranked, typed, synonym-merged tag vocabulary with dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagVocabulary {
    entries: Vec<VocabEntry>,
    lookup: BTreeMap<String, TagId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub top_k: usize,
    pub min_freq: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            top_k: 5000,
            min_freq: 1,
        }
    }
}

fn majority_type(counts: [u64; 3]) -> TagType {
    // max_by_key keeps the last maximum, so scan in reverse priority order
    TagType::ALL
        .iter()
        .rev()
        .copied()
        .max_by_key(|t| counts[t.slot()])
        .unwrap_or(TagType::Entity)
}

/// Build a vocabulary from merged frequencies.
pub fn build_vocab(
    freqs: &TagFrequencies,
    opts: BuildOptions,
    synonyms: &SynonymTable,
) -> Result<TagVocabulary, VocabError> {
    if opts.top_k == 0 {
        return Err(VocabError::ZeroTopK);
    }
    let folded = fold_synonyms(freqs, synonyms)?;
    let mut ranked: Vec<(&str, [u64; 3], u64)> = folded
        .iter()
        .map(|(tag, c)| (tag, c, c.iter().sum::<u64>()))
        .filter(|&(_, _, total)| total >= opts.min_freq && total > 0)
        .collect();
    ranked.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(opts.top_k);

    let mut by_canonical: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (surface, _) in synonyms.iter() {
        by_canonical
            .entry(synonyms.resolve(surface))
            .or_default()
            .insert(surface.to_string());
    }
    let entries = ranked
        .into_iter()
        .enumerate()
        .map(|(i, (tag, counts, total))| VocabEntry {
            id: TagId(i as u32),
            canonical: tag.to_string(),
            tag_type: majority_type(counts),
            frequency: total,
            synonyms: by_canonical.remove(tag).unwrap_or_default(),
        })
        .collect();
    TagVocabulary::from_entries(entries)
}

impl TagVocabulary {
    /// Assemble a vocabulary, re-assigning dense ids in the given order.
    pub fn from_entries(mut entries: Vec<VocabEntry>) -> Result<Self, VocabError> {
        let mut lookup = BTreeMap::new();
        for (i, e) in entries.iter_mut().enumerate() {
            e.id = TagId(i as u32);
            for surface in std::iter::once(&e.canonical).chain(&e.synonyms) {
                if lookup.insert(surface.clone(), e.id).is_some() {
                    return Err(VocabError::DuplicateSurface(surface.clone()));
                }
            }
        }
        Ok(Self { entries, lookup })
    }

    /// Keep only the entries `filter` accepts, preserving rank order.
    pub fn filtered(&self, filter: &FilterList) -> Self {
        let kept = self
            .entries
            .iter()
            .filter(|e| filter.keeps(&e.canonical))
            .cloned()
            .collect();
        Self::from_entries(kept).expect("subset of a valid vocabulary is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn get(&self, id: TagId) -> Option<&VocabEntry> {
        self.entries.get(id.index())
    }

    pub fn canonical(&self, id: TagId) -> Option<&str> {
        self.get(id).map(|e| e.canonical.as_str())
    }

    /// Exact lookup of an already-normalised surface form.
    pub fn lookup(&self, surface: &str) -> Option<TagId> {
        self.lookup.get(surface).copied()
    }

    /// Normalise, then look up.
    pub fn resolve(&self, raw: &str) -> Option<TagId> {
        self.lookup(&normalize_tag(raw))
    }

    /// Vocabulary ids of all tags in a parsed caption; unknown tags dropped.
    pub fn resolve_tags(&self, tags: &ParsedTags) -> BTreeSet<TagId> {
        tags.iter().filter_map(|(_, t)| self.lookup(t)).collect()
    }

    pub fn type_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for e in &self.entries {
            c[e.tag_type.slot()] += 1;
        }
        c
    }

    /// Checksum of the ordered (id, canonical, type) listing. Models bind to
    /// this so a reordered or edited vocabulary is detected.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(format!("{}\t{}\t{}\n", e.id, e.canonical, e.tag_type).as_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub const TSV_HEADER: &'static str = "id\tcanonical\ttype\tfrequency\tsynonyms";

    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::TSV_HEADER)?;
        for e in &self.entries {
            let syn: Vec<&str> = e.synonyms.iter().map(String::as_str).collect();
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.id,
                e.canonical,
                e.tag_type,
                e.frequency,
                syn.join(",")
            )?;
        }
        Ok(())
    }

    pub fn read_tsv(reader: impl BufRead) -> Result<Self, VocabError> {
        let bad = |line: usize, message: String| VocabError::Format {
            file: "vocabulary",
            line,
            message,
        };
        let mut lines = reader.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim_end) != Some(Self::TSV_HEADER) {
            return Err(bad(1, format!("expected header {:?}", Self::TSV_HEADER)));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(bad(n, format!("expected 5 columns, found {}", cols.len())));
            }
            let id: u32 = cols[0].parse().map_err(|_| bad(n, "bad id".into()))?;
            if id as usize != entries.len() {
                return Err(bad(n, format!("ids must be dense from 0; found {id}")));
            }
            let canonical = cols[1].to_string();
            if canonical.is_empty() {
                return Err(bad(n, "empty canonical".into()));
            }
            let tag_type = cols[2].parse().map_err(|e| bad(n, e))?;
            let frequency = cols[3].parse().map_err(|_| bad(n, "bad frequency".into()))?;
            let synonyms = cols[4]
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            entries.push(VocabEntry {
                id: TagId(id),
                canonical,
                tag_type,
                frequency,
                synonyms,
            });
        }
        Self::from_entries(entries)
    }

    pub fn load(path: &Path) -> Result<Self, VocabError> {
        Self::read_tsv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Result of comparing the vocabulary with an external category list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub count: usize,
    /// Matched canonicals in vocabulary order.
    pub matched: Vec<String>,
}

/// Canonicals matched by an external category list after normalisation and
/// synonym resolution.
pub fn vocab_overlap<S: AsRef<str>>(vocab: &TagVocabulary, external: &[S]) -> Overlap {
    let ids: BTreeSet<TagId> = external
        .iter()
        .filter_map(|c| vocab.resolve(c.as_ref()))
        .collect();
    let matched: Vec<String> = ids
        .into_iter()
        .filter_map(|id| vocab.canonical(id).map(str::to_string))
        .collect();
    Overlap {
        count: matched.len(),
        matched,
    }
}

/// Corpus-level counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub n_images: usize,
    pub n_texts: usize,
    pub avg_texts_per_image: f64,
    /// Total parsed tag occurrences, counted once per caption.
    pub n_tags: u64,
    pub avg_tags_per_image: f64,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_images\t{}", self.n_images)?;
        writeln!(f, "n_texts\t{}", self.n_texts)?;
        writeln!(f, "avg_texts_per_image\t{:.2}", self.avg_texts_per_image)?;
        writeln!(f, "n_tags\t{}", self.n_tags)?;
        write!(f, "avg_tags_per_image\t{:.2}", self.avg_tags_per_image)
    }
}

/// Mergeable accumulator behind [`corpus_stats`].
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    images: BTreeSet<String>,
    n_texts: usize,
    n_tags: u64,
}

impl StatsAccumulator {
    pub fn add(&mut self, image_id: &str, tags: &ParsedTags) {
        if !self.images.contains(image_id) {
            self.images.insert(image_id.to_string());
        }
        self.n_texts += 1;
        self.n_tags += tags.len() as u64;
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        self.images.extend(other.images);
        self.n_texts += other.n_texts;
        self.n_tags += other.n_tags;
    }

    pub fn finish(&self) -> Result<CorpusStats, VocabError> {
        let n_images = self.images.len();
        if n_images == 0 {
            return Err(VocabError::NoImages);
        }
        Ok(CorpusStats {
            n_images,
            n_texts: self.n_texts,
            avg_texts_per_image: self.n_texts as f64 / n_images as f64,
            n_tags: self.n_tags,
            avg_tags_per_image: self.n_tags as f64 / n_images as f64,
        })
    }
}

/// Statistics over aligned caption records and their parsed tags.
pub fn corpus_stats<'a>(
    items: impl IntoIterator<Item = (&'a CaptionRecord, &'a ParsedTags)>,
) -> Result<CorpusStats, VocabError> {
    let mut acc = StatsAccumulator::default();
    for (rec, tags) in items {
        acc.add(&rec.image_id, tags);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entities(tags: &[&str]) -> ParsedTags {
        ParsedTags {
            entities: tags.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    fn freqs(pairs: &[(&str, TagType, u64)]) -> TagFrequencies {
        let mut f = TagFrequencies::new();
        for &(t, ty, n) in pairs {
            f.add(t, ty, n);
        }
        f
    }

    fn canonicals(v: &TagVocabulary) -> Vec<&str> {
        v.entries().iter().map(|e| e.canonical.as_str()).collect()
    }

    #[test]
    fn counts_once_per_caption() {
        let f = count_frequencies(&[entities(&["dog"]), entities(&["dog"])]);
        assert_eq!(f.get("dog", TagType::Entity), 2);
        let dup = ParsedTags {
            entities: vec!["dog".into(), "dog".into()],
            ..Default::default()
        };
        let f = count_frequencies([&dup]);
        assert_eq!(f.get("dog", TagType::Entity), 1);
    }

    #[test]
    fn top_k_by_count() {
        let f = freqs(&[
            ("dog", TagType::Entity, 5),
            ("cat", TagType::Entity, 3),
            ("run", TagType::Action, 2),
        ]);
        let v = build_vocab(&f, BuildOptions { top_k: 2, min_freq: 1 }, &SynonymTable::new()).unwrap();
        assert_eq!(canonicals(&v), ["dog", "cat"]);
    }

    #[test]
    fn synonyms_fold_into_canonical() {
        let f = freqs(&[("person", TagType::Entity, 4), ("human", TagType::Entity, 3)]);
        let mut syn = SynonymTable::new();
        syn.insert("human", "person");
        let v = build_vocab(&f, BuildOptions { top_k: 5, min_freq: 1 }, &syn).unwrap();
        assert_eq!(v.len(), 1);
        let e = &v.entries()[0];
        assert_eq!(e.canonical, "person");
        assert_eq!(e.frequency, 7);
        assert_eq!(e.synonyms.iter().collect::<Vec<_>>(), ["human"]);
        assert_eq!(v.resolve("Humans"), Some(TagId(0)));
    }

    #[test]
    fn lexicographic_tiebreak() {
        let f = freqs(&[("zebra", TagType::Entity, 2), ("apple", TagType::Entity, 2)]);
        let v = build_vocab(&f, BuildOptions { top_k: 1, min_freq: 1 }, &SynonymTable::new()).unwrap();
        assert_eq!(canonicals(&v), ["apple"]);
    }

    #[test]
    fn zero_top_k_rejected_and_empty_input_valid() {
        let f = TagFrequencies::new();
        assert!(matches!(
            build_vocab(&f, BuildOptions { top_k: 0, min_freq: 1 }, &SynonymTable::new()),
            Err(VocabError::ZeroTopK)
        ));
        let v = build_vocab(&f, BuildOptions::default(), &SynonymTable::new()).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn min_freq_filters() {
        let f = freqs(&[("dog", TagType::Entity, 5), ("cat", TagType::Entity, 1)]);
        let v = build_vocab(&f, BuildOptions { top_k: 10, min_freq: 2 }, &SynonymTable::new()).unwrap();
        assert_eq!(canonicals(&v), ["dog"]);
    }

    #[test]
    fn type_by_majority_then_priority() {
        let f = freqs(&[
            ("orange", TagType::Entity, 2),
            ("orange", TagType::Attribute, 3),
            ("on", TagType::Action, 1),
            ("on", TagType::Attribute, 1),
            ("pink", TagType::Entity, 1),
            ("pink", TagType::Attribute, 1),
        ]);
        let v = build_vocab(&f, BuildOptions::default(), &SynonymTable::new()).unwrap();
        let ty = |s: &str| v.get(v.lookup(s).unwrap()).unwrap().tag_type;
        assert_eq!(ty("orange"), TagType::Attribute);
        assert_eq!(ty("on"), TagType::Attribute);
        assert_eq!(ty("pink"), TagType::Entity);
    }

    #[test]
    fn synonym_cycle_detected() {
        let src = "human\tperson\nperson\thuman\n";
        assert!(matches!(
            SynonymTable::read(src.as_bytes()),
            Err(VocabError::SynonymCycle(_))
        ));
    }

    #[test]
    fn synonym_chains_resolve() {
        let syn = SynonymTable::read("guy\tman\nman\tperson\n".as_bytes()).unwrap();
        assert_eq!(syn.resolve("guy"), "person");
    }

    #[test]
    fn filter_list_applies_after_selection() {
        let f = freqs(&[
            ("dog", TagType::Entity, 5),
            ("cat", TagType::Entity, 3),
            ("of", TagType::Action, 9),
        ]);
        let v = build_vocab(&f, BuildOptions::default(), &SynonymTable::new()).unwrap();
        let deny = FilterList::read("-of\n".as_bytes()).unwrap();
        let kept = v.filtered(&deny);
        assert_eq!(canonicals(&kept), ["dog", "cat"]);
        assert_eq!(kept.lookup("dog"), Some(TagId(0)));
        let allow = FilterList::read("cat\n# comment\n".as_bytes()).unwrap();
        assert_eq!(canonicals(&v.filtered(&allow)), ["cat"]);
    }

    #[test]
    fn tsv_round_trip() {
        let f = freqs(&[("person", TagType::Entity, 4), ("human", TagType::Entity, 3), ("red", TagType::Attribute, 2)]);
        let mut syn = SynonymTable::new();
        syn.insert("human", "person");
        syn.insert("guy", "person");
        let v = build_vocab(&f, BuildOptions::default(), &syn).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "id\tcanonical\ttype\tfrequency\tsynonyms\n0\tperson\tentity\t7\tguy,human\n1\tred\tattribute\t2\t\n"
        );
        let back = TagVocabulary::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.checksum(), v.checksum());
    }

    #[test]
    fn tsv_rejects_sparse_ids_and_duplicates() {
        let sparse = "id\tcanonical\ttype\tfrequency\tsynonyms\n1\tdog\tentity\t1\t\n";
        assert!(TagVocabulary::read_tsv(sparse.as_bytes()).is_err());
        let dup = "id\tcanonical\ttype\tfrequency\tsynonyms\n0\tdog\tentity\t1\t\n1\tpup\tentity\t1\tdog\n";
        assert!(matches!(
            TagVocabulary::read_tsv(dup.as_bytes()),
            Err(VocabError::DuplicateSurface(_))
        ));
    }

    #[test]
    fn overlap_normalises_external_names() {
        let f = freqs(&[("dog", TagType::Entity, 3)]);
        let v = build_vocab(&f, BuildOptions::default(), &SynonymTable::new()).unwrap();
        let o = vocab_overlap(&v, &["Dogs", "spaceship"]);
        assert_eq!(o.count, 1);
        assert_eq!(o.matched, ["dog"]);
        let all: Vec<&str> = canonicals(&v);
        assert_eq!(vocab_overlap(&v, &all).count, v.len());
    }

    #[test]
    fn stats_examples() {
        let recs: Vec<CaptionRecord> = ["a", "a", "b", "b"]
            .iter()
            .map(|id| CaptionRecord {
                image_id: id.to_string(),
                text: String::new(),
            })
            .collect();
        let tags = [entities(&["x"]), entities(&["x", "y"]), entities(&["z"]), entities(&["p", "q"])];
        let s = corpus_stats(recs.iter().zip(tags.iter())).unwrap();
        assert_eq!((s.n_images, s.n_texts, s.n_tags), (2, 4, 6));
        assert!(s.to_string().contains("avg_texts_per_image\t2.00"));
        assert!(s.to_string().contains("avg_tags_per_image\t3.00"));

        let one = [CaptionRecord {
            image_id: "only".into(),
            text: String::new(),
        }];
        let s = corpus_stats(one.iter().zip([ParsedTags::default()].iter())).unwrap();
        assert_eq!(s.n_tags, 0);
        assert!(s.to_string().ends_with("avg_tags_per_image\t0.00"));

        assert!(matches!(corpus_stats(std::iter::empty()), Err(VocabError::NoImages)));
    }

    fn arb_freqs() -> impl Strategy<Value = TagFrequencies> {
        proptest::collection::vec(("[a-e]{1,2}", 0usize..3, 1u64..20), 0..25).prop_map(|v| {
            let mut f = TagFrequencies::new();
            for (t, ty, n) in v {
                f.add(&t, TagType::ALL[ty], n);
            }
            f
        })
    }

    fn arb_synonyms() -> impl Strategy<Value = SynonymTable> {
        // Only map two-letter forms onto one-letter forms: never cyclic.
        proptest::collection::vec(("[a-e]{2}", "[a-e]"), 0..6).prop_map(|v| {
            let mut s = SynonymTable::new();
            for (a, b) in v {
                s.insert(&a, &b);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn folding_conserves_mass(f in arb_freqs(), syn in arb_synonyms()) {
            prop_assert_eq!(fold_synonyms(&f, &syn).unwrap().total(), f.total());
        }

        #[test]
        fn smaller_top_k_is_prefix(f in arb_freqs(), syn in arb_synonyms(), k in 1usize..10) {
            let small = build_vocab(&f, BuildOptions { top_k: k, min_freq: 1 }, &syn).unwrap();
            let large = build_vocab(&f, BuildOptions { top_k: k + 3, min_freq: 1 }, &syn).unwrap();
            prop_assert!(small.len() <= large.len());
            prop_assert_eq!(small.entries(), &large.entries()[..small.len()]);
        }

        #[test]
        fn lookup_inverts_listing(f in arb_freqs(), syn in arb_synonyms()) {
            let v = build_vocab(&f, BuildOptions::default(), &syn).unwrap();
            for e in v.entries() {
                prop_assert_eq!(v.lookup(&e.canonical), Some(e.id));
            }
            for w in v.entries().windows(2) {
                prop_assert!(w[0].frequency > w[1].frequency
                    || (w[0].frequency == w[1].frequency && w[0].canonical < w[1].canonical));
            }
        }

        #[test]
        fn merge_order_irrelevant(parts in proptest::collection::vec(arb_freqs(), 1..5)) {
            let mut forward = TagFrequencies::new();
            for p in parts.iter().cloned() {
                forward.merge(p);
            }
            let mut backward = TagFrequencies::new();
            for p in parts.iter().rev().cloned() {
                backward.merge(p);
            }
            prop_assert_eq!(&forward, &backward);
            let syn = SynonymTable::new();
            prop_assert_eq!(
                build_vocab(&forward, BuildOptions::default(), &syn).unwrap(),
                build_vocab(&backward, BuildOptions::default(), &syn).unwrap()
            );
        }
    }
}
