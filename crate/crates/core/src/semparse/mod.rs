//! Caption semantic parsing.
//!
//! A caption is parsed into noun-phrase heads, modifiers attached to heads,
//! and `(subject, relation, object)` triples. [`project_tags`] then maps
//! heads to entity tags (objects and scenes), modifiers to attribute tags and
//! relation words to action tags.
//!
//! Two parse sources are supported: the builtin rule-based chunker and
//! pre-computed parses read from a JSON-lines sidecar file, so that the
//! projection can be driven by an external dependency parser.

mod chunker;
mod lexicon;
mod normalize;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, Shard};
use crate::vocab::TagType;

pub use normalize::normalize_tag;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("no sidecar parse for line {}", .line + 1)]
    MissingSidecar { line: usize },
    #[error("invalid sidecar parse for line {}: {reason}", .line + 1)]
    InvalidSidecar { line: usize, reason: String },
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error("sidecar {0}")]
    SidecarLine(#[from] corpus::LineError),
}

/// Heads, modifiers and relations of one caption.
///
/// Heads are normalised noun phrases and may repeat. Every modifier's head
/// and every relation endpoint is one of `heads`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub heads: Vec<String>,
    /// `(modifier, head)`
    pub modifiers: Vec<(String, String)>,
    /// `(subject head, relation word, object head)`
    pub relations: Vec<(String, String, String)>,
}

impl ParseResult {
    pub fn is_empty(&self) -> bool {
        self.heads.is_empty() && self.modifiers.is_empty() && self.relations.is_empty()
    }

    /// Check the attachment invariants, returning the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let heads: HashSet<&str> = self.heads.iter().map(String::as_str).collect();
        for (m, h) in &self.modifiers {
            if !heads.contains(h.as_str()) {
                return Err(format!("modifier {m:?} attached to unknown head {h:?}"));
            }
        }
        for (s, r, o) in &self.relations {
            for end in [s, o] {
                if !heads.contains(end.as_str()) {
                    return Err(format!("relation {r:?} endpoint {end:?} is not a head"));
                }
            }
        }
        Ok(())
    }
}

/// Normalised tags of one caption, de-duplicated in order of first
/// occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedTags {
    pub entities: Vec<String>,
    pub attributes: Vec<String>,
    pub actions: Vec<String>,
}

impl ParsedTags {
    pub fn len(&self) -> usize {
        self.entities.len() + self.attributes.len() + self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All tags with their type, entities first.
    pub fn iter(&self) -> impl Iterator<Item = (TagType, &str)> {
        let e = self.entities.iter().map(|s| (TagType::Entity, s.as_str()));
        let a = self.attributes.iter().map(|s| (TagType::Attribute, s.as_str()));
        let r = self.actions.iter().map(|s| (TagType::Action, s.as_str()));
        e.chain(a).chain(r)
    }
}

/// One pre-computed parse in a sidecar file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarEntry {
    /// Zero-based corpus line this parse belongs to. When absent, the
    /// entry's own position in the sidecar file is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default)]
    pub heads: Vec<String>,
    #[serde(default)]
    pub modifiers: Vec<(String, String)>,
    #[serde(default)]
    pub relations: Vec<(String, String, String)>,
}

/// Sidecar parses keyed by corpus line number.
#[derive(Debug, Clone, Default)]
pub struct Sidecar {
    entries: BTreeMap<usize, SidecarEntry>,
}

impl Sidecar {
    /// Load a sidecar file. Any malformed line is an error: a partial sidecar
    /// would silently change which captions get parsed.
    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let mut entries = BTreeMap::new();
        for item in corpus::read_jsonl::<SidecarEntry>(path, Shard::ALL)? {
            let (pos, entry) = item?;
            entries.insert(entry.line.unwrap_or(pos), entry);
        }
        Ok(Self { entries })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = SidecarEntry>) -> Self {
        Self {
            entries: entries
                .into_iter()
                .enumerate()
                .map(|(pos, e)| (e.line.unwrap_or(pos), e))
                .collect(),
        }
    }

    pub fn get(&self, line: usize) -> Option<&SidecarEntry> {
        self.entries.get(&line)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Where a parse comes from.
#[derive(Debug, Clone, Copy)]
pub enum ParseMode<'a> {
    Builtin,
    /// Take the parse for corpus line `line` from a sidecar.
    External {
        line: usize,
        record: Option<&'a SidecarEntry>,
    },
}

impl<'a> ParseMode<'a> {
    pub fn external(sidecar: &'a Sidecar, line: usize) -> Self {
        ParseMode::External {
            line,
            record: sidecar.get(line),
        }
    }
}

/// Parse a caption into heads, modifiers and relations.
///
/// ```
/// use tagmine::semparse::{parse_caption, ParseMode};
/// let p = parse_caption("A red alarm clock is on a wooden desk", ParseMode::Builtin).unwrap();
/// assert_eq!(p.heads, ["alarm clock", "desk"]);
/// ```
pub fn parse_caption(text: &str, mode: ParseMode<'_>) -> Result<ParseResult, ParseError> {
    match mode {
        ParseMode::Builtin => Ok(chunker::parse(text)),
        ParseMode::External { line, record } => {
            let record = record.ok_or(ParseError::MissingSidecar { line })?;
            external(record).map_err(|reason| ParseError::InvalidSidecar { line, reason })
        }
    }
}

fn external(record: &SidecarEntry) -> Result<ParseResult, String> {
    let lower = |s: &str| s.trim().to_lowercase();
    let parse = ParseResult {
        heads: record.heads.iter().map(|h| normalize_tag(h)).collect(),
        modifiers: record
            .modifiers
            .iter()
            .map(|(m, h)| (lower(m), normalize_tag(h)))
            .collect(),
        relations: record
            .relations
            .iter()
            .map(|(s, r, o)| (normalize_tag(s), lower(r), normalize_tag(o)))
            .collect(),
    };
    if let Some(empty) = parse.heads.iter().position(String::is_empty) {
        return Err(format!("head {empty} is empty after normalisation"));
    }
    parse.validate()?;
    Ok(parse)
}

fn push_unique(out: &mut Vec<String>, seen: &mut HashSet<String>, raw: &str) {
    let tag = normalize_tag(raw);
    if !tag.is_empty() && seen.insert(tag.clone()) {
        out.push(tag);
    }
}

/// Map heads to entities, modifiers to attributes and relation words to
/// actions.
pub fn project_tags(parse: &ParseResult) -> ParsedTags {
    let mut tags = ParsedTags::default();
    let mut seen = HashSet::new();
    for h in &parse.heads {
        push_unique(&mut tags.entities, &mut seen, h);
    }
    seen.clear();
    for (m, _) in &parse.modifiers {
        push_unique(&mut tags.attributes, &mut seen, m);
    }
    seen.clear();
    for (_, r, _) in &parse.relations {
        push_unique(&mut tags.actions, &mut seen, r);
    }
    tags
}

/// Builtin parse followed by projection.
pub fn caption_tags(text: &str) -> ParsedTags {
    project_tags(&chunker::parse(text))
}
