//! Surface-form normalisation for tags.
//!
//! Lowercases, strips surrounding punctuation, singularises plural nouns and
//! reduces "-ing" forms to the verb stem. In a multi-word phrase only the
//! final word is reduced ("alarm clocks" -> "alarm clock"). The single-word
//! rewrite is iterated to a fixed point, which makes [`normalize_tag`]
//! idempotent.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use super::lexicon;

pub(crate) struct Tables {
    pub nominal_ing: HashSet<&'static str>,
    pub invariant: HashSet<&'static str>,
    pub ie_nouns: HashSet<&'static str>,
    pub oes_nouns: HashSet<&'static str>,
    pub irregular_plural: HashMap<&'static str, &'static str>,
    pub irregular_verb: HashMap<&'static str, &'static str>,
    pub verbs: HashSet<&'static str>,
}

pub(crate) static TABLES: LazyLock<Tables> = LazyLock::new(|| Tables {
    nominal_ing: lexicon::NOMINAL_ING.iter().copied().collect(),
    invariant: lexicon::INVARIANT_NOUNS.iter().copied().collect(),
    ie_nouns: lexicon::IE_NOUNS.iter().copied().collect(),
    oes_nouns: lexicon::OES_NOUNS.iter().copied().collect(),
    irregular_plural: lexicon::IRREGULAR_PLURALS.iter().copied().collect(),
    irregular_verb: lexicon::IRREGULAR_VERBS.iter().copied().collect(),
    verbs: lexicon::VERBS.iter().copied().collect(),
});

/// Canonical form of a tag string.
///
/// ```
/// use tagmine::semparse::normalize_tag;
/// assert_eq!(normalize_tag("Dogs"), "dog");
/// assert_eq!(normalize_tag("running"), "run");
/// assert_eq!(normalize_tag("alarm clock"), "alarm clock");
/// ```
pub fn normalize_tag(raw: &str) -> String {
    let mut cur = normalize_once(raw);
    for _ in 0..16 {
        let next = normalize_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn normalize_once(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let words: Vec<&str> = lowered
        .split_whitespace()
        .map(strip_edges)
        .filter(|w| !w.is_empty())
        .collect();
    let Some((last, rest)) = words.split_last() else {
        return String::new();
    };
    let mut out = String::with_capacity(lowered.len());
    for w in rest {
        out.push_str(w);
        out.push(' ');
    }
    out.push_str(&reduce_word(last));
    out
}

fn strip_edges(word: &str) -> &str {
    let mut w = word.trim_matches(|c: char| !c.is_alphanumeric());
    while let Some(s) = w.strip_suffix("'s").or_else(|| w.strip_suffix("\u{2019}s")) {
        w = s.trim_matches(|c: char| !c.is_alphanumeric());
    }
    w
}

/// Apply [`reduce_step`] until nothing changes.
pub(crate) fn reduce_word(word: &str) -> String {
    let mut cur = word.to_string();
    // Every step strictly shortens the word or leaves it alone, except the
    // "+e" restorations; the bound keeps a pathological cycle finite.
    for _ in 0..8 {
        let next = reduce_step(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

/// Vowel test where "y" counts as a vowel after a consonant.
fn is_vowel_at(w: &[u8], i: usize) -> bool {
    is_vowel(w[i]) || (w[i] == b'y' && i > 0 && !is_vowel(w[i - 1]))
}

/// Number of vowel-consonant sequences, in the sense of Porter's measure.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let v = is_vowel_at(w, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

/// Ends consonant-vowel-consonant with the last consonant not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && !is_vowel_at(w, n - 3)
        && is_vowel_at(w, n - 2)
        && !is_vowel_at(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| is_vowel_at(w, i))
}

/// Rule-based stem of an "-ing" stem candidate: undouble a final doubled
/// consonant, otherwise restore a dropped silent "e" where the ending
/// requires one.
pub(crate) fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b[n - 1]) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    let last = b[n - 1];
    let needs_e = matches!(last, b'c' | b'v' | b'u')
        || (n >= 2
            && last == b'l'
            && matches!(b[n - 2], b'b' | b'c' | b'd' | b'f' | b'g' | b'k' | b'p' | b't' | b'z'))
        || stem.ends_with("dg")
        || stem.ends_with("rg")
        || stem.ends_with("ns")
        || stem.ends_with("rs")
        || stem.ends_with("ps")
        || (measure(b) == 1 && ends_cvc(b));
    if needs_e {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

/// Base form of an "-ing" word, or `None` when the word is not reducible.
/// Lexicon verbs win over the rule-based stem.
pub(crate) fn ing_stem(word: &str) -> Option<String> {
    let t = &*TABLES;
    if let Some(base) = t.irregular_verb.get(word) {
        if word.ends_with("ing") {
            return Some((*base).to_string());
        }
    }
    let stem = word.strip_suffix("ing")?;
    if stem.len() < 2 || !has_vowel(stem.as_bytes()) || t.nominal_ing.contains(word) {
        return None;
    }
    let ruled = restore_stem(stem);
    let candidates = [ruled.as_str(), stem, &format!("{stem}e"), &stem[..stem.len() - 1]];
    for c in candidates {
        if t.verbs.contains(c) {
            return Some(c.to_string());
        }
    }
    Some(ruled)
}

/// Singular of a plural noun, or `None` when the word does not look plural.
pub(crate) fn singular(word: &str) -> Option<String> {
    let t = &*TABLES;
    if let Some(s) = t.irregular_plural.get(word) {
        return Some((*s).to_string());
    }
    if t.invariant.contains(word) || word.len() < 4 || !word.ends_with('s') {
        return None;
    }
    if word.ends_with("ss") || word.ends_with("us") || word.ends_with("is") {
        return None;
    }
    if let Some(stem) = word.strip_suffix("ies") {
        let ie = &word[..word.len() - 1];
        if t.ie_nouns.contains(ie) {
            return Some(ie.to_string());
        }
        if stem.len() >= 2 {
            return Some(format!("{stem}y"));
        }
        return Some(ie.to_string());
    }
    if let Some(stem) = word.strip_suffix("oes") {
        let o = format!("{stem}o");
        if t.oes_nouns.contains(o.as_str()) {
            return Some(o);
        }
        return Some(word[..word.len() - 1].to_string());
    }
    for es in ["sses", "xes", "ches", "shes", "zzes"] {
        if word.ends_with(es) {
            return Some(word[..word.len() - 2].to_string());
        }
    }
    Some(word[..word.len() - 1].to_string())
}

fn reduce_step(word: &str) -> String {
    if word.len() <= 2 || !word.is_ascii() || word.contains(|c: char| c.is_ascii_digit()) {
        return word.to_string();
    }
    if word.ends_with("ing") {
        if let Some(base) = ing_stem(word) {
            return base;
        }
    }
    singular(word).unwrap_or_else(|| word.to_string())
}
