//! Deterministic rule-based chunker.
//!
//! Three passes over a caption:
//!
//! 1. tokenise into lowercase words and punctuation boundaries, folding
//!    multi-word prepositions ("in front of") into one token;
//! 2. assign each word a coarse class from closed word lists, suffix rules
//!    and its left context (a word right after a determiner is read as part
//!    of a noun phrase, the same word after a noun as a verb);
//! 3. group `modifier* noun+` runs into noun phrases and link consecutive
//!    phrases through verbs and prepositions.
//!
//! Linking rules:
//!
//! - a verb takes the clause subject (the first noun phrase of the clause) as
//!   its subject and the next noun phrase as its object; a preposition right
//!   after a verb is absorbed into it ("running on the beach" -> `run`);
//! - a bare preposition links the noun phrase just before it to the next one,
//!   except after a copula where it links the clause subject;
//! - copulas never become relations; "of", "for", "like" and "about" join
//!   phrases without a relation;
//! - a verb with no object becomes a modifier of its subject, and so does a
//!   predicative adjective ("the sky is blue");
//! - relative pronouns (who, which, that) make the preceding phrase the
//!   subject of the new clause; other subordinators and sentence ends reset
//!   the subject;
//! - coordinated phrases ("a dog and a cat") are separate heads with no
//!   relation between them, and nothing is distributed over the
//!   coordination.
//!
//! Determiners, numerals, adverbs and pronouns never produce tags. Quantity
//! nouns followed by "of" ("a group of people") are dropped in favour of the
//! phrase they quantify.

use std::collections::HashSet;
use std::sync::LazyLock;

use super::lexicon;
use super::normalize::{ing_stem, singular, TABLES};
use super::ParseResult;

struct WordSets {
    determiners: HashSet<&'static str>,
    numerals: HashSet<&'static str>,
    quantity: HashSet<&'static str>,
    copulas: HashSet<&'static str>,
    auxiliaries: HashSet<&'static str>,
    pronouns: HashSet<&'static str>,
    conjunctions: HashSet<&'static str>,
    clause_markers: HashSet<&'static str>,
    adverbs: HashSet<&'static str>,
    prepositions: HashSet<&'static str>,
    non_relational: HashSet<&'static str>,
    adjectives: HashSet<&'static str>,
    suffix_exceptions: HashSet<&'static str>,
    ly_exceptions: HashSet<&'static str>,
    compound_ing: HashSet<&'static str>,
    nominal_adjectives: HashSet<&'static str>,
    unmarked_plurals: HashSet<&'static str>,
}

static WORDS: LazyLock<WordSets> = LazyLock::new(|| {
    fn set(words: &[&'static str]) -> HashSet<&'static str> {
        words.iter().copied().collect()
    }
    WordSets {
        determiners: set(lexicon::DETERMINERS),
        numerals: set(lexicon::NUMERALS),
        quantity: set(lexicon::QUANTITY_NOUNS),
        copulas: set(lexicon::COPULAS),
        auxiliaries: set(lexicon::AUXILIARIES),
        pronouns: set(lexicon::PRONOUNS),
        conjunctions: set(lexicon::CONJUNCTIONS),
        clause_markers: set(lexicon::CLAUSE_MARKERS),
        adverbs: set(lexicon::ADVERBS),
        prepositions: set(lexicon::PREPOSITIONS),
        non_relational: set(lexicon::NON_RELATIONAL_PREPOSITIONS),
        adjectives: set(lexicon::ADJECTIVES),
        suffix_exceptions: set(lexicon::SUFFIX_NOUN_EXCEPTIONS),
        ly_exceptions: set(lexicon::LY_EXCEPTIONS),
        compound_ing: set(lexicon::COMPOUND_ING),
        nominal_adjectives: set(lexicon::NOMINAL_ADJECTIVES),
        unmarked_plurals: set(lexicon::UNMARKED_PLURALS),
    }
});

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Word(String),
    /// A multi-word preposition, already joined with spaces.
    Phrase(String),
    Possessive,
    Comma,
    Sentence,
}

const RELATIVE_PRONOUNS: &[&str] = &["who", "which", "that", "whose"];

fn tokenize(text: &str) -> Vec<Token> {
    let mut raw = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, raw: &mut Vec<Token>| {
        if word.is_empty() {
            return;
        }
        let w = std::mem::take(word);
        let w = w.trim_matches(|c| c == '-' || c == '\'' || c == '\u{2019}').to_string();
        if w.is_empty() {
            return;
        }
        split_clitics(&w, raw);
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '-' || ch == '\'' || ch == '\u{2019}' || ch == '&' {
            word.extend(ch.to_lowercase());
            continue;
        }
        flush(&mut word, &mut raw);
        match ch {
            '.' | '!' | '?' | ';' => raw.push(Token::Sentence),
            ',' | ':' | '(' | ')' => raw.push(Token::Comma),
            _ => {}
        }
    }
    flush(&mut word, &mut raw);
    fold_multiword(raw)
}

fn split_clitics(w: &str, out: &mut Vec<Token>) {
    let w = w.replace('\u{2019}', "'");
    if let Some(base) = w.strip_suffix("n't") {
        if !base.is_empty() {
            out.push(Token::Word(base.to_string()));
        }
        out.push(Token::Word("not".into()));
        return;
    }
    if let Some(base) = w.strip_suffix("'s") {
        if base.is_empty() {
            return;
        }
        out.push(Token::Word(base.to_string()));
        let s = &*WORDS;
        if s.pronouns.contains(base) || base == "there" || base == "that" || base == "what" {
            out.push(Token::Word("is".into()));
        } else {
            out.push(Token::Possessive);
        }
        return;
    }
    for suffix in ["'re", "'m", "'ve", "'ll", "'d"] {
        if let Some(base) = w.strip_suffix(suffix) {
            if !base.is_empty() {
                out.push(Token::Word(base.to_string()));
            }
            return;
        }
    }
    if let Some(base) = w.strip_suffix('\'') {
        out.push(Token::Word(base.to_string()));
        out.push(Token::Possessive);
        return;
    }
    out.push(Token::Word(w));
}

fn fold_multiword(raw: Vec<Token>) -> Vec<Token> {
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    'outer: while i < raw.len() {
        for phrase in lexicon::MULTIWORD_PREPOSITIONS {
            let n = phrase.len();
            if i + n <= raw.len()
                && phrase
                    .iter()
                    .zip(&raw[i..i + n])
                    .all(|(p, t)| matches!(t, Token::Word(w) if w == p))
            {
                out.push(Token::Phrase(phrase.join(" ")));
                i += n;
                continue 'outer;
            }
        }
        out.push(raw[i].clone());
        i += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VerbForm {
    Base,
    ThirdPerson,
    Ing,
    Past,
}

/// Lexicon lookup for a verb form, returning the base form.
fn verb_lemma(word: &str) -> Option<(String, VerbForm)> {
    let t = &*TABLES;
    if let Some(base) = t.irregular_verb.get(word) {
        let form = if word.ends_with("ing") {
            VerbForm::Ing
        } else if word.ends_with('s') {
            VerbForm::ThirdPerson
        } else {
            VerbForm::Past
        };
        return Some(((*base).to_string(), form));
    }
    if t.verbs.contains(word) {
        return Some((word.to_string(), VerbForm::Base));
    }
    if word.ends_with("ing") {
        return ing_stem(word)
            .filter(|b| t.verbs.contains(b.as_str()))
            .map(|b| (b, VerbForm::Ing));
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if word.ends_with("eed") {
            return None;
        }
        let mut candidates = vec![word[..word.len() - 1].to_string(), stem.to_string()];
        let b = stem.as_bytes();
        if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
            candidates.push(stem[..stem.len() - 1].to_string());
        }
        if let Some(y) = stem.strip_suffix('i') {
            candidates.push(format!("{y}y"));
        }
        return candidates
            .into_iter()
            .find(|c| t.verbs.contains(c.as_str()))
            .map(|c| (c, VerbForm::Past));
    }
    if word.ends_with('s') && word.len() > 2 {
        let mut candidates = Vec::new();
        if let Some(s) = singular(word) {
            candidates.push(s);
        }
        candidates.push(word[..word.len() - 1].to_string());
        if let Some(es) = word.strip_suffix("es") {
            candidates.push(es.to_string());
        }
        if let Some(ies) = word.strip_suffix("ies") {
            candidates.push(format!("{ies}y"));
        }
        return candidates
            .into_iter()
            .find(|c| t.verbs.contains(c.as_str()))
            .map(|c| (c, VerbForm::ThirdPerson));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Class {
    Det,
    Num,
    Adj(String),
    Noun(String),
    Verb { lemma: String },
    Prep(String),
    Copula,
    Pron,
    Conj,
    Clause { relative: bool },
    Adv,
    Possessive,
    Comma,
    Sentence,
}

/// What the previous word leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Context {
    /// Start of a clause.
    Start,
    /// Inside a noun phrase that has no head yet.
    NounPhrase,
    AfterNoun { plural: bool },
    AfterCopula,
    /// Predicative adjectives after a copula ("is brown and").
    Predicate,
    /// Right after a content verb, where an object is expected.
    AfterVerb,
    Other,
}

fn is_adverb(word: &str) -> bool {
    let s = &*WORDS;
    s.adverbs.contains(word)
        || (word.len() > 4 && word.ends_with("ly") && !s.ly_exceptions.contains(word))
}

fn has_adjective_suffix(word: &str) -> bool {
    let s = &*WORDS;
    !s.suffix_exceptions.contains(word)
        && lexicon::ADJECTIVE_SUFFIXES
            .iter()
            .any(|(suf, min)| word.len() > *min && word.ends_with(suf))
}

fn is_numeral(word: &str) -> bool {
    WORDS.numerals.contains(word)
        || (word.chars().next().is_some_and(|c| c.is_ascii_digit())
            && word.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.'))
}

/// Open-class words: anything that could head or modify a noun phrase.
fn is_open_class(word: &str) -> bool {
    let s = &*WORDS;
    !(s.determiners.contains(word)
        || is_numeral(word)
        || s.copulas.contains(word)
        || s.auxiliaries.contains(word)
        || s.pronouns.contains(word)
        || s.conjunctions.contains(word)
        || s.clause_markers.contains(word)
        || s.prepositions.contains(word)
        || is_adverb(word))
}

fn classify_word(word: &str, ctx: Context, next_open: bool) -> Class {
    let s = &*WORDS;
    let opens_phrase = matches!(ctx, Context::Start | Context::NounPhrase);
    if is_numeral(word) {
        return Class::Num;
    }
    if word == "that" {
        return if matches!(ctx, Context::AfterNoun { .. }) {
            Class::Clause { relative: true }
        } else {
            Class::Det
        };
    }
    if s.determiners.contains(word) {
        return Class::Det;
    }
    if s.copulas.contains(word) || s.auxiliaries.contains(word) {
        return Class::Copula;
    }
    if s.pronouns.contains(word) {
        return Class::Pron;
    }
    if s.conjunctions.contains(word) {
        return Class::Conj;
    }
    if s.clause_markers.contains(word) {
        return Class::Clause {
            relative: RELATIVE_PRONOUNS.contains(&word),
        };
    }
    if s.prepositions.contains(word) {
        return Class::Prep(word.to_string());
    }
    if s.adjectives.contains(word) {
        if matches!(ctx, Context::AfterNoun { .. }) && !next_open && s.nominal_adjectives.contains(word) {
            return Class::Noun(word.to_string());
        }
        return Class::Adj(word.to_string());
    }
    if is_adverb(word) {
        return Class::Adv;
    }
    if TABLES.nominal_ing.contains(word) {
        return Class::Noun(word.to_string());
    }
    let verb = verb_lemma(word);
    if word.len() > 4 && word.ends_with("ing") {
        if opens_phrase {
            return if s.compound_ing.contains(word) && next_open {
                Class::Noun(word.to_string())
            } else if next_open {
                Class::Adj(word.to_string())
            } else {
                Class::Noun(word.to_string())
            };
        }
        let lemma = verb
            .map(|(l, _)| l)
            .or_else(|| ing_stem(word))
            .unwrap_or_else(|| word.to_string());
        return Class::Verb { lemma };
    }
    if let Some((lemma, form)) = verb {
        return match ctx {
            Context::Start | Context::NounPhrase => {
                if form == VerbForm::Past {
                    Class::Adj(word.to_string())
                } else {
                    Class::Noun(word.to_string())
                }
            }
            Context::AfterNoun { plural: false } if form == VerbForm::Base => {
                Class::Noun(word.to_string())
            }
            Context::AfterVerb if matches!(form, VerbForm::Base | VerbForm::ThirdPerson) => {
                Class::Noun(word.to_string())
            }
            _ => Class::Verb { lemma },
        };
    }
    if word.len() > 4 && word.ends_with("ed") && !word.ends_with("eed") {
        return Class::Adj(word.to_string());
    }
    if has_adjective_suffix(word) {
        return Class::Adj(word.to_string());
    }
    Class::Noun(word.to_string())
}

fn classify(tokens: &[Token]) -> Vec<Class> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut ctx = Context::Start;
    for (i, tok) in tokens.iter().enumerate() {
        let class = match tok {
            Token::Possessive => Class::Possessive,
            Token::Comma => Class::Comma,
            Token::Sentence => Class::Sentence,
            Token::Phrase(p) => Class::Prep(p.clone()),
            Token::Word(w) => {
                let next_open = matches!(tokens.get(i + 1), Some(Token::Word(n)) if is_open_class(n));
                classify_word(w, ctx, next_open)
            }
        };
        ctx = match &class {
            Class::Adj(_) if matches!(ctx, Context::AfterCopula | Context::Predicate) => Context::Predicate,
            Class::Det | Class::Num | Class::Adj(_) | Class::Prep(_) | Class::Possessive => {
                Context::NounPhrase
            }
            Class::Noun(w) => Context::AfterNoun {
                plural: singular(w).is_some() || WORDS.unmarked_plurals.contains(w.as_str()),
            },
            Class::Copula => Context::AfterCopula,
            Class::Comma | Class::Sentence | Class::Clause { .. } => Context::Start,
            Class::Adv => ctx,
            Class::Conj => match ctx {
                Context::NounPhrase | Context::AfterNoun { .. } => Context::NounPhrase,
                Context::Predicate => Context::Predicate,
                _ => Context::Other,
            },
            Class::Verb { .. } => Context::AfterVerb,
            Class::Pron => Context::Other,
        };
        out.push(class);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Item {
    Phrase { head: String, modifiers: Vec<String> },
    Dangling(Vec<String>),
    Verb { lemma: String },
    Prep(String),
    Copula,
    Pron,
    Conj,
    Clause { relative: bool },
    Possessive,
    Comma,
    Sentence,
}

/// Adjectives left without a head. After a determiner, a trailing
/// noun-capable adjective heads the phrase instead ("a toy").
fn dangling(adjs: Vec<String>, after_det: bool) -> Item {
    match adjs.split_last() {
        Some((last, rest)) if after_det && WORDS.nominal_adjectives.contains(last.as_str()) => Item::Phrase {
            head: super::normalize_tag(last),
            modifiers: rest.to_vec(),
        },
        _ => Item::Dangling(adjs),
    }
}

fn chunk(classes: &[Class]) -> Vec<Item> {
    let mut items = Vec::new();
    let mut adjs: Vec<String> = Vec::new();
    let mut nouns: Vec<String> = Vec::new();
    let mut after_det = false;
    let mut i = 0;
    while i < classes.len() {
        let class = &classes[i];
        if let Class::Noun(w) = class {
            nouns.push(w.clone());
            i += 1;
            continue;
        }
        if !nouns.is_empty() {
            let is_quantity = nouns.len() == 1 && WORDS.quantity.contains(nouns[0].as_str());
            if is_quantity && matches!(class, Class::Prep(p) if p == "of") {
                // "a large group of people": drop the quantity word and its modifiers
                nouns.clear();
                adjs.clear();
                after_det = false;
                i += 1;
                continue;
            }
            let head = super::normalize_tag(&nouns.join(" "));
            nouns.clear();
            after_det = false;
            if !head.is_empty() {
                items.push(Item::Phrase {
                    head,
                    modifiers: std::mem::take(&mut adjs),
                });
            }
        }
        match class {
            Class::Det if adjs.is_empty() => after_det = true,
            Class::Det | Class::Num | Class::Adv => {}
            Class::Adj(w) => adjs.push(w.clone()),
            Class::Conj
                if !adjs.is_empty()
                    && matches!(classes.get(i + 1), Some(Class::Adj(_))) => {}
            Class::Comma
                if !adjs.is_empty()
                    && matches!(classes.get(i + 1), Some(Class::Adj(_))) => {}
            other => {
                if !adjs.is_empty() {
                    items.push(dangling(std::mem::take(&mut adjs), after_det));
                }
                after_det = false;
                items.push(match other {
                    Class::Verb { lemma } => Item::Verb {
                        lemma: lemma.clone(),
                    },
                    Class::Prep(p) => Item::Prep(p.clone()),
                    Class::Copula => Item::Copula,
                    Class::Pron => Item::Pron,
                    Class::Conj => Item::Conj,
                    Class::Clause { relative } => Item::Clause {
                        relative: *relative,
                    },
                    Class::Possessive => Item::Possessive,
                    Class::Comma => Item::Comma,
                    Class::Sentence => Item::Sentence,
                    Class::Det | Class::Num | Class::Adv | Class::Adj(_) | Class::Noun(_) => {
                        unreachable!("handled above")
                    }
                });
            }
        }
        i += 1;
    }
    if !nouns.is_empty() {
        let head = super::normalize_tag(&nouns.join(" "));
        if !head.is_empty() {
            items.push(Item::Phrase {
                head,
                modifiers: std::mem::take(&mut adjs),
            });
        }
    }
    if !adjs.is_empty() {
        items.push(dangling(adjs, after_det));
    }
    items
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Subject {
    Unset,
    Pronoun,
    Head(String),
}

#[derive(Debug)]
enum Pending {
    Verb { lemma: String, subject: Option<String> },
    Prep { word: String, subject: Option<String> },
}

#[derive(Default)]
struct Linker {
    result: ParseResult,
}

impl Linker {
    fn flush(&mut self, pending: &mut Option<Pending>) {
        if let Some(Pending::Verb {
            lemma,
            subject: Some(s),
        }) = pending.take()
        {
            self.result.modifiers.push((lemma, s));
        }
    }

    fn run(mut self, items: Vec<Item>) -> ParseResult {
        let mut subject = Subject::Unset;
        let mut last: Option<String> = None;
        let mut pending: Option<Pending> = None;
        let mut after_copula = false;
        for item in items {
            match item {
                Item::Phrase { head, modifiers } => {
                    self.result.heads.push(head.clone());
                    for m in modifiers {
                        self.result.modifiers.push((m, head.clone()));
                    }
                    match pending.take() {
                        Some(Pending::Verb {
                            lemma,
                            subject: Some(s),
                        }) => self.result.relations.push((s, lemma, head.clone())),
                        Some(Pending::Prep {
                            word,
                            subject: Some(s),
                        }) if !WORDS.non_relational.contains(word.as_str()) => {
                            self.result.relations.push((s, word, head.clone()))
                        }
                        _ => {}
                    }
                    if subject == Subject::Unset {
                        subject = Subject::Head(head.clone());
                    }
                    last = Some(head);
                    after_copula = false;
                }
                Item::Dangling(adjs) => {
                    let target = match (&subject, after_copula) {
                        (Subject::Head(h), true) => Some(h.clone()),
                        (Subject::Pronoun, true) => None,
                        _ => last.clone(),
                    };
                    if let Some(h) = target {
                        for a in adjs {
                            self.result.modifiers.push((a, h.clone()));
                        }
                    }
                }
                Item::Verb { lemma } => {
                    self.flush(&mut pending);
                    let subj = match &subject {
                        Subject::Head(h) => Some(h.clone()),
                        Subject::Pronoun => None,
                        Subject::Unset => last.clone(),
                    };
                    pending = Some(Pending::Verb {
                        lemma,
                        subject: subj,
                    });
                    after_copula = false;
                }
                Item::Prep(word) => {
                    if !matches!(pending, Some(Pending::Verb { .. })) {
                        let subj = if after_copula {
                            match &subject {
                                Subject::Head(h) => Some(h.clone()),
                                _ => None,
                            }
                        } else {
                            last.clone()
                        };
                        pending = Some(Pending::Prep {
                            word,
                            subject: subj,
                        });
                    }
                }
                Item::Copula => after_copula = true,
                Item::Pron => {
                    self.flush(&mut pending);
                    if subject == Subject::Unset {
                        subject = Subject::Pronoun;
                    }
                    last = None;
                }
                Item::Conj => {
                    if matches!(pending, Some(Pending::Prep { .. })) {
                        pending = None;
                    }
                }
                Item::Clause { relative } => {
                    self.flush(&mut pending);
                    subject = match (&last, relative) {
                        (Some(h), true) => Subject::Head(h.clone()),
                        _ => Subject::Unset,
                    };
                    after_copula = false;
                }
                Item::Possessive => {
                    // the possessor is not the subject: "the man's hat is ..."
                    if matches!((&subject, &last), (Subject::Head(s), Some(l)) if s == l) {
                        subject = Subject::Unset;
                    }
                }
                Item::Comma => {
                    self.flush(&mut pending);
                    after_copula = false;
                }
                Item::Sentence => {
                    self.flush(&mut pending);
                    subject = Subject::Unset;
                    last = None;
                    after_copula = false;
                }
            }
        }
        self.flush(&mut pending);
        self.result
    }
}

/// Parse one caption with the builtin rules. Total on any input.
pub(crate) fn parse(text: &str) -> ParseResult {
    let tokens = tokenize(text);
    let classes = classify(&tokens);
    let items = chunk(&classes);
    Linker::default().run(items)
}
