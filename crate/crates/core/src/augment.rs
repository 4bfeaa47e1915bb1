//! Phonemized transcripts with interleaved prosody tokens.
//!
//! Each word becomes `<pK> phones [punct] <bK>`:
//!
//! ```text
//! <p1> ay1 <b0> <p2> ih2 n s ih1 s t , <b2> <p0> dh ae1 t <b0>
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Lexicon;
use crate::labeler::WordAnnotation;

/// Punctuation kept in augmented strings; anything else is dropped.
pub const PUNCTUATION: [char; 4] = [',', '.', '!', '?'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Word(String),
    Punct(char),
}

/// Words and the punctuation attached to them. Every punctuation mark
/// follows a word, and no two marks are adjacent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub utterance_id: String,
    tokens: Vec<Token>,
}

impl Transcript {
    pub fn new(utterance_id: impl Into<String>, tokens: Vec<Token>) -> Result<Self> {
        let mut prev_word = false;
        for (i, t) in tokens.iter().enumerate() {
            match t {
                Token::Word(w) if w.is_empty() => {
                    return Err(Error::InvalidInput(format!("empty word at token {i}")))
                }
                Token::Word(_) => prev_word = true,
                Token::Punct(c) if !PUNCTUATION.contains(c) => {
                    return Err(Error::InvalidInput(format!("unsupported punctuation {c:?}")))
                }
                Token::Punct(c) if !prev_word => {
                    return Err(Error::InvalidInput(format!(
                        "punctuation {c:?} at token {i} does not follow a word"
                    )))
                }
                Token::Punct(_) => prev_word = false,
            }
        }
        Ok(Self {
            utterance_id: utterance_id.into(),
            tokens,
        })
    }

    /// Tokenizes running text. Words are runs of alphanumerics and
    /// apostrophes; `,.!?` attach to the preceding word. Other punctuation,
    /// repeated marks and marks before the first word are dropped.
    pub fn from_text(utterance_id: impl Into<String>, text: &str) -> Self {
        let utterance_id = utterance_id.into();
        let mut tokens = Vec::new();
        let mut word = String::new();
        let mut dropped = String::new();
        let flush = |word: &mut String, tokens: &mut Vec<Token>| {
            let w = word.trim_matches('\'');
            if !w.is_empty() {
                tokens.push(Token::Word(w.to_string()));
            }
            word.clear();
        };
        for c in text.chars() {
            if c.is_alphanumeric() || c == '\'' {
                word.push(c);
                continue;
            }
            flush(&mut word, &mut tokens);
            if c.is_whitespace() {
                continue;
            }
            if PUNCTUATION.contains(&c) && matches!(tokens.last(), Some(Token::Word(_))) {
                tokens.push(Token::Punct(c));
            } else {
                dropped.push(c);
            }
        }
        flush(&mut word, &mut tokens);
        if !dropped.is_empty() {
            log::info!("{utterance_id}: dropped punctuation {dropped:?}");
        }
        Self {
            utterance_id,
            tokens,
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().filter_map(|t| match t {
            Token::Word(w) => Some(w.as_str()),
            Token::Punct(_) => None,
        })
    }

    /// Each word paired with the punctuation mark that follows it, if any.
    pub fn words_with_punct(&self) -> Vec<(&str, Option<char>)> {
        let mut out: Vec<(&str, Option<char>)> = Vec::new();
        for t in &self.tokens {
            match t {
                Token::Word(w) => out.push((w, None)),
                Token::Punct(c) => {
                    if let Some(last) = out.last_mut() {
                        last.1 = Some(*c);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    /// Spell the word as lowercase single-letter symbols.
    #[default]
    Graphemes,
    Error,
}

/// Primary lexicon pronunciation of `word`, or its letters under [`OovPolicy::Graphemes`].
pub fn phonemize(word: &str, lexicon: &Lexicon, policy: OovPolicy) -> Result<Vec<String>> {
    if word.is_empty() {
        return Err(Error::InvalidInput("empty word".into()));
    }
    if let Some(p) = lexicon.lookup(word) {
        return Ok(p.clone());
    }
    match policy {
        OovPolicy::Error => Err(Error::OutOfVocabulary(word.to_string())),
        OovPolicy::Graphemes => {
            let letters: Vec<String> = word
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .map(String::from)
                .collect();
            if letters.is_empty() {
                Err(Error::OutOfVocabulary(word.to_string()))
            } else {
                log::debug!("spelling out-of-vocabulary word {word:?}");
                Ok(letters)
            }
        }
    }
}

/// One word of an augmented string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedWord {
    pub phones: Vec<String>,
    pub punct: Option<char>,
    pub p_class: u8,
    pub b_class: u8,
}

/// Space-separated symbols; see the module docs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedString(Vec<AugmentedWord>);

impl AugmentedString {
    pub fn words(&self) -> &[AugmentedWord] {
        &self.0
    }

    pub fn into_words(self) -> Vec<AugmentedWord> {
        self.0
    }

    pub fn token_count(&self) -> usize {
        self.0
            .iter()
            .map(|w| 2 + w.phones.len() + usize::from(w.punct.is_some()))
            .sum()
    }
}

impl fmt::Display for AugmentedString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sym = |f: &mut fmt::Formatter<'_>, s: &dyn fmt::Display| {
            let sep = if first { "" } else { " " };
            first = false;
            write!(f, "{sep}{s}")
        };
        for w in &self.0 {
            sym(f, &format_args!("<p{}>", w.p_class))?;
            for p in &w.phones {
                sym(f, p)?;
            }
            if let Some(c) = w.punct {
                sym(f, &c)?;
            }
            sym(f, &format_args!("<b{}>", w.b_class))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for AugmentedString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_augmented(s)
    }
}

fn check_class(k: u8) -> Result<u8> {
    if k <= 2 {
        Ok(k)
    } else {
        Err(Error::InvalidInput(format!("label class {k} outside 0..=2")))
    }
}

/// Builds the augmented string for a transcript from per-word labels.
///
/// `annotations` must carry the transcript's words in order (compared
/// case-insensitively).
pub fn augment_transcript(
    transcript: &Transcript,
    annotations: &[WordAnnotation],
    lexicon: &Lexicon,
    policy: OovPolicy,
) -> Result<AugmentedString> {
    let words = transcript.words_with_punct();
    for i in 0..words.len().max(annotations.len()) {
        let same = match (words.get(i), annotations.get(i)) {
            (Some((w, _)), Some(a)) => w.to_lowercase() == a.word.to_lowercase(),
            _ => false,
        };
        if !same {
            return Err(Error::WordSequenceMismatch(i));
        }
    }
    words
        .iter()
        .zip(annotations)
        .map(|(&(w, punct), a)| {
            Ok(AugmentedWord {
                phones: phonemize(w, lexicon, policy)?,
                punct,
                p_class: check_class(a.p_class)?,
                b_class: check_class(a.b_class)?,
            })
        })
        .collect::<Result<_>>()
        .map(AugmentedString)
}

fn class_token(tok: &str, prefix: &str) -> Option<u8> {
    let k = tok.strip_prefix(prefix)?.strip_suffix('>')?;
    match k {
        "0" => Some(0),
        "1" => Some(1),
        "2" => Some(2),
        _ => None,
    }
}

fn is_phone(tok: &str) -> bool {
    tok.chars()
        .all(|c| c.is_alphanumeric() && !c.is_uppercase())
}

/// Inverse of [`augment_transcript`]'s formatting.
pub fn parse_augmented(s: &str) -> Result<AugmentedString> {
    let mut words = Vec::new();
    let mut current: Option<AugmentedWord> = None;
    for (pos, tok) in s.split_whitespace().enumerate() {
        if let Some(k) = class_token(tok, "<p") {
            if current.is_some() {
                return Err(Error::MissingBoundary(words.len()));
            }
            current = Some(AugmentedWord {
                phones: Vec::new(),
                punct: None,
                p_class: k,
                b_class: 0,
            });
        } else if let Some(k) = class_token(tok, "<b") {
            let mut w = current.take().ok_or_else(|| {
                Error::InvalidInput(format!("boundary token at position {pos} outside a word"))
            })?;
            if w.phones.is_empty() {
                return Err(Error::InvalidInput(format!("word {} has no phones", words.len())));
            }
            w.b_class = k;
            words.push(w);
        } else if let Some(c) = single_punct(tok) {
            let w = current
                .as_mut()
                .ok_or(Error::PhonesBeforeProminence(pos))?;
            if w.phones.is_empty() || w.punct.is_some() {
                return Err(Error::InvalidInput(format!("misplaced {c:?} at position {pos}")));
            }
            w.punct = Some(c);
        } else if is_phone(tok) && !tok.starts_with('<') {
            let w = current
                .as_mut()
                .ok_or(Error::PhonesBeforeProminence(pos))?;
            if w.punct.is_some() {
                return Err(Error::MissingBoundary(words.len()));
            }
            w.phones.push(tok.to_string());
        } else {
            return Err(Error::UnknownToken(tok.to_string()));
        }
    }
    if current.is_some() {
        return Err(Error::MissingBoundary(words.len()));
    }
    Ok(AugmentedString(words))
}

fn single_punct(tok: &str) -> Option<char> {
    let mut chars = tok.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if PUNCTUATION.contains(&c) => Some(c),
        _ => None,
    }
}

/// Reads transcripts from `id|text` (LJSpeech metadata) or `id<TAB>text`
/// lines. With more than two `|` fields the last one (the normalized text
/// in LJSpeech) is used.
pub fn read_transcripts(text: &str) -> Result<Vec<Transcript>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let line = line.trim_end_matches('\r');
            let (id, body) = if let Some((id, rest)) = line.split_once('|') {
                (id, rest.rsplit('|').next().unwrap_or(rest))
            } else if let Some((id, rest)) = line.split_once('\t') {
                (id, rest)
            } else {
                return Err(Error::InvalidInput(format!(
                    "transcript line {}: expected id|text or id<TAB>text",
                    i + 1
                )));
            };
            Ok(Transcript::from_text(id.trim(), body))
        })
        .collect()
}

/// Manually set `(p, b)` classes for one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelOverride {
    pub id: String,
    pub labels: Vec<[u8; 2]>,
}

/// Parses an override JSONL file into id → labels.
pub fn read_overrides(text: &str) -> Result<BTreeMap<String, Vec<[u8; 2]>>> {
    let mut out = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let o: LabelOverride = serde_json::from_str(line)?;
        for &[p, b] in &o.labels {
            check_class(p)?;
            check_class(b)?;
        }
        if out.insert(o.id.clone(), o.labels).is_some() {
            return Err(Error::InvalidInput(format!("duplicate override for {}", o.id)));
        }
    }
    Ok(out)
}

/// Replaces the discrete classes of `annotations` with `labels`.
pub fn apply_overrides(annotations: &mut [WordAnnotation], labels: &[[u8; 2]]) -> Result<()> {
    if annotations.len() != labels.len() {
        return Err(Error::WordSequenceMismatch(annotations.len().min(labels.len())));
    }
    for (a, &[p, b]) in annotations.iter_mut().zip(labels) {
        a.p_class = check_class(p)?;
        a.b_class = check_class(b)?;
    }
    Ok(())
}

/// Annotations carrying only words and classes, for transcripts labeled by hand.
pub fn annotations_from_labels<'a>(
    words: impl IntoIterator<Item = &'a str>,
    labels: &[[u8; 2]],
) -> Vec<WordAnnotation> {
    words
        .into_iter()
        .zip(labels)
        .map(|(w, &[p, b])| WordAnnotation {
            word: w.to_string(),
            start: 0.0,
            end: 0.0,
            prominence: 0.0,
            boundary: 0.0,
            p_class: p,
            b_class: b,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn lex() -> Lexicon {
        Lexicon::parse(
            "I  AY1\nINSIST  IH2 N S IH1 S T\nTHAT  DH AE1 T\nTHAT(2)  DH AH0 T\nA  AH0\n",
        )
        .unwrap()
    }

    #[test]
    fn insist_fragment() {
        let t = Transcript::from_text("u", "I insist, that");
        let ann = annotations_from_labels(t.words(), &[[1, 0], [2, 2], [0, 0]]);
        let s = augment_transcript(&t, &ann, &lex(), OovPolicy::Error).unwrap();
        assert_eq!(
            s.to_string(),
            "<p1> ay1 <b0> <p2> ih2 n s ih1 s t , <b2> <p0> dh ae1 t <b0>"
        );
        assert_eq!(s.token_count(), 17);
    }

    #[test]
    fn single_word() {
        let t = Transcript::from_text("u", "a");
        let ann = annotations_from_labels(t.words(), &[[0, 0]]);
        let s = augment_transcript(&t, &ann, &lex(), OovPolicy::Error).unwrap();
        assert_eq!(s.to_string(), "<p0> ah0 <b0>");
    }

    #[test]
    fn parse_fragment() {
        let s = parse_augmented("<p1> ay1 <b0> <p2> ih2 n s ih1 s t , <b2> <p0> dh ae1 t").unwrap_err();
        assert!(matches!(s, Error::MissingBoundary(2)));
        let s = parse_augmented("<p1> ay1 <b0> <p2> ih2 n s ih1 s t , <b2> <p0> dh ae1 t <b0>").unwrap();
        let w = s.words();
        assert_eq!(w.len(), 3);
        assert_eq!((w[0].p_class, w[0].b_class), (1, 0));
        assert_eq!((w[1].p_class, w[1].b_class, w[1].punct), (2, 2, Some(',')));
        assert_eq!((w[2].p_class, w[2].b_class), (0, 0));
        assert_eq!(w[1].phones, ["ih2", "n", "s", "ih1", "s", "t"]);
    }

    #[test]
    fn parse_errors() {
        let e = parse_augmented("ay1 <b0>").unwrap_err();
        assert!(e.to_string().starts_with("phones before prominence token"));
        assert!(matches!(parse_augmented("<p1> ay1"), Err(Error::MissingBoundary(0))));
        assert!(matches!(parse_augmented("<p1> ay1 <p0> ah0 <b0>"), Err(Error::MissingBoundary(0))));
        assert!(matches!(parse_augmented("<p3> ay1 <b0>"), Err(Error::UnknownToken(_))));
        assert!(matches!(parse_augmented("<p1> AY1 <b0>"), Err(Error::UnknownToken(_))));
        assert!(matches!(parse_augmented("<p1> ay1 ; <b0>"), Err(Error::UnknownToken(_))));
        assert!(parse_augmented("<p1> <b0>").is_err());
        assert!(parse_augmented("<p1> ay1 , ah0 <b0>").is_err());
        assert!(parse_augmented("<b0>").is_err());
        assert_eq!(parse_augmented("").unwrap().words().len(), 0);
    }

    #[test]
    fn sequence_mismatch_reports_index() {
        let t = Transcript::from_text("u", "I insist, that");
        let short = annotations_from_labels(["i", "insist"], &[[0, 0], [0, 0]]);
        let e = augment_transcript(&t, &short, &lex(), OovPolicy::Error).unwrap_err();
        assert_eq!(e.to_string(), "word-sequence mismatch at index 2");
        let wrong = annotations_from_labels(["i", "resist", "that"], &[[0, 0]; 3]);
        assert!(matches!(
            augment_transcript(&t, &wrong, &lex(), OovPolicy::Error),
            Err(Error::WordSequenceMismatch(1))
        ));
    }

    #[test]
    fn phonemize_lookup_and_oov() {
        let l = lex();
        assert_eq!(phonemize("Insist", &l, OovPolicy::Error).unwrap(), ["ih2", "n", "s", "ih1", "s", "t"]);
        assert_eq!(phonemize("that", &l, OovPolicy::Error).unwrap(), ["dh", "ae1", "t"]);
        assert_eq!(phonemize("zzqx", &l, OovPolicy::Graphemes).unwrap(), ["z", "z", "q", "x"]);
        assert!(matches!(phonemize("zzqx", &l, OovPolicy::Error), Err(Error::OutOfVocabulary(_))));
        assert!(phonemize("", &l, OovPolicy::Graphemes).is_err());
    }

    #[test]
    fn tokenizer_keeps_only_supported_punctuation() {
        let t = Transcript::from_text("u", "\"Well\"; it's -- fine?! (yes).");
        let words: Vec<_> = t.words().collect();
        assert_eq!(words, ["Well", "it's", "fine", "yes"]);
        assert_eq!(
            t.words_with_punct(),
            [("Well", None), ("it's", None), ("fine", Some('?')), ("yes", Some('.'))]
        );
        assert!(Transcript::new("u", vec![Token::Punct(',')]).is_err());
        assert!(Transcript::new(
            "u",
            vec![Token::Word("a".into()), Token::Punct(','), Token::Punct('.')]
        )
        .is_err());
    }

    #[test]
    fn transcript_files() {
        let ts = read_transcripts("LJ001|Raw 1.|Raw one.\nfx002\tHi there.\n\n").unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].utterance_id, "LJ001");
        assert_eq!(ts[0].words().collect::<Vec<_>>(), ["Raw", "one"]);
        assert_eq!(ts[1].words().count(), 2);
        assert!(read_transcripts("no separator").is_err());
    }

    #[test]
    fn overrides() {
        let o = read_overrides("{\"id\": \"u1\", \"labels\": [[2, 0], [0, 2]]}\n").unwrap();
        assert_eq!(o["u1"], [[2, 0], [0, 2]]);
        assert!(read_overrides("{\"id\": \"u1\", \"labels\": [[3, 0]]}").is_err());
        let mut ann = annotations_from_labels(["a", "b"], &[[0, 0], [1, 1]]);
        apply_overrides(&mut ann, &o["u1"]).unwrap();
        assert_eq!((ann[0].p_class, ann[1].b_class), (2, 2));
        assert!(apply_overrides(&mut ann, &[[0, 0]]).is_err());
    }

    fn arb_word() -> impl Strategy<Value = (usize, Option<char>, u8, u8)> {
        (
            0..fixtures::lexicon().len() + 3,
            prop::option::of(prop::sample::select(PUNCTUATION.to_vec())),
            0u8..3,
            0u8..3,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(spec in prop::collection::vec(arb_word(), 1..12)) {
            let lex = fixtures::lexicon();
            let vocab: Vec<String> = lex.words().map(str::to_lowercase).collect();
            let oov = ["zzqx", "qat", "xyzzy"];
            let mut tokens = Vec::new();
            let mut labels = Vec::new();
            for &(w, punct, p, b) in &spec {
                let word = vocab.get(w).cloned().unwrap_or_else(|| oov[w - vocab.len()].to_string());
                tokens.push(Token::Word(word));
                if let Some(c) = punct {
                    tokens.push(Token::Punct(c));
                }
                labels.push([p, b]);
            }
            let t = Transcript::new("r", tokens).unwrap();
            let ann = annotations_from_labels(t.words(), &labels);
            let aug = augment_transcript(&t, &ann, &lex, OovPolicy::Graphemes).unwrap();
            let text = aug.to_string();
            prop_assert_eq!(text.split(' ').count(), aug.token_count());
            let back = parse_augmented(&text).unwrap();
            prop_assert_eq!(&back, &aug);
            for ((w, punct), (bw, l)) in t.words_with_punct().iter().zip(back.words().iter().zip(&labels)) {
                prop_assert_eq!(&bw.phones, &phonemize(w, &lex, OovPolicy::Graphemes).unwrap());
                prop_assert_eq!(bw.punct, *punct);
                prop_assert_eq!([bw.p_class, bw.b_class], *l);
            }
        }
    }
}
