use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered phone symbols, lowercase, vowels carrying a trailing stress digit.
pub type Pronunciation = Vec<String>;

/// A pronouncing dictionary in CMU text conventions.
///
/// Keys are stored uppercase; lookups are case-insensitive. The first
/// pronunciation listed for a word is its primary one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<Pronunciation>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses dictionary text: `WORD  PH1 PH2 ...`, `;;;` comments, `WORD(2)` alternates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(";;;") {
                continue;
            }
            let mut fields = line.split_whitespace();
            let head = fields.next().unwrap_or_default();
            let word = strip_alternate_marker(head);
            let phones: Vec<String> = fields.map(str::to_ascii_lowercase).collect();
            if phones.is_empty() {
                return Err(Error::Lexicon {
                    line: lineno + 1,
                    msg: format!("no phones for \"{head}\""),
                });
            }
            for p in &phones {
                if let Some(pos) = p.find(|c: char| c.is_ascii_digit()) {
                    if pos != p.len() - 1 {
                        return Err(Error::Lexicon {
                            line: lineno + 1,
                            msg: format!("stress digit must be final in \"{p}\""),
                        });
                    }
                }
            }
            lex.insert(word, phones);
        }
        Ok(lex)
    }

    /// Adds a pronunciation; the first one added for a word stays primary.
    pub fn insert(&mut self, word: &str, pronunciation: Pronunciation) {
        self.entries
            .entry(word.to_uppercase())
            .or_default()
            .push(pronunciation);
    }

    /// Primary pronunciation.
    pub fn lookup(&self, word: &str) -> Option<&Pronunciation> {
        self.entries.get(&word.to_uppercase()).and_then(|v| v.first())
    }

    /// All pronunciations, primary first.
    pub fn alternates(&self, word: &str) -> &[Pronunciation] {
        self.entries
            .get(&word.to_uppercase())
            .map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_uppercase())
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Headwords in uppercase, sorted.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Serializes back to dictionary text, alternates as `WORD(n)`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, prons) in &self.entries {
            for (i, p) in prons.iter().enumerate() {
                let head = if i == 0 {
                    word.clone()
                } else {
                    format!("{word}({})", i + 1)
                };
                out.push_str(&head);
                out.push_str("  ");
                out.push_str(&p.join(" ").to_uppercase());
                out.push('\n');
            }
        }
        out
    }
}

fn strip_alternate_marker(head: &str) -> &str {
    match head.rfind('(') {
        Some(open) if head.ends_with(')') && head[open + 1..head.len() - 1].chars().all(|c| c.is_ascii_digit()) => {
            &head[..open]
        }
        _ => head,
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // cmudict-0.7b ships in Latin-1; only ASCII matters for the entries we use.
    let text = String::from_utf8_lossy(&bytes);
    Lexicon::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insist_is_lowercased() {
        let lex = Lexicon::parse("INSIST  IH2 N S IH1 S T\n").unwrap();
        assert_eq!(
            lex.lookup("insist").unwrap(),
            &["ih2", "n", "s", "ih1", "s", "t"]
        );
        assert_eq!(lex.lookup("InSiSt"), lex.lookup("INSIST"));
    }

    #[test]
    fn comments_skipped() {
        let lex = Lexicon::parse(";;; comment\nA  AH0\n;;; another\n").unwrap();
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn first_pronunciation_wins() {
        let lex = Lexicon::parse("THAT  DH AE1 T\nTHAT(2)  DH AH0 T\n").unwrap();
        assert_eq!(lex.lookup("that").unwrap(), &["dh", "ae1", "t"]);
        assert_eq!(lex.alternates("that").len(), 2);
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn line_without_phones_is_an_error() {
        assert!(matches!(
            Lexicon::parse("A  AH0\nORPHAN\n"),
            Err(Error::Lexicon { line: 2, .. })
        ));
    }

    #[test]
    fn misplaced_stress_digit_rejected() {
        assert!(Lexicon::parse("X  A1H\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let src = "THAT  DH AE1 T\nTHAT(2)  DH AH0 T\nI  AY1\n";
        let lex = Lexicon::parse(src).unwrap();
        assert_eq!(Lexicon::parse(&lex.to_text()).unwrap(), lex);
    }

    #[test]
    fn unreadable_file() {
        assert!(matches!(
            load_lexicon("/definitely/not/here.dict"),
            Err(Error::Io { .. })
        ));
    }
}
