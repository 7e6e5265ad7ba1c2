//! Sentence splitting and word segmentation that keeps functional spaces as
//! standalone tokens, plus the lossless detokenizer.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chars::{self, CharClass};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("lexicon has no entries but input contains Khmer spans")]
    EmptyLexicon,
    #[error("malformed lexicon (line {line}): {msg}")]
    MalformedLexicon { line: usize, msg: String },
    #[error("malformed pre-segmented field {field:?}: non-space token contains U+0020")]
    MalformedPresegmented { field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    FunctionalSpace,
    Latin,
    Number,
    Punct,
}

/// A segmented unit. A `FunctionalSpace` surface is exactly one U+0020; no
/// other token surface contains U+0020.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    pub fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        Token {
            surface: surface.into(),
            kind,
        }
    }

    pub fn space() -> Self {
        Token::new(" ", TokenKind::FunctionalSpace)
    }

    pub fn is_space(&self) -> bool {
        self.kind == TokenKind::FunctionalSpace
    }
}

/// Word-frequency lexicon backing the unigram decoder.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, u64>,
    total: u64,
    max_word_chars: usize,
}

impl Lexicon {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut map = BTreeMap::new();
        for (word, count) in entries {
            if word.is_empty() || count == 0 {
                continue;
            }
            *map.entry(word).or_insert(0) += count;
        }
        let total = map.values().sum();
        let max_word_chars = map.keys().map(|w| w.chars().count()).max().unwrap_or(0);
        Lexicon {
            entries: map,
            total,
            max_word_chars,
        }
    }

    /// Parse `word<TAB>count` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, SegmentError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or(SegmentError::MalformedLexicon {
                line: idx + 1,
                msg: "expected word<TAB>count".into(),
            })?;
            let count: u64 = count.trim().parse().map_err(|_| SegmentError::MalformedLexicon {
                line: idx + 1,
                msg: format!("bad count {count:?}"),
            })?;
            if word.is_empty() || count == 0 {
                return Err(SegmentError::MalformedLexicon {
                    line: idx + 1,
                    msg: "empty word or zero count".into(),
                });
            }
            entries.push((word.to_string(), count));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (word, count) in &self.entries {
            let _ = writeln!(out, "{word}\t{count}");
        }
        out
    }

    /// Common-word Khmer lexicon shipped with the crate.
    pub fn default_khmer() -> Self {
        Self::parse(include_str!("../data/lexicon_km.tsv")).expect("bundled lexicon parses")
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, &c)| (w.as_str(), c))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SegmentOptions {
    /// Extra negative log-probability per out-of-vocabulary fallback
    /// character on top of log(1/total).
    pub oov_penalty: f64,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions { oov_penalty: 2.0 }
    }
}

/// Maximum-likelihood unigram segmentation of one span (no spaces, single
/// script). Returns the segment surfaces and the total log score.
///
/// Scores are `ln(count/total)` for lexicon words and `ln(1/total) - penalty`
/// for single-character fallbacks; ties prefer the longer word.
pub fn segment_span(span: &str, lexicon: &Lexicon, opts: &SegmentOptions) -> (Vec<String>, f64) {
    let chars: Vec<char> = span.chars().collect();
    let n = chars.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let total = lexicon.total().max(1) as f64;
    let oov_logp = (1.0 / total).ln() - opts.oov_penalty;
    let max_len = lexicon.max_word_chars.max(1);

    // dp[i]: best (score, backpointer j) for prefix of length i
    let mut dp: Vec<Option<(f64, usize)>> = vec![None; n + 1];
    dp[0] = Some((0.0, 0));
    let mut buf = String::new();
    for i in 1..=n {
        let lo = i.saturating_sub(max_len);
        for j in lo..i {
            let Some((prev, _)) = dp[j] else { continue };
            buf.clear();
            buf.extend(&chars[j..i]);
            let edge = if let Some(count) = lexicon.get(&buf) {
                Some(count as f64 / total)
            } else {
                None
            };
            let score = match edge {
                Some(p) => prev + p.ln(),
                None if i - j == 1 => prev + oov_logp,
                None => continue,
            };
            if dp[i].map_or(true, |(best, _)| score > best) {
                dp[i] = Some((score, j));
            }
        }
    }
    let (score, _) = dp[n].expect("single-character fallback keeps the lattice connected");
    let mut cuts = Vec::new();
    let mut i = n;
    while i > 0 {
        let (_, j) = dp[i].unwrap();
        cuts.push((j, i));
        i = j;
    }
    cuts.reverse();
    let words = cuts
        .into_iter()
        .map(|(j, i)| chars[j..i].iter().collect())
        .collect();
    (words, score)
}

/// Segment normalized text into tokens. Every U+0020 becomes one
/// `FunctionalSpace` token; Latin runs, digit runs and punctuation are atomic;
/// Khmer spans go through the unigram decoder.
pub fn segment_words(text: &str, lexicon: &Lexicon) -> Result<Vec<Token>, SegmentError> {
    segment_words_with(text, lexicon, &SegmentOptions::default())
}

pub fn segment_words_with(
    text: &str,
    lexicon: &Lexicon,
    opts: &SegmentOptions,
) -> Result<Vec<Token>, SegmentError> {
    #[derive(PartialEq, Eq, Clone, Copy)]
    enum Run {
        Khmer,
        Latin,
        Digit,
        OtherLetter,
    }
    let mut tokens = Vec::new();
    let mut run_kind: Option<Run> = None;
    let mut run = String::new();

    let flush = |tokens: &mut Vec<Token>, run: &mut String, kind: Option<Run>| -> Result<(), SegmentError> {
        if run.is_empty() {
            return Ok(());
        }
        match kind {
            Some(Run::Khmer) => {
                if lexicon.is_empty() {
                    return Err(SegmentError::EmptyLexicon);
                }
                let (words, _) = segment_span(run, lexicon, opts);
                tokens.extend(words.into_iter().map(|w| Token::new(w, TokenKind::Word)));
            }
            Some(Run::Latin) => tokens.push(Token::new(run.clone(), TokenKind::Latin)),
            Some(Run::Digit) => tokens.push(Token::new(run.clone(), TokenKind::Number)),
            Some(Run::OtherLetter) => tokens.push(Token::new(run.clone(), TokenKind::Word)),
            None => {}
        }
        run.clear();
        Ok(())
    };

    for c in text.chars() {
        let class = chars::classify(c);
        let next_run = match class {
            CharClass::KhmerLetter => Some(Run::Khmer),
            CharClass::LatinLetter => Some(Run::Latin),
            CharClass::Digit => Some(Run::Digit),
            CharClass::OtherLetter => Some(Run::OtherLetter),
            _ => None,
        };
        match next_run {
            Some(kind) => {
                if run_kind != Some(kind) {
                    flush(&mut tokens, &mut run, run_kind)?;
                    run_kind = Some(kind);
                }
                run.push(c);
            }
            None => {
                flush(&mut tokens, &mut run, run_kind)?;
                run_kind = None;
                if class == CharClass::Space {
                    tokens.push(Token::space());
                } else {
                    // punctuation, emoji, symbols, controls: one token each
                    tokens.push(Token::new(c.to_string(), TokenKind::Punct));
                }
            }
        }
    }
    flush(&mut tokens, &mut run, run_kind)?;
    Ok(tokens)
}

/// Concatenate token surfaces; inverse of `segment_words` on normalized text.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect()
}

pub fn drop_functional_spaces(tokens: &[Token]) -> Vec<Token> {
    tokens.iter().filter(|t| !t.is_space()).cloned().collect()
}

/// Split into sentences whose concatenation is the input. Boundaries fall
/// after U+17D4/U+17D5 and after `.`/`!`/`?` followed by a space or the end
/// of text; a boundary space attaches to the following sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut sentences: Vec<String> = Vec::new();
    let mut start = 0usize;
    for i in 0..chars.len() {
        let boundary = match chars[i] {
            '\u{17D4}' | '\u{17D5}' => true,
            '.' | '!' | '?' => i + 1 == chars.len() || chars[i + 1] == ' ',
            _ => false,
        };
        if boundary {
            sentences.push(chars[start..=i].iter().collect());
            start = i + 1;
        }
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        if tail.chars().all(|c| c == ' ') && !sentences.is_empty() {
            // trailing boundary spaces with no sentence after them
            sentences.last_mut().unwrap().push_str(&tail);
        } else {
            sentences.push(tail);
        }
    }
    sentences
}

/// Token indices where a new sentence begins, by the same boundary rule as
/// [`split_sentences`]. Always starts with 0 for a non-empty token list.
pub fn sentence_starts(tokens: &[Token]) -> Vec<usize> {
    let mut starts = Vec::new();
    if tokens.is_empty() {
        return starts;
    }
    starts.push(0);
    for i in 0..tokens.len() - 1 {
        let t = &tokens[i];
        let last = t.surface.chars().last();
        let terminal = match last {
            Some('\u{17D4}') | Some('\u{17D5}') => true,
            Some('.') | Some('!') | Some('?') => tokens[i + 1].is_space(),
            _ => false,
        };
        if terminal {
            starts.push(i + 1);
        }
    }
    starts
}

pub const PRESEG_SEPARATOR: char = '\u{241F}';

/// Parse one line of pre-segmented input: token surfaces separated by
/// U+241F, spaces passed as literal one-space tokens.
pub fn parse_presegmented(line: &str) -> Result<Vec<Token>, SegmentError> {
    let mut tokens = Vec::new();
    for field in line.split(PRESEG_SEPARATOR) {
        if field.is_empty() {
            continue;
        }
        if field == " " {
            tokens.push(Token::space());
            continue;
        }
        if field.contains(' ') {
            return Err(SegmentError::MalformedPresegmented {
                field: field.to_string(),
            });
        }
        let kind = match chars::classify(field.chars().next().unwrap()) {
            CharClass::LatinLetter => TokenKind::Latin,
            CharClass::Digit => TokenKind::Number,
            CharClass::KhmerLetter | CharClass::OtherLetter => TokenKind::Word,
            _ => TokenKind::Punct,
        };
        tokens.push(Token::new(field, kind));
    }
    Ok(tokens)
}

pub fn write_presegmented(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(&PRESEG_SEPARATOR.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ascii_lexicon(pairs: &[(&str, u64)]) -> Lexicon {
        Lexicon::from_entries(pairs.iter().map(|&(w, c)| (w.to_string(), c)))
    }

    #[test]
    fn viterbi_matches_spec_example() {
        // {ab:9, a:1, b:1, abc:1, c:5}: "abc" -> ab|c because
        // log(9/17)+log(5/17) beats log(1/17)
        let lex = ascii_lexicon(&[("ab", 9), ("a", 1), ("b", 1), ("abc", 1), ("c", 5)]);
        let (words, score) = segment_span("abc", &lex, &SegmentOptions::default());
        assert_eq!(words, vec!["ab", "c"]);
        let expected = (9.0f64 / 17.0).ln() + (5.0f64 / 17.0).ln();
        assert!((score - expected).abs() < 1e-12);
    }

    #[test]
    fn viterbi_oov_fallback() {
        let lex = ascii_lexicon(&[("ab", 2)]);
        let (words, _) = segment_span("abx", &lex, &SegmentOptions::default());
        assert_eq!(words, vec!["ab", "x"]);
    }

    #[test]
    fn mixed_script_kinds() {
        let lex = Lexicon::default_khmer();
        let tokens = segment_words("Khmer2024។", &lex).unwrap();
        let kinds: Vec<_> = tokens.iter().map(|t| (t.surface.as_str(), t.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                ("Khmer", TokenKind::Latin),
                ("2024", TokenKind::Number),
                ("។", TokenKind::Punct),
            ]
        );
    }

    #[test]
    fn functional_space_conservation() {
        let lex = Lexicon::default_khmer();
        let text = "ខ្ញុំទៅ ផ្សារ ថ្ងៃនេះ";
        let tokens = segment_words(text, &lex).unwrap();
        let n_spaces = tokens.iter().filter(|t| t.is_space()).count();
        assert_eq!(n_spaces, 2);
        assert_eq!(detokenize(&tokens), text);
    }

    #[test]
    fn empty_lexicon_error_only_for_khmer() {
        let empty = Lexicon::default();
        assert!(segment_words("ខ្មែរ", &empty).is_err());
        assert!(segment_words("english only", &empty).is_ok());
    }

    #[test]
    fn drop_spaces() {
        let tokens = vec![
            Token::new("a", TokenKind::Latin),
            Token::space(),
            Token::new("b", TokenKind::Latin),
            Token::space(),
            Token::new("c", TokenKind::Latin),
        ];
        let kept = drop_functional_spaces(&tokens);
        assert_eq!(kept.len(), 3);
        assert!(!detokenize(&kept).contains(' '));
        assert_eq!(detokenize(&[]), "");
    }

    #[test]
    fn sentence_split_examples() {
        assert_eq!(split_sentences("A. B."), vec!["A.", " B."]);
        assert_eq!(split_sentences("no terminators here"), vec!["no terminators here"]);
        assert_eq!(split_sentences("x\u{17D4}y\u{17D4}"), vec!["x។", "y។"]);
        assert_eq!(split_sentences("a.b"), vec!["a.b"]);
        assert_eq!(split_sentences("A. "), vec!["A. "]);
        assert_eq!(split_sentences(""), Vec::<String>::new());
        // concatenation identity
        for text in ["ក។ខ៕គ", "One. Two! Three?", "។។។", "a. b. "] {
            assert_eq!(split_sentences(text).concat(), text);
        }
    }

    #[test]
    fn sentence_starts_over_tokens() {
        let lex = Lexicon::default_khmer();
        let tokens = segment_words("កខ។គឃ។", &lex).unwrap();
        let starts = sentence_starts(&tokens);
        assert_eq!(starts[0], 0);
        assert_eq!(starts.len(), 2);
        let terminator = &tokens[starts[1] - 1];
        assert_eq!(terminator.surface, "។");
    }

    #[test]
    fn presegmented_round_trip() {
        let lex = Lexicon::default_khmer();
        let tokens = segment_words("ខ្ញុំទៅ ផ្សារ123", &lex).unwrap();
        let line = write_presegmented(&tokens);
        let parsed = parse_presegmented(&line).unwrap();
        assert_eq!(parsed, tokens);
    }

    #[test]
    fn presegmented_rejects_embedded_space() {
        let line = format!("ab{}c d", PRESEG_SEPARATOR);
        assert!(parse_presegmented(&line).is_err());
    }

    #[test]
    fn lexicon_parse_and_dump() {
        let lex = Lexicon::parse("ក\t5\nខគ\t2\n# comment\n").unwrap();
        assert_eq!(lex.get("ក"), Some(5));
        assert_eq!(lex.total(), 7);
        let dumped = lex.to_file_string();
        let again = Lexicon::parse(&dumped).unwrap();
        assert_eq!(again.total(), 7);
        assert!(Lexicon::parse("word\t0\n").is_err());
        assert!(Lexicon::parse("noseparator\n").is_err());
    }
}
