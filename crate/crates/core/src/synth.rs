//! Seeded synthetic corpus generation and contamination injectors used by
//! the property and acceptance suites (feature `testkit`).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curate::{Document, Lang};
use crate::segment::Lexicon;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_docs: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Probability of a functional space after a word.
    pub space_prob: f64,
    /// Probability of a Latin word instead of a Khmer one.
    pub latin_prob: f64,
    /// Probability of a digit run instead of a word.
    pub digit_prob: f64,
    /// Words per sentence before a khan terminator.
    pub sentence_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_docs: 100,
            min_words: 20,
            max_words: 60,
            space_prob: 0.18,
            latin_prob: 0.06,
            digit_prob: 0.03,
            sentence_words: 12,
        }
    }
}

const LATIN_WORDS: [&str; 12] = [
    "Khmer", "news", "report", "online", "video", "photo", "update", "info", "web", "post",
    "media", "live",
];

fn khmer_words() -> Vec<String> {
    Lexicon::default_khmer()
        .iter()
        .map(|(w, _)| w.to_string())
        .collect()
}

/// Khmer-like documents: lexicon words, occasional functional spaces, Latin
/// words, digit runs, and khan-terminated sentences.
pub fn generate_docs(cfg: &SynthConfig) -> Vec<Document> {
    let words = khmer_words();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut docs = Vec::with_capacity(cfg.n_docs);
    for i in 0..cfg.n_docs {
        let n_words = rng.random_range(cfg.min_words..=cfg.max_words);
        let mut text = String::new();
        let mut since_sentence = 0usize;
        for w in 0..n_words {
            let roll: f64 = rng.random();
            if roll < cfg.digit_prob {
                let n: u32 = rng.random_range(1..=9999);
                text.push_str(&n.to_string());
            } else if roll < cfg.digit_prob + cfg.latin_prob {
                text.push_str(LATIN_WORDS[rng.random_range(0..LATIN_WORDS.len())]);
            } else {
                text.push_str(&words[rng.random_range(0..words.len())]);
            }
            since_sentence += 1;
            if since_sentence >= cfg.sentence_words {
                text.push('\u{17D4}');
                since_sentence = 0;
            } else if w + 1 < n_words && rng.random_bool(cfg.space_prob) {
                text.push(' ');
            }
        }
        docs.push(Document {
            id: format!("synth-{i:05}"),
            text,
            lang: Lang::Km,
            source: "synth".into(),
        });
    }
    docs
}

const INJECTABLE_INVISIBLE: [char; 6] = [
    '\u{200B}', '\u{200C}', '\u{200D}', '\u{FEFF}', '\u{00AD}', '\u{2060}',
];

/// Insert invisible characters after roughly `rate` of the characters.
pub fn inject_invisible(text: &str, rate: f64, rng: &mut impl Rng) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    for c in text.chars() {
        out.push(c);
        if rng.random_bool(rate) {
            out.push(INJECTABLE_INVISIBLE[rng.random_range(0..INJECTABLE_INVISIBLE.len())]);
        }
    }
    out
}

/// Rewrite roughly `rate` of the composed vowels into their two-codepoint
/// variant encodings (the inverse of the canonicalization rules).
pub fn inject_encoding_variants(text: &str, rate: f64, rng: &mut impl Rng) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '\u{17BE}' if rng.random_bool(rate) => {
                out.push('\u{17C1}');
                out.push('\u{17B8}');
            }
            '\u{17C4}' if rng.random_bool(rate) => {
                out.push('\u{17C1}');
                out.push('\u{17B6}');
            }
            _ => out.push(c),
        }
    }
    out
}

const FUZZ_KHMER: [char; 18] = [
    'ក', 'ខ', 'គ', 'ឃ', 'ង', 'ច', 'ជ', 'ញ', 'ត', 'ន', 'ប', 'ម', 'រ', 'ល', 'ស', 'ហ',
    '\u{17B6}', '\u{17BE}',
];
const FUZZ_MARKS: [char; 6] = [
    '\u{17B8}', '\u{17C1}', '\u{17C9}', '\u{17D2}', '\u{17C6}', '\u{17BB}',
];
const FUZZ_OTHER: [char; 14] = [
    'a', 'b', 'z', 'A', '0', '9', '.', '!', '?', '\u{17D4}', '\u{17D5}', ' ', '៛', 'ท',
];

/// Arbitrary mixed-script strings (Khmer letters and marks, Latin, digits,
/// punctuation, spaces, and invisible characters) for fuzz suites.
pub fn fuzz_string(rng: &mut impl Rng, max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    let mut out = String::with_capacity(len * 3);
    for _ in 0..len {
        let roll: f64 = rng.random();
        let c = if roll < 0.45 {
            FUZZ_KHMER[rng.random_range(0..FUZZ_KHMER.len())]
        } else if roll < 0.70 {
            FUZZ_MARKS[rng.random_range(0..FUZZ_MARKS.len())]
        } else if roll < 0.95 {
            FUZZ_OTHER[rng.random_range(0..FUZZ_OTHER.len())]
        } else {
            INJECTABLE_INVISIBLE[rng.random_range(0..INJECTABLE_INVISIBLE.len())]
        };
        out.push(c);
    }
    out
}
