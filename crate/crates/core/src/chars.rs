//! Character classification over documented Unicode ranges.
//!
//! Everything downstream (filtering profiles, segmentation, language
//! identification) shares these tables so the counts stay consistent.

/// Coarse class of a single scalar value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    /// U+0020 only; other whitespace is handled by the invisible set.
    Space,
    KhmerLetter,
    LatinLetter,
    Digit,
    Punct,
    Emoji,
    OtherLetter,
    Other,
}

/// Khmer consonants and independent vowels (base characters of a cluster).
pub fn is_khmer_base(c: char) -> bool {
    ('\u{1780}'..='\u{17B3}').contains(&c)
}

/// Khmer dependent vowel signs.
pub fn is_khmer_vowel(c: char) -> bool {
    ('\u{17B6}'..='\u{17C5}').contains(&c)
}

/// Khmer register shifters (muusikatoan, triisap).
pub fn is_khmer_shifter(c: char) -> bool {
    c == '\u{17C9}' || c == '\u{17CA}'
}

pub const KHMER_COENG: char = '\u{17D2}';

/// Khmer signs that follow the vowel in a canonical cluster.
pub fn is_khmer_final_sign(c: char) -> bool {
    matches!(
        c,
        '\u{17C6}' | '\u{17C7}' | '\u{17C8}' | '\u{17CB}' | '\u{17CD}' | '\u{17CE}'
            | '\u{17CF}' | '\u{17D0}' | '\u{17DD}'
    )
}

/// Khmer punctuation signs U+17D4..=U+17DA (khan, bariyoosan, camnuc pii kuuh, ...).
pub fn is_khmer_sign_punct(c: char) -> bool {
    ('\u{17D4}'..='\u{17DA}').contains(&c)
}

pub fn is_khmer_digit(c: char) -> bool {
    ('\u{17E0}'..='\u{17E9}').contains(&c)
}

/// Any letter-like codepoint of the Khmer block (excludes digits and signs
/// classified as punctuation).
pub fn is_khmer_letter(c: char) -> bool {
    let cp = c as u32;
    (0x1780..=0x17FF).contains(&cp) && !is_khmer_sign_punct(c) && !is_khmer_digit(c)
}

pub fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (('\u{00C0}'..='\u{024F}').contains(&c) && c.is_alphabetic())
}

/// Digits of any numbering system we expect in the corpora.
pub fn is_digit(c: char) -> bool {
    c.is_ascii_digit() || is_khmer_digit(c) || c.is_numeric()
}

/// Punctuation: ASCII punctuation, common Latin-1 marks, the General
/// Punctuation block (printing members), CJK corner brackets, fullwidth
/// forms, and the Khmer signs U+17D4..=U+17DA.
pub fn is_punct(c: char) -> bool {
    if c.is_ascii_punctuation() || is_khmer_sign_punct(c) {
        return true;
    }
    matches!(c as u32,
        0x00A1 | 0x00A7 | 0x00AB | 0x00B6 | 0x00B7 | 0x00BB | 0x00BF
        | 0x2010..=0x2027
        | 0x2030..=0x205E
        | 0x3001..=0x3003 | 0x3008..=0x3011 | 0x3014..=0x301F
        | 0xFF01..=0xFF0F | 0xFF1A..=0xFF20 | 0xFF3B..=0xFF40 | 0xFF5B..=0xFF65)
}

/// Emoji presentation ranges (pictographs, transport, supplemental symbols,
/// dingbats, regional indicators).
pub fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F300..=0x1F5FF
        | 0x1F600..=0x1F64F
        | 0x1F680..=0x1F6FF
        | 0x1F900..=0x1F9FF
        | 0x1FA70..=0x1FAFF
        | 0x2600..=0x26FF
        | 0x2700..=0x27BF
        | 0x1F1E6..=0x1F1FF)
}

pub fn classify(c: char) -> CharClass {
    if c == ' ' {
        CharClass::Space
    } else if is_khmer_digit(c) || c.is_ascii_digit() {
        CharClass::Digit
    } else if is_khmer_letter(c) {
        CharClass::KhmerLetter
    } else if is_latin_letter(c) {
        CharClass::LatinLetter
    } else if is_emoji(c) {
        CharClass::Emoji
    } else if is_punct(c) {
        CharClass::Punct
    } else if c.is_numeric() {
        CharClass::Digit
    } else if c.is_alphabetic() {
        CharClass::OtherLetter
    } else {
        CharClass::Other
    }
}
