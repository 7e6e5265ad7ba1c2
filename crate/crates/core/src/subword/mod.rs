//! Unigram subword model: vocabulary, Viterbi encoding, and training.
//!
//! Two boundary regimes are supported: `WordSegmented` treats every word
//! token as its own unit so pieces never cross word boundaries, while
//! `RawPhrase` only breaks units at functional spaces.

mod lattice;
mod trainer;

pub use trainer::{
    em_train, prune_vocab, removal_losses, seed_vocab, train, EmReport, TrainerConfig,
};

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::segment::{Token, TokenKind};
use lattice::PieceSet;

#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("target size {target} is below the {charset} mandatory character pieces")]
    TargetBelowCharsetSize { target: usize, charset: usize },
    #[error("invalid piece id {0}")]
    InvalidId(u32),
    #[error("malformed vocab file: {0}")]
    MalformedVocab(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("candidate pieces do not cover unit {0:?}")]
    UncoveredUnit(String),
}

/// A subword piece with its unigram log probability (nats).
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub surface: String,
    pub log_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    WordSegmented,
    RawPhrase,
}

impl TokenizerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenizerMode::WordSegmented => "word",
            TokenizerMode::RawPhrase => "phrase",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "word" => Some(TokenizerMode::WordSegmented),
            "phrase" => Some(TokenizerMode::RawPhrase),
            _ => None,
        }
    }
}

/// Reserved pieces. Ids are assigned in struct order starting at 0, language
/// tags after `space`, corpus pieces after the specials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Specials {
    pub unk: String,
    pub bos: String,
    pub eos: String,
    pub mask: String,
    /// Stands in for one functional space; never a substring of any piece.
    pub space: String,
    pub lang_tags: Vec<String>,
}

impl Default for Specials {
    fn default() -> Self {
        Specials {
            unk: "<unk>".into(),
            bos: "<s>".into(),
            eos: "</s>".into(),
            mask: "<mask>".into(),
            space: "\u{2581}".into(),
            lang_tags: vec!["<km>".into(), "<en>".into()],
        }
    }
}

impl Specials {
    pub fn count(&self) -> usize {
        5 + self.lang_tags.len()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        let mut v = vec![
            self.unk.as_str(),
            self.bos.as_str(),
            self.eos.as_str(),
            self.mask.as_str(),
            self.space.as_str(),
        ];
        v.extend(self.lang_tags.iter().map(|s| s.as_str()));
        v
    }
}

pub const UNK_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const MASK_ID: u32 = 3;
pub const SPACE_ID: u32 = 4;

/// Trained unigram vocabulary: reserved specials plus scored pieces.
#[derive(Debug, Clone)]
pub struct SubwordVocab {
    pub mode: TokenizerMode,
    pub specials: Specials,
    pub target_size: usize,
    pieces: Vec<Piece>,
    set: PieceSet,
    min_log_prob: f64,
}

impl SubwordVocab {
    pub fn new(
        mode: TokenizerMode,
        specials: Specials,
        target_size: usize,
        mut pieces: Vec<Piece>,
    ) -> Result<Self, SubwordError> {
        // A corpus piece colliding with a special surface would make ids
        // ambiguous; drop it (its text encodes through other pieces or unk).
        let reserved: Vec<String> = specials.surfaces().iter().map(|s| s.to_string()).collect();
        pieces.retain(|p| !reserved.contains(&p.surface));
        let mut seen = std::collections::HashSet::new();
        for p in &pieces {
            if p.surface.is_empty() {
                return Err(SubwordError::MalformedVocab("empty piece surface".into()));
            }
            if !seen.insert(p.surface.clone()) {
                return Err(SubwordError::MalformedVocab(format!(
                    "duplicate piece {:?}",
                    p.surface
                )));
            }
            if p.surface.contains(' ') || p.surface.contains(&specials.space) {
                return Err(SubwordError::MalformedVocab(format!(
                    "piece {:?} contains a space or the space marker",
                    p.surface
                )));
            }
        }
        let set = PieceSet::new(&pieces);
        let min_log_prob = pieces
            .iter()
            .map(|p| p.log_prob)
            .filter(|lp| lp.is_finite())
            .fold(f64::INFINITY, f64::min);
        let min_log_prob = if min_log_prob.is_finite() {
            min_log_prob
        } else {
            -20.0
        };
        Ok(SubwordVocab {
            mode,
            specials,
            target_size,
            pieces,
            set,
            min_log_prob,
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.specials.count() + self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn lang_tag_id(&self, tag: &str) -> Option<u32> {
        self.specials
            .lang_tags
            .iter()
            .position(|t| t == tag)
            .map(|i| (5 + i) as u32)
    }

    pub fn piece_id(&self, surface: &str) -> Option<u32> {
        self.pieces
            .iter()
            .position(|p| p.surface == surface)
            .map(|i| (self.specials.count() + i) as u32)
    }

    /// Surface for an id; specials return their reserved surfaces.
    pub fn surface_of(&self, id: u32) -> Result<&str, SubwordError> {
        let ns = self.specials.count() as u32;
        if id < ns {
            let s = match id {
                UNK_ID => &self.specials.unk,
                BOS_ID => &self.specials.bos,
                EOS_ID => &self.specials.eos,
                MASK_ID => &self.specials.mask,
                SPACE_ID => &self.specials.space,
                _ => &self.specials.lang_tags[(id - 5) as usize],
            };
            Ok(s)
        } else {
            self.pieces
                .get((id - ns) as usize)
                .map(|p| p.surface.as_str())
                .ok_or(SubwordError::InvalidId(id))
        }
    }

    /// Viterbi-encode one boundary unit (no spaces inside). Characters with
    /// no covering piece emit `unk`.
    pub fn encode_unit(&self, unit: &str) -> Vec<u32> {
        let chars: Vec<char> = unit.chars().collect();
        let n = chars.len();
        if n == 0 {
            return Vec::new();
        }
        let ns = self.specials.count() as u32;
        // viterbi with an extra unk edge per character so encoding is total
        let unk_score = self.min_log_prob - 10.0;
        let mut best: Vec<Option<(f64, usize, Option<u32>)>> = vec![None; n + 1];
        best[0] = Some((0.0, 0, None));
        let mut buf = String::new();
        for end in 1..=n {
            let lo = end.saturating_sub(self.set.max_len());
            for start in lo..end {
                let Some((prev, _, _)) = best[start] else { continue };
                buf.clear();
                buf.extend(&chars[start..end]);
                let cand = if let Some((idx, lp)) = self.set.lookup(&buf) {
                    Some((prev + lp, Some(ns + idx as u32)))
                } else if end - start == 1 {
                    Some((prev + unk_score, None))
                } else {
                    None
                };
                if let Some((score, id)) = cand {
                    if best[end].map_or(true, |(b, _, _)| score > b) {
                        best[end] = Some((score, start, id));
                    }
                }
            }
        }
        let mut ids = Vec::new();
        let mut pos = n;
        while pos > 0 {
            let (_, start, id) = best[pos].expect("unk edges keep the lattice total");
            ids.push(id.unwrap_or(UNK_ID));
            pos = start;
        }
        ids.reverse();
        ids
    }

    /// Best log score of `encode_unit`'s segmentation (unk edges included).
    pub fn encode_unit_score(&self, unit: &str) -> f64 {
        let chars: Vec<char> = unit.chars().collect();
        self.set
            .viterbi(&chars)
            .map(|(_, s)| s)
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Encode a token sequence under the vocabulary's boundary mode.
    pub fn encode_tokens(&self, tokens: &[Token]) -> Vec<u32> {
        let mut ids = Vec::new();
        match self.mode {
            TokenizerMode::WordSegmented => {
                for t in tokens {
                    if t.is_space() {
                        ids.push(SPACE_ID);
                    } else {
                        ids.extend(self.encode_unit(&t.surface));
                    }
                }
            }
            TokenizerMode::RawPhrase => {
                let mut phrase = String::new();
                for t in tokens {
                    if t.is_space() {
                        if !phrase.is_empty() {
                            ids.extend(self.encode_unit(&phrase));
                            phrase.clear();
                        }
                        ids.push(SPACE_ID);
                    } else {
                        phrase.push_str(&t.surface);
                    }
                }
                if !phrase.is_empty() {
                    ids.extend(self.encode_unit(&phrase));
                }
            }
        }
        ids
    }

    /// Encode raw text: phrases between U+0020 are the boundary units.
    pub fn encode_text(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        let mut phrase = String::new();
        for c in text.chars() {
            if c == ' ' {
                if !phrase.is_empty() {
                    ids.extend(self.encode_unit(&phrase));
                    phrase.clear();
                }
                ids.push(SPACE_ID);
            } else {
                phrase.push(c);
            }
        }
        if !phrase.is_empty() {
            ids.extend(self.encode_unit(&phrase));
        }
        ids
    }

    /// Decode ids to text. The space piece re-emits one U+0020; bos/eos and
    /// language tags decode to nothing; unk and mask emit their surfaces.
    pub fn decode(&self, ids: &[u32]) -> Result<String, SubwordError> {
        let mut out = String::new();
        for &id in ids {
            match id {
                SPACE_ID => out.push(' '),
                BOS_ID | EOS_ID => {}
                UNK_ID => out.push_str(&self.specials.unk),
                MASK_ID => out.push_str(&self.specials.mask),
                _ => {
                    let ns = self.specials.count() as u32;
                    if id < ns {
                        // language tag
                    } else {
                        out.push_str(self.surface_of(id)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Serialize: one header line (version, mode, specials, target size),
    /// then `piece<TAB>log_prob` in id order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "#khtext-vocab\tv=1\tmode={}\tunk={}\tbos={}\teos={}\tmask={}\tspace={}\tlangs={}\ttarget={}\n",
            self.mode.as_str(),
            self.specials.unk,
            self.specials.bos,
            self.specials.eos,
            self.specials.mask,
            self.specials.space,
            self.specials.lang_tags.join(","),
            self.target_size,
        );
        for p in &self.pieces {
            let _ = writeln!(out, "{}\t{}", p.surface, p.log_prob);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SubwordError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| SubwordError::MalformedVocab("empty file".into()))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("#khtext-vocab") {
            return Err(SubwordError::MalformedVocab(
                "missing #khtext-vocab header".into(),
            ));
        }
        let mut mode = None;
        let mut specials = Specials::default();
        let mut target_size = 0usize;
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| SubwordError::MalformedVocab(format!("bad header field {field:?}")))?;
            match key {
                "v" => {
                    if value != "1" {
                        return Err(SubwordError::MalformedVocab(format!(
                            "unsupported version {value}"
                        )));
                    }
                }
                "mode" => {
                    mode = TokenizerMode::parse(value);
                    if mode.is_none() {
                        return Err(SubwordError::MalformedVocab(format!("bad mode {value:?}")));
                    }
                }
                "unk" => specials.unk = value.into(),
                "bos" => specials.bos = value.into(),
                "eos" => specials.eos = value.into(),
                "mask" => specials.mask = value.into(),
                "space" => specials.space = value.into(),
                "langs" => {
                    specials.lang_tags = value.split(',').map(|s| s.to_string()).collect()
                }
                "target" => {
                    target_size = value.parse().map_err(|_| {
                        SubwordError::MalformedVocab(format!("bad target {value:?}"))
                    })?
                }
                other => {
                    return Err(SubwordError::MalformedVocab(format!(
                        "unknown header key {other:?}"
                    )))
                }
            }
        }
        let mode =
            mode.ok_or_else(|| SubwordError::MalformedVocab("header missing mode".into()))?;
        let mut pieces = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lp) = line.split_once('\t').ok_or_else(|| {
                SubwordError::MalformedVocab(format!("line {}: expected piece<TAB>log_prob", idx + 2))
            })?;
            let log_prob: f64 = lp.parse().map_err(|_| {
                SubwordError::MalformedVocab(format!("line {}: bad log_prob {lp:?}", idx + 2))
            })?;
            pieces.push(Piece {
                surface: surface.to_string(),
                log_prob,
            });
        }
        SubwordVocab::new(mode, specials, target_size, pieces)
    }

    /// Structural invariants: unique surfaces, normalized probabilities,
    /// isolated space marker.
    pub fn check_invariants(&self) -> Result<(), SubwordError> {
        let mass: f64 = self.pieces.iter().map(|p| p.log_prob.exp()).sum();
        if self.pieces.is_empty() || (mass - 1.0).abs() > 1e-6 {
            return Err(SubwordError::MalformedVocab(format!(
                "piece probabilities sum to {mass}, expected 1"
            )));
        }
        for p in &self.pieces {
            if p.surface.contains(&self.specials.space) {
                return Err(SubwordError::MalformedVocab(format!(
                    "space marker inside piece {:?}",
                    p.surface
                )));
            }
        }
        Ok(())
    }
}

/// Boundary units implied by the mode: word tokens, or whole phrases between
/// functional spaces. Spaces themselves are never units.
pub fn boundary_units(tokens: &[Token], mode: TokenizerMode) -> Vec<String> {
    let mut units = Vec::new();
    match mode {
        TokenizerMode::WordSegmented => {
            for t in tokens {
                if !t.is_space() {
                    units.push(t.surface.clone());
                }
            }
        }
        TokenizerMode::RawPhrase => {
            let mut phrase = String::new();
            for t in tokens {
                if t.is_space() {
                    if !phrase.is_empty() {
                        units.push(std::mem::take(&mut phrase));
                    }
                } else {
                    phrase.push_str(&t.surface);
                }
            }
            if !phrase.is_empty() {
                units.push(phrase);
            }
        }
    }
    units
}

/// Deduplicated boundary units with frequencies, the training input.
#[derive(Debug, Clone, Default)]
pub struct UnitCorpus {
    units: Vec<(String, u64)>,
}

impl UnitCorpus {
    pub fn from_units(units: impl IntoIterator<Item = String>) -> Self {
        let mut map: std::collections::BTreeMap<String, u64> = Default::default();
        for u in units {
            if !u.is_empty() {
                *map.entry(u).or_insert(0) += 1;
            }
        }
        UnitCorpus {
            units: map.into_iter().collect(),
        }
    }

    pub fn from_token_docs(docs: &[Vec<Token>], mode: TokenizerMode) -> Self {
        Self::from_units(docs.iter().flat_map(|d| boundary_units(d, mode)))
    }

    pub fn units(&self) -> &[(String, u64)] {
        &self.units
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Character frequencies over the corpus (unit frequency weighted).
    pub fn char_freqs(&self) -> std::collections::BTreeMap<char, u64> {
        let mut freqs = std::collections::BTreeMap::new();
        for (unit, count) in &self.units {
            for c in unit.chars() {
                *freqs.entry(c).or_insert(0) += count;
            }
        }
        freqs
    }
}

/// Count pieces that straddle a word-token boundary when `ids` encodes
/// `tokens`. Under `WordSegmented` encoding this is always zero; a
/// `RawPhrase` vocabulary can merge across words inside a phrase.
pub fn count_cross_boundary_pieces(
    tokens: &[Token],
    ids: &[u32],
    vocab: &SubwordVocab,
) -> Result<usize, SubwordError> {
    // char offsets (in the space-free concatenation) where a token starts
    let mut boundaries = std::collections::BTreeSet::new();
    let mut offset = 0usize;
    for t in tokens {
        if t.is_space() {
            continue;
        }
        boundaries.insert(offset);
        offset += t.surface.chars().count();
    }
    boundaries.insert(offset);

    let mut crossing = 0usize;
    let mut pos = 0usize;
    for &id in ids {
        if id == SPACE_ID || id == BOS_ID || id == EOS_ID {
            continue;
        }
        let len = vocab.surface_of(id)?.chars().count();
        if id == UNK_ID {
            // unknown characters are single-char fallbacks during encoding
            pos += 1;
            continue;
        }
        let crosses = boundaries
            .range((pos + 1)..(pos + len))
            .next()
            .is_some();
        if crosses {
            crossing += 1;
        }
        pos += len;
    }
    Ok(crossing)
}
