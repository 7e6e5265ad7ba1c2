//! Denoising pre-training data: sentence-aligned chunking and Poisson span
//! masking over word tokens, producing id pairs ready for a seq2seq trainer.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curate::Lang;
use crate::segment::{sentence_starts, Token};
use crate::subword::{SubwordVocab, TokenizerMode, EOS_ID, MASK_ID, SPACE_ID};

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("mask spans overlap")]
    OverlappingSpans,
    #[error("mask span [{start}, {start}+{len}) out of range for {n} tokens")]
    SpanOutOfRange { start: usize, len: usize, n: usize },
    #[error("sentence starts must begin at 0 and strictly increase within range")]
    BadSentenceStarts,
}

/// Where the mask budget is computed: per sentence within a chunk, or over
/// the whole chunk at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetScope {
    PerSentence,
    PerChunk,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub mask_ratio: f64,
    pub poisson_lambda: f64,
    pub max_seq_len: usize,
    pub rng_seed: u64,
    pub budget_scope: BudgetScope,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            mask_ratio: 0.35,
            poisson_lambda: 3.5,
            max_seq_len: 1024,
            rng_seed: 0,
            budget_scope: BudgetScope::PerSentence,
        }
    }
}

/// One noised/original id pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub doc_id: String,
    pub chunk_index: usize,
    pub source_ids: Vec<u32>,
    pub target_ids: Vec<u32>,
}

/// Contiguous masked word range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct Chunk<T> {
    pub items: Vec<T>,
    /// True when this chunk came from hard-splitting a sentence longer than
    /// the maximum length, so its boundary is not a sentence start.
    pub degenerate_split: bool,
}

/// Greedy sentence-aligned chunking: whole sentences are packed while they
/// fit, every split lands on a sentence start, and a single over-long
/// sentence is hard-split at the maximum length (flagged degenerate).
/// Chunk concatenation reproduces the input exactly.
pub fn chunk_document<T: Clone>(
    tokens: &[T],
    starts: &[usize],
    max_seq_len: usize,
) -> Result<Vec<Chunk<T>>, NoiseError> {
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    if starts.first() != Some(&0) {
        return Err(NoiseError::BadSentenceStarts);
    }
    for w in starts.windows(2) {
        if w[1] <= w[0] || w[1] >= tokens.len() {
            return Err(NoiseError::BadSentenceStarts);
        }
    }
    let max = max_seq_len.max(1);
    let mut chunks: Vec<Chunk<T>> = Vec::new();
    let mut cur: Vec<T> = Vec::new();
    for (i, &s) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(tokens.len());
        let sentence = &tokens[s..end];
        if sentence.len() > max {
            if !cur.is_empty() {
                chunks.push(Chunk {
                    items: std::mem::take(&mut cur),
                    degenerate_split: false,
                });
            }
            for piece in sentence.chunks(max) {
                chunks.push(Chunk {
                    items: piece.to_vec(),
                    degenerate_split: true,
                });
            }
        } else if cur.len() + sentence.len() <= max {
            cur.extend_from_slice(sentence);
        } else {
            chunks.push(Chunk {
                items: std::mem::take(&mut cur),
                degenerate_split: false,
            });
            cur.extend_from_slice(sentence);
        }
    }
    if !cur.is_empty() {
        chunks.push(Chunk {
            items: cur,
            degenerate_split: false,
        });
    }
    Ok(chunks)
}

/// One draw from a zero-truncated Poisson: zero draws are resampled.
pub fn zero_truncated_poisson(rng: &mut impl Rng, lambda: f64) -> usize {
    let dist = Poisson::new(lambda).expect("lambda > 0");
    loop {
        let v: f64 = dist.sample(rng);
        if v >= 1.0 {
            return v as usize;
        }
    }
}

/// Sample disjoint mask spans over `n_words` positions until
/// `round(mask_ratio * n_words)` words are covered. Lengths come from a
/// zero-truncated Poisson; the final span is truncated to land on the budget
/// exactly. Starts are drawn uniformly over still-unmasked positions with
/// rejection on overlap.
pub fn sample_spans(n_words: usize, cfg: &NoiseConfig, rng: &mut impl Rng) -> Vec<Span> {
    let budget = (cfg.mask_ratio * n_words as f64).round() as usize;
    let budget = budget.min(n_words);
    let mut spans: Vec<Span> = Vec::new();
    if budget == 0 || n_words == 0 {
        return spans;
    }
    let mut free = vec![true; n_words];
    let mut masked = 0usize;
    while masked < budget {
        let mut len = zero_truncated_poisson(rng, cfg.poisson_lambda).min(budget - masked);
        loop {
            let free_positions: Vec<usize> =
                (0..n_words).filter(|&i| free[i]).collect();
            let mut placed = None;
            for _ in 0..64 {
                let start = free_positions[rng.random_range(0..free_positions.len())];
                if start + len <= n_words && free[start..start + len].iter().all(|&f| f) {
                    placed = Some(start);
                    break;
                }
            }
            if let Some(start) = placed {
                for f in &mut free[start..start + len] {
                    *f = false;
                }
                masked += len;
                spans.push(Span { start, len });
                break;
            }
            // no room at this length anywhere near the draws; shrink
            len -= 1;
            debug_assert!(len >= 1, "a free position always admits a length-1 span");
        }
    }
    spans.sort_by_key(|s| s.start);
    spans
}

/// Replace each span by exactly one `mask` element; everything outside spans
/// is unchanged and in order. Adjacent spans yield adjacent masks.
pub fn apply_mask<T: Clone>(
    tokens: &[T],
    spans: &[Span],
    mask: T,
) -> Result<Vec<T>, NoiseError> {
    let n = tokens.len();
    let mut sorted: Vec<Span> = spans.to_vec();
    sorted.sort_by_key(|s| s.start);
    for s in &sorted {
        if s.len == 0 || s.start + s.len > n {
            return Err(NoiseError::SpanOutOfRange {
                start: s.start,
                len: s.len,
                n,
            });
        }
    }
    for w in sorted.windows(2) {
        if w[0].start + w[0].len > w[1].start {
            return Err(NoiseError::OverlappingSpans);
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut i = 0usize;
    let mut next = sorted.iter().peekable();
    while i < n {
        if let Some(s) = next.peek() {
            if s.start == i {
                out.push(mask.clone());
                i += s.len;
                next.next();
                continue;
            }
        }
        out.push(tokens[i].clone());
        i += 1;
    }
    Ok(out)
}

/// A normalized, segmented document ready for noising.
#[derive(Debug, Clone)]
pub struct SegmentedDoc {
    pub id: String,
    pub lang: Lang,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone)]
enum MaskedToken {
    Tok(Token),
    Mask,
}

fn encode_masked(items: &[MaskedToken], vocab: &SubwordVocab) -> Vec<u32> {
    let mut ids = Vec::new();
    match vocab.mode {
        TokenizerMode::WordSegmented => {
            for item in items {
                match item {
                    MaskedToken::Mask => ids.push(MASK_ID),
                    MaskedToken::Tok(t) if t.is_space() => ids.push(SPACE_ID),
                    MaskedToken::Tok(t) => ids.extend(vocab.encode_unit(&t.surface)),
                }
            }
        }
        TokenizerMode::RawPhrase => {
            // masks and spaces both end the current phrase
            let mut phrase = String::new();
            for item in items {
                let flush_then: Option<u32> = match item {
                    MaskedToken::Mask => Some(MASK_ID),
                    MaskedToken::Tok(t) if t.is_space() => Some(SPACE_ID),
                    MaskedToken::Tok(t) => {
                        phrase.push_str(&t.surface);
                        None
                    }
                };
                if let Some(id) = flush_then {
                    if !phrase.is_empty() {
                        ids.extend(vocab.encode_unit(&phrase));
                        phrase.clear();
                    }
                    ids.push(id);
                }
            }
            if !phrase.is_empty() {
                ids.extend(vocab.encode_unit(&phrase));
            }
        }
    }
    ids
}

fn lang_tag_id(vocab: &SubwordVocab, lang: Lang) -> Option<u32> {
    let tag = match lang {
        Lang::Km => "<km>",
        Lang::En => "<en>",
    };
    vocab.lang_tag_id(tag)
}

/// Per-chunk RNG stream keyed by (seed, doc id, chunk index), stable across
/// platforms and runs.
pub fn chunk_rng(seed: u64, doc_id: &str, chunk_index: u64) -> ChaCha8Rng {
    // FNV-1a over the key material
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    for b in seed.to_le_bytes() {
        eat(b);
    }
    for b in doc_id.as_bytes() {
        eat(*b);
    }
    for b in chunk_index.to_le_bytes() {
        eat(b);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Build the noised/original pairs for one document. Chunks are planned over
/// *encoded* lengths with two ids reserved for the language tag and eos, so
/// the pair invariant `len <= max_seq_len` holds after subword expansion.
pub fn make_pairs_for_doc(
    doc: &SegmentedDoc,
    vocab: &SubwordVocab,
    cfg: &NoiseConfig,
) -> Vec<TrainingPair> {
    let starts = sentence_starts(&doc.tokens);
    let budget = cfg.max_seq_len.saturating_sub(2).max(1);

    // assemble chunks of whole sentences by encoded length
    struct PlannedChunk {
        tokens: Vec<Token>,
        sent_offsets: Vec<usize>,
    }
    let mut chunks: Vec<PlannedChunk> = Vec::new();
    let mut cur = PlannedChunk {
        tokens: Vec::new(),
        sent_offsets: Vec::new(),
    };
    let mut flush = |cur: &mut PlannedChunk, chunks: &mut Vec<PlannedChunk>| {
        if !cur.tokens.is_empty() {
            chunks.push(std::mem::replace(
                cur,
                PlannedChunk {
                    tokens: Vec::new(),
                    sent_offsets: Vec::new(),
                },
            ));
        }
    };
    for (i, &s) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(doc.tokens.len());
        let sentence = &doc.tokens[s..end];
        let mut candidate = cur.tokens.clone();
        candidate.extend_from_slice(sentence);
        if vocab.encode_tokens(&candidate).len() <= budget {
            cur.sent_offsets.push(cur.tokens.len());
            cur.tokens = candidate;
            continue;
        }
        flush(&mut cur, &mut chunks);
        if vocab.encode_tokens(sentence).len() <= budget {
            cur.sent_offsets.push(0);
            cur.tokens = sentence.to_vec();
        } else {
            // degenerate: split the sentence at word granularity
            for tok in sentence {
                let mut candidate = cur.tokens.clone();
                candidate.push(tok.clone());
                if vocab.encode_tokens(&candidate).len() <= budget || cur.tokens.is_empty() {
                    if cur.tokens.is_empty() {
                        cur.sent_offsets.push(0);
                    }
                    cur.tokens = candidate;
                } else {
                    flush(&mut cur, &mut chunks);
                    cur.sent_offsets.push(0);
                    cur.tokens = vec![tok.clone()];
                }
            }
        }
    }
    flush(&mut cur, &mut chunks);

    let mut pairs = Vec::with_capacity(chunks.len());
    for (chunk_index, chunk) in chunks.into_iter().enumerate() {
        let mut rng = chunk_rng(cfg.rng_seed, &doc.id, chunk_index as u64);

        // sample spans per sentence (or over the whole chunk)
        let mut masked: Vec<MaskedToken> = Vec::new();
        match cfg.budget_scope {
            BudgetScope::PerChunk => {
                let spans = sample_spans(chunk.tokens.len(), cfg, &mut rng);
                let items: Vec<MaskedToken> =
                    chunk.tokens.iter().cloned().map(MaskedToken::Tok).collect();
                masked = apply_mask(&items, &spans, MaskedToken::Mask)
                    .expect("sampled spans are disjoint and in range");
            }
            BudgetScope::PerSentence => {
                let offsets = &chunk.sent_offsets;
                for (i, &off) in offsets.iter().enumerate() {
                    let end = offsets.get(i + 1).copied().unwrap_or(chunk.tokens.len());
                    let sent = &chunk.tokens[off..end];
                    let spans = sample_spans(sent.len(), cfg, &mut rng);
                    let items: Vec<MaskedToken> =
                        sent.iter().cloned().map(MaskedToken::Tok).collect();
                    masked.extend(
                        apply_mask(&items, &spans, MaskedToken::Mask)
                            .expect("sampled spans are disjoint and in range"),
                    );
                }
            }
        }

        let mut source_ids = encode_masked(&masked, vocab);
        let mut target_ids = vocab.encode_tokens(&chunk.tokens);
        // oversized single words are truncated to keep the length invariant
        source_ids.truncate(budget);
        target_ids.truncate(budget);
        if let Some(tag) = lang_tag_id(vocab, doc.lang) {
            source_ids.push(tag);
            target_ids.push(tag);
        }
        source_ids.push(EOS_ID);
        target_ids.push(EOS_ID);
        pairs.push(TrainingPair {
            doc_id: doc.id.clone(),
            chunk_index,
            source_ids,
            target_ids,
        });
    }
    pairs
}

/// Pair stream over many documents; deterministic for a fixed seed.
pub fn make_pairs<'a, I>(
    docs: I,
    vocab: &'a SubwordVocab,
    cfg: &'a NoiseConfig,
) -> impl Iterator<Item = TrainingPair> + 'a
where
    I: IntoIterator<Item = SegmentedDoc>,
    I::IntoIter: 'a,
{
    docs.into_iter()
        .flat_map(move |doc| make_pairs_for_doc(&doc, vocab, cfg))
}

/// Length-prefixed binary record format for pair files.
///
/// Layout: magic `KTNP`, version byte 1, then per record: varint doc-id
/// length + bytes, varint chunk index, varint source length + varint ids,
/// varint target length + varint ids. Varints are unsigned LEB128.
pub mod binio {
    use super::TrainingPair;
    use std::io::{self, Read, Write};

    pub const MAGIC: &[u8; 4] = b"KTNP";
    pub const VERSION: u8 = 1;

    pub fn write_varint(w: &mut impl Write, mut v: u64) -> io::Result<()> {
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                return w.write_all(&[byte]);
            }
            w.write_all(&[byte | 0x80])?;
        }
    }

    pub fn read_varint(r: &mut impl Read) -> io::Result<u64> {
        let mut v = 0u64;
        let mut shift = 0u32;
        loop {
            let mut byte = [0u8; 1];
            r.read_exact(&mut byte)?;
            if shift >= 64 {
                return Err(io::Error::new(io::ErrorKind::InvalidData, "varint overflow"));
            }
            v |= ((byte[0] & 0x7f) as u64) << shift;
            if byte[0] & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
        }
    }

    pub struct PairWriter<W: Write> {
        inner: W,
    }

    impl<W: Write> PairWriter<W> {
        pub fn new(mut inner: W) -> io::Result<Self> {
            inner.write_all(MAGIC)?;
            inner.write_all(&[VERSION])?;
            Ok(PairWriter { inner })
        }

        pub fn write(&mut self, pair: &TrainingPair) -> io::Result<()> {
            let w = &mut self.inner;
            write_varint(w, pair.doc_id.len() as u64)?;
            w.write_all(pair.doc_id.as_bytes())?;
            write_varint(w, pair.chunk_index as u64)?;
            write_varint(w, pair.source_ids.len() as u64)?;
            for &id in &pair.source_ids {
                write_varint(w, id as u64)?;
            }
            write_varint(w, pair.target_ids.len() as u64)?;
            for &id in &pair.target_ids {
                write_varint(w, id as u64)?;
            }
            Ok(())
        }

        pub fn into_inner(self) -> W {
            self.inner
        }
    }

    pub fn write_pairs(w: impl Write, pairs: &[TrainingPair]) -> io::Result<()> {
        let mut writer = PairWriter::new(w)?;
        for p in pairs {
            writer.write(p)?;
        }
        Ok(())
    }

    pub fn read_pairs(mut r: impl Read) -> io::Result<Vec<TrainingPair>> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version)?;
        if version[0] != VERSION {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("unsupported version {}", version[0]),
            ));
        }
        let mut pairs = Vec::new();
        loop {
            let id_len = match read_varint(&mut r) {
                Ok(v) => v as usize,
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e),
            };
            let mut id_bytes = vec![0u8; id_len];
            r.read_exact(&mut id_bytes)?;
            let doc_id = String::from_utf8(id_bytes)
                .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "doc id not UTF-8"))?;
            let chunk_index = read_varint(&mut r)? as usize;
            let n_src = read_varint(&mut r)? as usize;
            let mut source_ids = Vec::with_capacity(n_src);
            for _ in 0..n_src {
                source_ids.push(read_varint(&mut r)? as u32);
            }
            let n_tgt = read_varint(&mut r)? as usize;
            let mut target_ids = Vec::with_capacity(n_tgt);
            for _ in 0..n_tgt {
                target_ids.push(read_varint(&mut r)? as u32);
            }
            pairs.push(TrainingPair {
                doc_id,
                chunk_index,
                source_ids,
                target_ids,
            });
        }
        Ok(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::TokenKind;
    use crate::subword::{Piece, Specials, SubwordVocab};

    fn word(s: &str) -> Token {
        Token::new(s, TokenKind::Word)
    }

    fn toy_vocab(mode: TokenizerMode) -> SubwordVocab {
        let surfaces = ["ក", "ខ", "គ", "ឃ", "ង", "។", "កខ"];
        let n = surfaces.len() as f64;
        let pieces = surfaces
            .iter()
            .map(|s| Piece {
                surface: s.to_string(),
                log_prob: (1.0 / n).ln(),
            })
            .collect();
        SubwordVocab::new(mode, Specials::default(), 0, pieces).unwrap()
    }

    #[test]
    fn chunking_examples() {
        // 3 sentences of 400 tokens, max 1024 -> [s1+s2, s3]
        let tokens: Vec<u32> = (0..1200).collect();
        let chunks = chunk_document(&tokens, &[0, 400, 800], 1024).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].items.len(), 800);
        assert_eq!(chunks[1].items.len(), 400);
        assert!(chunks.iter().all(|c| !c.degenerate_split));
        let concat: Vec<u32> = chunks.iter().flat_map(|c| c.items.clone()).collect();
        assert_eq!(concat, tokens);

        // small doc: one chunk
        let small: Vec<u32> = (0..10).collect();
        let chunks = chunk_document(&small, &[0], 1024).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].items, small);

        // one 2000-token sentence: degenerate hard split 1024 + 976
        let long: Vec<u32> = (0..2000).collect();
        let chunks = chunk_document(&long, &[0], 1024).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].items.len(), 1024);
        assert_eq!(chunks[1].items.len(), 976);
        assert!(chunks.iter().all(|c| c.degenerate_split));
    }

    #[test]
    fn bad_sentence_starts() {
        let tokens: Vec<u32> = (0..10).collect();
        assert!(chunk_document(&tokens, &[1], 4).is_err());
        assert!(chunk_document(&tokens, &[0, 5, 5], 4).is_err());
        assert!(chunk_document(&tokens, &[0, 10], 4).is_err());
    }

    #[test]
    fn ztp_mean_close_to_conditional_poisson_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let sum: usize = (0..n).map(|_| zero_truncated_poisson(&mut rng, 3.5)).sum();
        let mean = sum as f64 / n as f64;
        let expected = 3.5 / (1.0 - (-3.5f64).exp());
        assert!((mean - expected).abs() < 0.1, "mean {mean} vs {expected}");
    }

    #[test]
    fn spans_budget_exact_and_disjoint() {
        let cfg = NoiseConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let spans = sample_spans(100, &cfg, &mut rng);
            let total: usize = spans.iter().map(|s| s.len).sum();
            assert_eq!(total, 35);
            let mut covered = vec![false; 100];
            for s in &spans {
                for i in s.start..s.start + s.len {
                    assert!(!covered[i], "overlap at {i}");
                    covered[i] = true;
                }
            }
        }
        let zero = NoiseConfig {
            mask_ratio: 0.0,
            ..NoiseConfig::default()
        };
        assert!(sample_spans(100, &zero, &mut rng).is_empty());
    }

    #[test]
    fn apply_mask_examples() {
        let toks: Vec<u32> = (0..10).collect();
        let out = apply_mask(&toks, &[Span { start: 2, len: 3 }], 99).unwrap();
        assert_eq!(out, vec![0, 1, 99, 5, 6, 7, 8, 9]);
        // adjacent spans: two masks, no merging
        let out2 = apply_mask(
            &toks,
            &[Span { start: 2, len: 2 }, Span { start: 4, len: 2 }],
            99,
        )
        .unwrap();
        assert_eq!(out2, vec![0, 1, 99, 99, 6, 7, 8, 9]);
        // no spans: identity
        assert_eq!(apply_mask(&toks, &[], 99).unwrap(), toks);
        // overlap rejected
        assert!(matches!(
            apply_mask(
                &toks,
                &[Span { start: 2, len: 3 }, Span { start: 4, len: 1 }],
                99
            ),
            Err(NoiseError::OverlappingSpans)
        ));
        assert!(matches!(
            apply_mask(&toks, &[Span { start: 9, len: 2 }], 99),
            Err(NoiseError::SpanOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_ratio_pairs_equal_target() {
        let vocab = toy_vocab(TokenizerMode::WordSegmented);
        let doc = SegmentedDoc {
            id: "d1".into(),
            lang: Lang::Km,
            tokens: vec![word("កខ"), Token::space(), word("គ"), word("។")],
        };
        let cfg = NoiseConfig {
            mask_ratio: 0.0,
            ..NoiseConfig::default()
        };
        let pairs = make_pairs_for_doc(&doc, &vocab, &cfg);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].source_ids, pairs[0].target_ids);
        assert!(!pairs[0].target_ids.contains(&MASK_ID));
        // decode of target reproduces the chunk text (language tag and eos
        // decode to nothing)
        let decoded = vocab.decode(&pairs[0].target_ids).unwrap();
        assert_eq!(decoded, "កខ គ។");
    }

    #[test]
    fn pairs_deterministic_and_masked() {
        let vocab = toy_vocab(TokenizerMode::WordSegmented);
        let tokens: Vec<Token> = (0..60)
            .flat_map(|i| {
                let w = ["ក", "ខ", "គ", "ឃ", "ង"][i % 5];
                if i % 7 == 6 {
                    vec![word(w), Token::space()]
                } else {
                    vec![word(w)]
                }
            })
            .collect();
        let doc = SegmentedDoc {
            id: "d2".into(),
            lang: Lang::Km,
            tokens,
        };
        let cfg = NoiseConfig {
            rng_seed: 42,
            ..NoiseConfig::default()
        };
        let a = make_pairs_for_doc(&doc, &vocab, &cfg);
        let b = make_pairs_for_doc(&doc, &vocab, &cfg);
        assert_eq!(a, b);
        assert!(a[0].source_ids.contains(&MASK_ID));
        assert!(!a[0].target_ids.contains(&MASK_ID));
        assert!(a[0].source_ids.len() <= a[0].target_ids.len());
    }

    #[test]
    fn pairs_respect_max_len_after_encoding() {
        let vocab = toy_vocab(TokenizerMode::WordSegmented);
        let tokens: Vec<Token> = (0..300).map(|i| word(["ក", "ខ"][i % 2])).collect();
        let doc = SegmentedDoc {
            id: "d3".into(),
            lang: Lang::Km,
            tokens,
        };
        let cfg = NoiseConfig {
            max_seq_len: 64,
            ..NoiseConfig::default()
        };
        for pair in make_pairs_for_doc(&doc, &vocab, &cfg) {
            assert!(pair.source_ids.len() <= 64);
            assert!(pair.target_ids.len() <= 64);
        }
    }

    #[test]
    fn binary_round_trip() {
        let pairs = vec![
            TrainingPair {
                doc_id: "doc-α".into(),
                chunk_index: 0,
                source_ids: vec![3, 5, 1 << 20],
                target_ids: vec![7],
            },
            TrainingPair {
                doc_id: String::new(),
                chunk_index: 300,
                source_ids: vec![],
                target_ids: vec![0, 127, 128, 16384],
            },
        ];
        let mut buf = Vec::new();
        binio::write_pairs(&mut buf, &pairs).unwrap();
        let back = binio::read_pairs(buf.as_slice()).unwrap();
        assert_eq!(back, pairs);
        assert!(binio::read_pairs(&b"XXXX\x01"[..]).is_err());
    }
}
