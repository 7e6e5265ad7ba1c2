//! Character n-gram language model with interpolated modified Kneser-Ney
//! smoothing (Add-k as the fallback/alternative), for corpus perplexity
//! analysis.
//!
//! Lines are the prediction units: each line is padded with `order - 1`
//! begin-of-line sentinels and every character is predicted from its
//! history. Unknown held-out characters map to a reserved unk symbol.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use super::MetricError;

const BOS: u32 = 0;
const UNK: u32 = 1;
const FIRST_CHAR_ID: u32 = 2;
/// Ids are packed 12 bits per symbol into u64 keys; five levels fit.
const MAX_ORDER: usize = 5;
const ID_BITS: u32 = 12;
const MAX_CHARSET: usize = (1 << ID_BITS) - 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    KneserNey,
    AddK(f64),
}

fn pack(ids: &[u32]) -> u64 {
    let mut key = 0u64;
    for &id in ids {
        key = (key << ID_BITS) | id as u64;
    }
    key
}

#[derive(Debug, Clone, Default)]
struct Level {
    /// k-gram -> count (raw at the top level, continuation below).
    counts: HashMap<u64, u64>,
    /// history ((k-1)-gram) -> sum of continuation counts.
    denom: HashMap<u64, u64>,
    /// history -> number of continuations with count 1, 2, >= 3.
    classes: HashMap<u64, [u64; 3]>,
    /// modified discounts for count classes 1, 2, >= 3.
    discounts: [f64; 3],
}

impl Level {
    fn derive(&mut self) {
        self.denom.clear();
        self.classes.clear();
        for (&key, &count) in &self.counts {
            let hist = key >> ID_BITS;
            *self.denom.entry(hist).or_insert(0) += count;
            let class = (count.min(3) - 1) as usize;
            self.classes.entry(hist).or_insert([0; 3])[class] += 1;
        }
        // Chen-Goodman discounts from the count-of-counts
        let mut n = [0u64; 4];
        for &c in self.counts.values() {
            if (1..=4).contains(&c) {
                n[(c - 1) as usize] += 1;
            }
        }
        self.discounts = if n[0] == 0 || n[1] == 0 {
            [0.5, 1.0, 1.5]
        } else {
            let y = n[0] as f64 / (n[0] as f64 + 2.0 * n[1] as f64);
            let d1 = 1.0 - 2.0 * y * n[1] as f64 / n[0] as f64;
            let d2 = if n[2] == 0 {
                1.0
            } else {
                2.0 - 3.0 * y * n[2] as f64 / n[1] as f64
            };
            let d3 = if n[2] == 0 || n[3] == 0 {
                1.5
            } else {
                3.0 - 4.0 * y * n[3] as f64 / n[2] as f64
            };
            [d1.max(0.0), d2.max(0.0), d3.max(0.0)]
        };
    }

    fn discount_for(&self, count: u64) -> f64 {
        self.discounts[(count.min(3) - 1) as usize]
    }
}

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    smoothing: Smoothing,
    charset: Vec<char>,
    char_ids: HashMap<char, u32>,
    /// levels[k-1] holds the k-gram statistics.
    levels: Vec<Level>,
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn charset_len(&self) -> usize {
        self.charset.len()
    }

    /// Prediction vocabulary: every training character plus unk.
    fn vocab_size(&self) -> usize {
        self.charset.len() + 1
    }

    fn id_of(&self, c: char) -> u32 {
        self.char_ids.get(&c).copied().unwrap_or(UNK)
    }

    fn level_counts(&self, k: usize, key: u64) -> u64 {
        self.levels[k - 1].counts.get(&key).copied().unwrap_or(0)
    }

    /// p(w | hist) where `hist` holds the most recent `order - 1` ids.
    fn prob_ids(&self, hist: &[u32], w: u32) -> Result<f64, MetricError> {
        match self.smoothing {
            Smoothing::AddK(k) => {
                let key = pack(&[hist, &[w]].concat());
                let c = self.level_counts(self.order, key) as f64;
                let denom = self.levels[self.order - 1]
                    .denom
                    .get(&pack(hist))
                    .copied()
                    .unwrap_or(0) as f64;
                let v = self.vocab_size() as f64;
                let p = (c + k) / (denom + k * v);
                if p > 0.0 {
                    Ok(p)
                } else {
                    Err(MetricError::UnseenSymbol)
                }
            }
            Smoothing::KneserNey => Ok(self.kn_prob(self.order, hist, w)),
        }
    }

    fn kn_prob(&self, k: usize, hist: &[u32], w: u32) -> f64 {
        if k == 0 {
            return 1.0 / self.vocab_size() as f64;
        }
        let level = &self.levels[k - 1];
        let hist_key = pack(hist);
        let Some(&denom) = level.denom.get(&hist_key) else {
            return self.kn_prob(k - 1, &hist[1.min(hist.len())..], w);
        };
        let denom = denom as f64;
        let count = self.level_counts(k, pack(&[hist, &[w]].concat()));
        let num = if count > 0 {
            (count as f64 - level.discount_for(count)).max(0.0)
        } else {
            0.0
        };
        let [n1, n2, n3] = level.classes.get(&hist_key).copied().unwrap_or([0; 3]);
        let gamma = (level.discounts[0] * n1 as f64
            + level.discounts[1] * n2 as f64
            + level.discounts[2] * n3 as f64)
            / denom;
        num / denom + gamma * self.kn_prob(k - 1, &hist[1.min(hist.len())..], w)
    }

    /// p(c | preceding chars); histories shorter than order - 1 are
    /// begin-of-line padded.
    pub fn prob_char(&self, history: &[char], c: char) -> Result<f64, MetricError> {
        let n = self.order - 1;
        let mut hist = vec![BOS; n];
        for (slot, ch) in hist
            .iter_mut()
            .rev()
            .zip(history.iter().rev())
        {
            *slot = self.id_of(*ch);
        }
        self.prob_ids(&hist, self.id_of(c))
    }

    /// Serialized binary layout: magic `KTLM`, version, order, smoothing,
    /// charset, then each level's count table (sorted by key).
    pub fn write_binary(&self, mut w: impl Write) -> io::Result<()> {
        use crate::noise::binio::write_varint;
        w.write_all(b"KTLM")?;
        w.write_all(&[1u8])?;
        w.write_all(&[self.order as u8])?;
        match self.smoothing {
            Smoothing::KneserNey => w.write_all(&[0u8])?,
            Smoothing::AddK(k) => {
                w.write_all(&[1u8])?;
                w.write_all(&k.to_le_bytes())?;
            }
        }
        write_varint(&mut w, self.charset.len() as u64)?;
        for &c in &self.charset {
            write_varint(&mut w, c as u64)?;
        }
        for level in &self.levels {
            let mut entries: Vec<(u64, u64)> =
                level.counts.iter().map(|(&k, &v)| (k, v)).collect();
            entries.sort_unstable();
            write_varint(&mut w, entries.len() as u64)?;
            for (key, count) in entries {
                write_varint(&mut w, key)?;
                write_varint(&mut w, count)?;
            }
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> io::Result<Self> {
        use crate::noise::binio::read_varint;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"KTLM" {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
        }
        let mut b = [0u8; 1];
        r.read_exact(&mut b)?;
        if b[0] != 1 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad version"));
        }
        r.read_exact(&mut b)?;
        let order = b[0] as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad order"));
        }
        r.read_exact(&mut b)?;
        let smoothing = match b[0] {
            0 => Smoothing::KneserNey,
            1 => {
                let mut kb = [0u8; 8];
                r.read_exact(&mut kb)?;
                Smoothing::AddK(f64::from_le_bytes(kb))
            }
            _ => return Err(io::Error::new(io::ErrorKind::InvalidData, "bad smoothing")),
        };
        let n_chars = read_varint(&mut r)? as usize;
        let mut charset = Vec::with_capacity(n_chars);
        for _ in 0..n_chars {
            let cp = read_varint(&mut r)? as u32;
            charset.push(char::from_u32(cp).ok_or_else(|| {
                io::Error::new(io::ErrorKind::InvalidData, "bad codepoint")
            })?);
        }
        let char_ids = charset
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, FIRST_CHAR_ID + i as u32))
            .collect();
        let mut levels = Vec::with_capacity(order);
        for _ in 0..order {
            let n = read_varint(&mut r)? as usize;
            let mut counts = HashMap::with_capacity(n);
            for _ in 0..n {
                let key = read_varint(&mut r)?;
                let count = read_varint(&mut r)?;
                counts.insert(key, count);
            }
            let mut level = Level {
                counts,
                ..Level::default()
            };
            level.derive();
            levels.push(level);
        }
        Ok(NGramModel {
            order,
            smoothing,
            charset,
            char_ids,
            levels,
        })
    }

    /// Human-readable count dump: `level<TAB>gram<TAB>count`, symbols as
    /// hex codepoints with `BOS` for the line sentinel.
    pub fn text_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# order={} charset={}", self.order, self.charset.len());
        for (k, level) in self.levels.iter().enumerate() {
            let mut entries: Vec<(u64, u64)> =
                level.counts.iter().map(|(&key, &v)| (key, v)).collect();
            entries.sort_unstable();
            for (key, count) in entries {
                let mut ids = Vec::with_capacity(k + 1);
                let mut rest = key;
                for _ in 0..=k {
                    ids.push((rest & ((1 << ID_BITS) - 1)) as u32);
                    rest >>= ID_BITS;
                }
                ids.reverse();
                let gram = ids
                    .iter()
                    .map(|&id| match id {
                        BOS => "BOS".to_string(),
                        UNK => "UNK".to_string(),
                        _ => format!("{:04X}", self.charset[(id - FIRST_CHAR_ID) as usize] as u32),
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(out, "{}\t{}\t{}", k + 1, gram, count);
            }
        }
        out
    }
}

/// Count n-grams of a line-based character corpus and fit the smoothing.
/// With Kneser-Ney requested on a corpus too small for discount estimation,
/// the model falls back to Add-k (0.5).
pub fn train_char_lm<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    order: usize,
    smoothing: Smoothing,
) -> Result<NGramModel, MetricError> {
    if order == 0 || order > MAX_ORDER {
        return Err(MetricError::InvalidOrder(order));
    }

    let mut charset_set = BTreeSet::new();
    let mut all_lines: Vec<&str> = Vec::new();
    for line in lines {
        for c in line.chars() {
            charset_set.insert(c);
        }
        all_lines.push(line);
    }
    if all_lines.iter().all(|l| l.is_empty()) {
        return Err(MetricError::EmptyInput);
    }
    if charset_set.len() > MAX_CHARSET {
        return Err(MetricError::CharsetTooLarge(charset_set.len()));
    }
    let charset: Vec<char> = charset_set.into_iter().collect();
    let char_ids: HashMap<char, u32> = charset
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, FIRST_CHAR_ID + i as u32))
        .collect();

    // raw top-level counts
    let mut top = Level::default();
    for line in &all_lines {
        let mut padded = vec![BOS; order - 1];
        padded.extend(line.chars().map(|c| char_ids[&c]));
        if padded.len() < order {
            continue;
        }
        for w in padded.windows(order) {
            *top.counts.entry(pack(w)).or_insert(0) += 1;
        }
    }

    // lower levels: recursive continuation counts
    let mut levels = vec![Level::default(); order];
    levels[order - 1] = top;
    for k in (1..order).rev() {
        let upper: Vec<u64> = levels[k].counts.keys().copied().collect();
        let mask = (1u64 << (ID_BITS * k as u32)) - 1;
        let level = &mut levels[k - 1];
        for key in upper {
            // distinct left extensions: each upper key is one distinct v.g
            *level.counts.entry(key & mask).or_insert(0) += 1;
        }
    }
    for level in &mut levels {
        level.derive();
    }

    // tiny-corpus fallback: Kneser-Ney discounts need n1 and n2 at the top
    let smoothing = match smoothing {
        Smoothing::KneserNey => {
            let top = &levels[order - 1];
            let mut n = [0u64; 2];
            for &c in top.counts.values() {
                if c == 1 {
                    n[0] += 1;
                } else if c == 2 {
                    n[1] += 1;
                }
            }
            if n[0] == 0 || n[1] == 0 {
                Smoothing::AddK(0.5)
            } else {
                Smoothing::KneserNey
            }
        }
        other => other,
    };

    Ok(NGramModel {
        order,
        smoothing,
        charset,
        char_ids,
        levels,
    })
}

/// Per-character perplexity `exp(-mean ln p)` of a held-out line corpus.
pub fn perplexity<'a>(
    model: &NGramModel,
    lines: impl IntoIterator<Item = &'a str>,
) -> Result<f64, MetricError> {
    let n_hist = model.order - 1;
    let mut log_sum = 0.0f64;
    let mut n = 0u64;
    for line in lines {
        let mut hist = vec![BOS; n_hist];
        for c in line.chars() {
            let w = model.id_of(c);
            let p = model.prob_ids(&hist, w)?;
            log_sum += p.ln();
            n += 1;
            if n_hist > 0 {
                hist.rotate_left(1);
                hist[n_hist - 1] = w;
            }
        }
    }
    if n == 0 {
        return Err(MetricError::EmptyInput);
    }
    Ok((-log_sum / n as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_lines(symbols: &[char], n_lines: usize, len: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_lines)
            .map(|_| {
                (0..len)
                    .map(|_| symbols[rng.random_range(0..symbols.len())])
                    .collect()
            })
            .collect()
    }

    #[test]
    fn uniform_corpus_perplexity_approaches_symbol_count() {
        let symbols = ['a', 'b', 'c', 'd'];
        let train = uniform_lines(&symbols, 400, 200, 1);
        let heldout = uniform_lines(&symbols, 50, 200, 2);
        for smoothing in [Smoothing::KneserNey, Smoothing::AddK(0.5)] {
            let model =
                train_char_lm(train.iter().map(|s| s.as_str()), 3, smoothing).unwrap();
            let ppl = perplexity(&model, heldout.iter().map(|s| s.as_str())).unwrap();
            assert!(
                (ppl - 4.0).abs() < 0.25,
                "{smoothing:?}: perplexity {ppl} far from 4"
            );
        }
    }

    #[test]
    fn order1_addk0_equals_empirical_entropy() {
        let corpus = ["aabca", "bcaab"];
        let model = train_char_lm(corpus, 1, Smoothing::AddK(0.0)).unwrap();
        let ppl = perplexity(&model, corpus).unwrap();
        // closed form: counts a:5 b:3 c:2 over 10
        let probs = [5.0 / 10.0, 3.0 / 10.0, 2.0 / 10.0];
        let counts = [5.0, 3.0, 2.0];
        let entropy: f64 = -probs
            .iter()
            .zip(&counts)
            .map(|(p, c)| c / 10.0 * (*p as f64).ln())
            .sum::<f64>();
        assert!((ppl - entropy.exp()).abs() < 1e-9, "{ppl} vs {}", entropy.exp());
    }

    #[test]
    fn probabilities_sum_to_one_per_history() {
        let train = uniform_lines(&['x', 'y', 'z'], 60, 80, 3);
        for smoothing in [Smoothing::KneserNey, Smoothing::AddK(0.3)] {
            let model =
                train_char_lm(train.iter().map(|s| s.as_str()), 3, smoothing).unwrap();
            // histories: seen, partially seen, unseen
            for hist in [['x', 'y'], ['z', 'z'], ['y', 'x']] {
                let mut sum = 0.0;
                for &c in &['x', 'y', 'z'] {
                    sum += model.prob_char(&hist, c).unwrap();
                }
                // plus the unk symbol
                sum += model.prob_char(&hist, '?').unwrap();
                assert!((sum - 1.0).abs() < 1e-9, "{smoothing:?} {hist:?}: sum {sum}");
            }
        }
    }

    #[test]
    fn addk_zero_unseen_symbol_errors() {
        let model = train_char_lm(["aaa"], 2, Smoothing::AddK(0.0)).unwrap();
        assert!(matches!(
            perplexity(&model, ["ab"]),
            Err(MetricError::UnseenSymbol)
        ));
        // Kneser-Ney (falls back to AddK 0.5 on this tiny corpus) stays total
        let kn = train_char_lm(["aaa"], 2, Smoothing::KneserNey).unwrap();
        assert!(perplexity(&kn, ["ab"]).is_ok());
    }

    #[test]
    fn kn_fallback_on_tiny_corpus() {
        let model = train_char_lm(["abab"], 2, Smoothing::KneserNey).unwrap();
        assert!(matches!(model.smoothing(), Smoothing::AddK(_)));
    }

    #[test]
    fn binary_round_trip_preserves_probabilities() {
        let train = uniform_lines(&['p', 'q', 'r'], 40, 60, 4);
        let model =
            train_char_lm(train.iter().map(|s| s.as_str()), 3, Smoothing::KneserNey).unwrap();
        let mut buf = Vec::new();
        model.write_binary(&mut buf).unwrap();
        let back = NGramModel::read_binary(buf.as_slice()).unwrap();
        let heldout = uniform_lines(&['p', 'q', 'r'], 5, 60, 5);
        let a = perplexity(&model, heldout.iter().map(|s| s.as_str())).unwrap();
        let b = perplexity(&back, heldout.iter().map(|s| s.as_str())).unwrap();
        assert_eq!(a, b);
        assert!(!back.text_dump().is_empty());
    }

    #[test]
    fn invalid_order_rejected() {
        assert!(matches!(
            train_char_lm(["abc"], 0, Smoothing::KneserNey),
            Err(MetricError::InvalidOrder(0))
        ));
        assert!(matches!(
            train_char_lm(["abc"], 6, Smoothing::KneserNey),
            Err(MetricError::InvalidOrder(6))
        ));
    }
}
