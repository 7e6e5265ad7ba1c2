//! Corpus BLEU-4 with 13a tokenization and exponential smoothing of
//! zero-match orders.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tok13a::tokenize_13a;
use super::MetricError;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct BleuConfig {
    pub lowercase: bool,
    pub effective_order: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            lowercase: false,
            effective_order: false,
        }
    }
}

impl BleuConfig {
    pub fn signature(&self) -> String {
        format!(
            "BLEU+nrefs:1+case:{}+eff:{}+tok:13a+smooth:exp",
            if self.lowercase { "lc" } else { "mixed" },
            if self.effective_order { "yes" } else { "no" },
        )
    }
}

/// Sufficient statistics of one segment (or a sum over segments).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub correct: [u64; MAX_ORDER],
    pub total: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.correct[n] += other.correct[n];
            self.total[n] += other.total[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BleuScore {
    pub score: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

pub fn segment_stats(hyp: &str, reference: &str, cfg: &BleuConfig) -> BleuStats {
    let prep = |s: &str| -> Vec<String> {
        let s = if cfg.lowercase {
            s.to_lowercase()
        } else {
            s.to_string()
        };
        tokenize_13a(&s)
    };
    let hyp_toks = prep(hyp);
    let ref_toks = prep(reference);
    let mut stats = BleuStats {
        hyp_len: hyp_toks.len() as u64,
        ref_len: ref_toks.len() as u64,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let hyp_ngrams = ngram_counts(&hyp_toks, n);
        let ref_ngrams = ngram_counts(&ref_toks, n);
        let total: u64 = hyp_ngrams.values().sum();
        let correct: u64 = hyp_ngrams
            .iter()
            .map(|(gram, &c)| c.min(ref_ngrams.get(gram).copied().unwrap_or(0)))
            .sum();
        stats.total[n - 1] = total;
        stats.correct[n - 1] = correct;
    }
    stats
}

/// Exponentially smoothed BLEU from summed statistics: the k-th zero-match
/// order scores 1/(2^k * total). An order with no hypothesis n-grams at all
/// leaves precision 0 and (without effective-order) zeroes the score.
pub fn score_from_stats(stats: &BleuStats, cfg: &BleuConfig) -> BleuScore {
    let mut precisions = [0.0f64; MAX_ORDER];
    let mut smooth = 1.0f64;
    let mut seen_orders = 0usize;
    for n in 0..MAX_ORDER {
        if stats.total[n] == 0 {
            break;
        }
        seen_orders = n + 1;
        precisions[n] = if stats.correct[n] == 0 {
            smooth *= 2.0;
            1.0 / (smooth * stats.total[n] as f64)
        } else {
            stats.correct[n] as f64 / stats.total[n] as f64
        };
    }
    let effective = if cfg.effective_order {
        seen_orders.max(1)
    } else {
        MAX_ORDER
    };
    let brevity_penalty = if stats.hyp_len == 0 {
        0.0
    } else if stats.hyp_len >= stats.ref_len {
        1.0
    } else {
        (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
    };
    let score = if precisions[..effective].iter().any(|&p| p <= 0.0) {
        0.0
    } else {
        let mean_log: f64 =
            precisions[..effective].iter().map(|p| p.ln()).sum::<f64>() / effective as f64;
        100.0 * brevity_penalty * mean_log.exp()
    };
    BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_len: stats.hyp_len,
        ref_len: stats.ref_len,
    }
}

/// Corpus BLEU over aligned single-reference segment lists.
pub fn bleu(hyps: &[String], refs: &[String], cfg: &BleuConfig) -> Result<BleuScore, MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    let mut sum = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        sum.add(&segment_stats(h, r, cfg));
    }
    Ok(score_from_stats(&sum, cfg))
}
