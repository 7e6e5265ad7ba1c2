//! Character n-gram F-score (chrF) with optional word n-grams; spaces are
//! excluded from character n-grams by default.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ChrfConfig {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
    pub include_space: bool,
    pub lowercase: bool,
    pub effective_order: bool,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            char_order: 6,
            word_order: 0,
            beta: 2.0,
            include_space: false,
            lowercase: false,
            effective_order: true,
        }
    }
}

impl ChrfConfig {
    pub fn signature(&self) -> String {
        format!(
            "ChrF{}+nrefs:1+case:{}+eff:{}+nc:{}+nw:{}+space:{}",
            self.beta as u64,
            if self.lowercase { "lc" } else { "mixed" },
            if self.effective_order { "yes" } else { "no" },
            self.char_order,
            self.word_order,
            if self.include_space { "yes" } else { "no" },
        )
    }

    fn total_orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

/// Per-order `(hyp_count, ref_count, match_count)`, char orders first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChrfStats {
    pub orders: Vec<[u64; 3]>,
}

impl ChrfStats {
    pub fn add(&mut self, other: &ChrfStats) {
        if self.orders.is_empty() {
            self.orders = vec![[0; 3]; other.orders.len()];
        }
        for (a, b) in self.orders.iter_mut().zip(&other.orders) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

fn count_grams<T: Eq + std::hash::Hash + Clone>(items: &[T], n: usize) -> HashMap<Vec<T>, u64> {
    let mut counts = HashMap::new();
    if items.len() >= n {
        for w in items.windows(n) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

fn gram_stats<T: Eq + std::hash::Hash + Clone>(hyp: &[T], reference: &[T], n: usize) -> [u64; 3] {
    let h = count_grams(hyp, n);
    let r = count_grams(reference, n);
    let hyp_total: u64 = h.values().sum();
    let ref_total: u64 = r.values().sum();
    let matched: u64 = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    [hyp_total, ref_total, matched]
}

pub fn segment_stats(hyp: &str, reference: &str, cfg: &ChrfConfig) -> ChrfStats {
    let prep = |s: &str| -> String {
        if cfg.lowercase {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    };
    let hyp = prep(hyp);
    let reference = prep(reference);
    let char_seq = |s: &str| -> Vec<char> {
        if cfg.include_space {
            s.chars().collect()
        } else {
            s.chars().filter(|c| !c.is_whitespace()).collect()
        }
    };
    let hyp_chars = char_seq(&hyp);
    let ref_chars = char_seq(&reference);
    let mut orders = Vec::with_capacity(cfg.total_orders());
    for n in 1..=cfg.char_order {
        orders.push(gram_stats(&hyp_chars, &ref_chars, n));
    }
    if cfg.word_order > 0 {
        let hyp_words: Vec<&str> = hyp.split_whitespace().collect();
        let ref_words: Vec<&str> = reference.split_whitespace().collect();
        for n in 1..=cfg.word_order {
            orders.push(gram_stats(&hyp_words, &ref_words, n));
        }
    }
    ChrfStats { orders }
}

/// F-beta of the order-averaged precision and recall. With effective order,
/// only orders where both sides have n-grams enter the average.
pub fn score_from_stats(stats: &ChrfStats, cfg: &ChrfConfig) -> f64 {
    let mut avg_prec = 0.0;
    let mut avg_rec = 0.0;
    let mut effective = 0usize;
    for &[hyp_total, ref_total, matched] in &stats.orders {
        if hyp_total > 0 && ref_total > 0 {
            avg_prec += matched as f64 / hyp_total as f64;
            avg_rec += matched as f64 / ref_total as f64;
            effective += 1;
        }
    }
    let denom = if cfg.effective_order {
        effective
    } else {
        stats.orders.len()
    };
    if denom == 0 {
        return 0.0;
    }
    avg_prec /= denom as f64;
    avg_rec /= denom as f64;
    let b2 = cfg.beta * cfg.beta;
    if avg_prec + avg_rec == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + b2) * avg_prec * avg_rec / (b2 * avg_prec + avg_rec)
}

pub fn chrf(hyps: &[String], refs: &[String], cfg: &ChrfConfig) -> Result<f64, MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    let mut sum = ChrfStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        sum.add(&segment_stats(h, r, cfg));
    }
    Ok(score_from_stats(&sum, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(hyp: &str, reference: &str) -> f64 {
        chrf(&[hyp.to_string()], &[reference.to_string()], &ChrfConfig::default()).unwrap()
    }

    #[test]
    fn identity_is_100() {
        assert!((one("some text", "some text") - 100.0).abs() < 1e-9);
    }

    #[test]
    fn abcd_vs_abce_hand_computed() {
        // orders 1..4 have n-grams on both sides; 5,6 are skipped (eff:yes)
        // o1: 3/4, o2: 2/3, o3: 1/2, o4: 0/1
        // P = R = (0.75 + 2/3 + 0.5 + 0)/4; F2 with P == R equals P
        let expected = 100.0 * (0.75 + 2.0 / 3.0 + 0.5 + 0.0) / 4.0;
        assert!((one("abcd", "abce") - expected).abs() < 1e-9);
    }

    #[test]
    fn spaces_excluded_by_default() {
        let a = one("a b c d", "abcd");
        let b = one("abcd", "abcd");
        assert!((a - b).abs() < 1e-12);
        assert!((a - 100.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(one("aaaa", "bbbb"), 0.0);
    }

    #[test]
    fn word_order_counts_when_enabled() {
        let cfg = ChrfConfig {
            word_order: 2,
            ..ChrfConfig::default()
        };
        let same = chrf(&["a b".into()], &["a b".into()], &cfg).unwrap();
        assert!((same - 100.0).abs() < 1e-9);
        let sig = cfg.signature();
        assert!(sig.contains("+nw:2+"));
    }

    #[test]
    fn signature_matches_cited_fields() {
        assert_eq!(
            ChrfConfig::default().signature(),
            "ChrF2+nrefs:1+case:mixed+eff:yes+nc:6+nw:0+space:no"
        );
    }
}
