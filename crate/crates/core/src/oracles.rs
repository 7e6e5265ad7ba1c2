//! Independent brute-force oracles for the property and acceptance suites
//! (feature `testkit`). These deliberately re-derive results by exhaustive
//! enumeration or naive scanning, sharing no code with the implementations
//! they check.

use std::collections::HashMap;

use crate::normalize::RuleTable;
use crate::segment::{Lexicon, SegmentOptions};
use crate::subword::Piece;

/// Naive repeat-until-stable rewriting: per pass, scan left to right, apply
/// the longest matching pattern (ties by table order) by rebuilding the
/// string, resume after the replacement.
pub fn naive_rewrite_fixpoint(text: &str, table: &RuleTable) -> String {
    let mut cur: Vec<char> = text.chars().collect();
    loop {
        let mut out: Vec<char> = Vec::with_capacity(cur.len());
        let mut changed = false;
        let mut i = 0;
        while i < cur.len() {
            let mut hit: Option<(usize, &[char])> = None; // (pattern len, replacement)
            for rule in table.rules() {
                let end = i + rule.pattern.len();
                if end <= cur.len()
                    && cur[i..end] == rule.pattern[..]
                    && hit.map_or(true, |(len, _)| rule.pattern.len() > len)
                {
                    hit = Some((rule.pattern.len(), &rule.replacement));
                }
            }
            match hit {
                Some((len, replacement)) => {
                    out.extend_from_slice(replacement);
                    i += len;
                    changed = true;
                }
                None => {
                    out.push(cur[i]);
                    i += 1;
                }
            }
        }
        if !changed {
            return out.into_iter().collect();
        }
        cur = out;
    }
}

/// Best segmentation score over all 2^(n-1) cut sets of a span, with the
/// same edge scoring as the Viterbi decoder: lexicon words score
/// ln(count/total), single-character fallbacks ln(1/total) - penalty,
/// multi-character out-of-vocabulary segments are inadmissible.
pub fn best_split_score_exhaustive(
    span: &str,
    lexicon: &Lexicon,
    opts: &SegmentOptions,
) -> Option<f64> {
    let chars: Vec<char> = span.chars().collect();
    let n = chars.len();
    if n == 0 {
        return Some(0.0);
    }
    let total = lexicon.total().max(1) as f64;
    let oov = (1.0 / total).ln() - opts.oov_penalty;
    let mut best: Option<f64> = None;
    // bitmask of cut points between characters
    for cuts in 0u64..(1u64 << (n - 1)) {
        let mut score = 0.0;
        let mut start = 0usize;
        let mut ok = true;
        for end in 1..=n {
            let boundary = end == n || (cuts >> (end - 1)) & 1 == 1;
            if !boundary {
                continue;
            }
            let word: String = chars[start..end].iter().collect();
            score += match lexicon.get(&word) {
                Some(count) => (count as f64 / total).ln(),
                None if end - start == 1 => oov,
                None => {
                    ok = false;
                    break;
                }
            };
            start = end;
        }
        if ok && best.map_or(true, |b| score > b) {
            best = Some(score);
        }
    }
    best
}

/// All segmentations of `unit` into the given pieces, with the product
/// probability of each.
fn enumerate_segmentations(unit: &[char], probs: &HashMap<String, f64>) -> Vec<(Vec<String>, f64)> {
    fn recurse(
        unit: &[char],
        pos: usize,
        probs: &HashMap<String, f64>,
        cur: &mut Vec<String>,
        p: f64,
        out: &mut Vec<(Vec<String>, f64)>,
    ) {
        if pos == unit.len() {
            out.push((cur.clone(), p));
            return;
        }
        for end in pos + 1..=unit.len() {
            let piece: String = unit[pos..end].iter().collect();
            if let Some(&pp) = probs.get(&piece) {
                if pp > 0.0 {
                    cur.push(piece);
                    recurse(unit, end, probs, cur, p * pp, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    recurse(unit, 0, probs, &mut Vec::new(), 1.0, &mut out);
    out
}

fn prob_map(pieces: &[Piece]) -> HashMap<String, f64> {
    pieces
        .iter()
        .map(|p| (p.surface.clone(), p.log_prob.exp()))
        .collect()
}

/// Marginal probability of the unit (sum over all segmentations).
pub fn unit_z_exhaustive(unit: &str, pieces: &[Piece]) -> f64 {
    let chars: Vec<char> = unit.chars().collect();
    enumerate_segmentations(&chars, &prob_map(pieces))
        .into_iter()
        .map(|(_, p)| p)
        .sum()
}

/// Posterior expected piece counts for one unit by enumeration.
pub fn expected_counts_exhaustive(unit: &str, pieces: &[Piece]) -> Vec<f64> {
    let chars: Vec<char> = unit.chars().collect();
    let segs = enumerate_segmentations(&chars, &prob_map(pieces));
    let z: f64 = segs.iter().map(|(_, p)| p).sum();
    let mut counts = vec![0.0; pieces.len()];
    if z == 0.0 {
        return counts;
    }
    let index: HashMap<&str, usize> = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| (p.surface.as_str(), i))
        .collect();
    for (seg, p) in segs {
        let w = p / z;
        for piece in seg {
            counts[index[piece.as_str()]] += w;
        }
    }
    counts
}

/// Best (Viterbi) segmentation log score by enumeration.
pub fn best_encode_score_exhaustive(unit: &str, pieces: &[Piece]) -> Option<f64> {
    let chars: Vec<char> = unit.chars().collect();
    enumerate_segmentations(&chars, &prob_map(pieces))
        .into_iter()
        .map(|(_, p)| p.ln())
        .fold(None, |best, s| match best {
            Some(b) if b >= s => Some(b),
            _ => Some(s),
        })
}

/// Corpus log likelihood by enumeration: sum over units of
/// freq * ln(sum of segmentation probabilities).
pub fn corpus_ll_exhaustive(units: &[(String, u64)], pieces: &[Piece]) -> f64 {
    units
        .iter()
        .map(|(u, f)| *f as f64 * unit_z_exhaustive(u, pieces).ln())
        .sum()
}

/// Likelihood lost by removing one piece, probabilities held fixed
/// (matches the pruning convention; the EM re-run renormalizes later).
pub fn removal_loss_exhaustive(units: &[(String, u64)], pieces: &[Piece], removed: &str) -> f64 {
    let without: Vec<Piece> = pieces
        .iter()
        .filter(|p| p.surface != removed)
        .cloned()
        .collect();
    corpus_ll_exhaustive(units, pieces) - corpus_ll_exhaustive(units, &without)
}

/// LCS length by top-down memoized recursion (independent of the tabular
/// implementation).
pub fn lcs_recursive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == 0 || j == 0 {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i - 1] == b[j - 1] {
            go(a, b, i - 1, j - 1, memo) + 1
        } else {
            go(a, b, i - 1, j, memo).max(go(a, b, i, j - 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, a.len(), b.len(), &mut HashMap::new())
}
