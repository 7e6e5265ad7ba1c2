//! Segmentation-lattice math for the unigram model: forward-backward
//! expected counts and marginal likelihood, all in log space.

use std::collections::HashMap;

use super::Piece;

pub(crate) fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Piece surfaces indexed for lattice construction.
#[derive(Debug, Clone)]
pub(crate) struct PieceSet {
    map: HashMap<String, usize>,
    log_probs: Vec<f64>,
    max_len: usize,
}

impl PieceSet {
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn new(pieces: &[Piece]) -> Self {
        let mut map = HashMap::with_capacity(pieces.len());
        let mut log_probs = Vec::with_capacity(pieces.len());
        let mut max_len = 1;
        for (i, p) in pieces.iter().enumerate() {
            map.insert(p.surface.clone(), i);
            log_probs.push(p.log_prob);
            max_len = max_len.max(p.surface.chars().count());
        }
        PieceSet {
            map,
            log_probs,
            max_len,
        }
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn lookup(&self, buf: &str) -> Option<(usize, f64)> {
        self.map.get(buf).map(|&i| (i, self.log_probs[i]))
    }

    /// Edges ending at each position: `(start, piece index, log prob)`.
    /// Pieces with -inf log probability are dead and excluded.
    fn edges(&self, chars: &[char], banned: Option<usize>) -> Vec<Vec<(usize, usize, f64)>> {
        let n = chars.len();
        let mut edges: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n + 1];
        let mut buf = String::new();
        for end in 1..=n {
            let lo = end.saturating_sub(self.max_len);
            for start in lo..end {
                buf.clear();
                buf.extend(&chars[start..end]);
                if let Some((idx, lp)) = self.lookup(&buf) {
                    if Some(idx) == banned || lp == f64::NEG_INFINITY {
                        continue;
                    }
                    edges[end].push((start, idx, lp));
                }
            }
        }
        edges
    }

    /// Log marginal probability of `chars` under the unigram model, summed
    /// over all segmentations. `None` if no segmentation covers the unit.
    pub fn log_z(&self, chars: &[char], banned: Option<usize>) -> Option<f64> {
        let edges = self.edges(chars, banned);
        let fwd = forward(chars.len(), &edges);
        let z = fwd[chars.len()];
        (z != f64::NEG_INFINITY).then_some(z)
    }

    /// Forward-backward posterior expected counts for one unit, scaled by
    /// `freq`, accumulated into `counts`. Returns the unit's log Z.
    pub fn accumulate_expected_counts(
        &self,
        chars: &[char],
        freq: f64,
        counts: &mut [f64],
    ) -> Option<f64> {
        let n = chars.len();
        let edges = self.edges(chars, None);
        let fwd = forward(n, &edges);
        let z = fwd[n];
        if z == f64::NEG_INFINITY {
            return None;
        }
        let mut bwd = vec![f64::NEG_INFINITY; n + 1];
        bwd[n] = 0.0;
        for end in (1..=n).rev() {
            if bwd[end] == f64::NEG_INFINITY {
                continue;
            }
            for &(start, _, lp) in &edges[end] {
                bwd[start] = log_sum_exp(bwd[start], lp + bwd[end]);
            }
        }
        for end in 1..=n {
            for &(start, idx, lp) in &edges[end] {
                let post = fwd[start] + lp + bwd[end] - z;
                if post > f64::NEG_INFINITY {
                    counts[idx] += freq * post.exp();
                }
            }
        }
        Some(z)
    }

    /// Best-scoring segmentation: piece indices and total log probability.
    pub fn viterbi(&self, chars: &[char]) -> Option<(Vec<usize>, f64)> {
        let n = chars.len();
        if n == 0 {
            return Some((Vec::new(), 0.0));
        }
        let edges = self.edges(chars, None);
        let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n + 1]; // (score, start, idx)
        best[0] = Some((0.0, 0, usize::MAX));
        for end in 1..=n {
            for &(start, idx, lp) in &edges[end] {
                let Some((prev, _, _)) = best[start] else { continue };
                let score = prev + lp;
                // ties prefer the longer piece (smaller start); edges are
                // generated with ascending start, so strict > keeps it
                if best[end].map_or(true, |(b, _, _)| score > b) {
                    best[end] = Some((score, start, idx));
                }
            }
        }
        let (score, _, _) = best[n]?;
        let mut ids = Vec::new();
        let mut pos = n;
        while pos > 0 {
            let (_, start, idx) = best[pos].unwrap();
            ids.push(idx);
            pos = start;
        }
        ids.reverse();
        Some((ids, score))
    }
}

fn forward(n: usize, edges: &[Vec<(usize, usize, f64)>]) -> Vec<f64> {
    let mut fwd = vec![f64::NEG_INFINITY; n + 1];
    fwd[0] = 0.0;
    for end in 1..=n {
        for &(start, _, lp) in &edges[end] {
            if fwd[start] != f64::NEG_INFINITY {
                fwd[end] = log_sum_exp(fwd[end], fwd[start] + lp);
            }
        }
    }
    fwd
}
