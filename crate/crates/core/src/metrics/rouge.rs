//! Rouge-L: LCS-based precision/recall/F over pre-tokenized sequences.

use super::MetricError;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Longest common subsequence length, quadratic dynamic programming with a
/// rolling row.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Rouge-L for one hypothesis/reference pair of token sequences (F with
/// beta = 1).
pub fn rouge_l_pair<T: PartialEq>(hyp: &[T], reference: &[T]) -> Result<RougeScore, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hyp.is_empty() {
        return Ok(RougeScore::default());
    }
    let lcs = lcs_len(hyp, reference) as f64;
    let precision = lcs / hyp.len() as f64;
    let recall = lcs / reference.len() as f64;
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(RougeScore {
        precision,
        recall,
        f,
    })
}

/// Macro-averaged Rouge-L over aligned pre-tokenized pairs.
pub fn rouge_l(
    hyps: &[Vec<String>],
    refs: &[Vec<String>],
) -> Result<RougeScore, MetricError> {
    if hyps.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut sum = RougeScore::default();
    for (h, r) in hyps.iter().zip(refs) {
        let s = rouge_l_pair(h.as_slice(), r.as_slice())?;
        sum.precision += s.precision;
        sum.recall += s.recall;
        sum.f += s.f;
    }
    let n = hyps.len() as f64;
    Ok(RougeScore {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f: sum.f / n,
    })
}
