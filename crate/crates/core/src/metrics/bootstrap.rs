//! Paired bootstrap significance test over cached per-segment statistics.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bleu::{self, BleuStats};
use super::chrf::{self, ChrfStats};
use super::rouge::{rouge_l_pair, RougeScore};
use super::{MetricError, MetricKind};

enum SegStats {
    Bleu(Vec<BleuStats>, Vec<BleuStats>),
    Chrf(Vec<ChrfStats>, Vec<ChrfStats>),
    Rouge(Vec<RougeScore>, Vec<RougeScore>),
}

impl SegStats {
    fn scores(&self, metric: &MetricKind, indices: &[usize]) -> (f64, f64) {
        match (self, metric) {
            (SegStats::Bleu(a, b), MetricKind::Bleu(cfg)) => {
                let mut sa = BleuStats::default();
                let mut sb = BleuStats::default();
                for &i in indices {
                    sa.add(&a[i]);
                    sb.add(&b[i]);
                }
                (
                    bleu::score_from_stats(&sa, cfg).score,
                    bleu::score_from_stats(&sb, cfg).score,
                )
            }
            (SegStats::Chrf(a, b), MetricKind::Chrf(cfg)) => {
                let mut sa = ChrfStats::default();
                let mut sb = ChrfStats::default();
                for &i in indices {
                    sa.add(&a[i]);
                    sb.add(&b[i]);
                }
                (chrf::score_from_stats(&sa, cfg), chrf::score_from_stats(&sb, cfg))
            }
            (SegStats::Rouge(a, b), MetricKind::RougeL) => {
                let n = indices.len() as f64;
                let fa: f64 = indices.iter().map(|&i| a[i].f).sum();
                let fb: f64 = indices.iter().map(|&i| b[i].f).sum();
                (100.0 * fa / n, 100.0 * fb / n)
            }
            _ => unreachable!("stats built for the same metric"),
        }
    }
}

/// One-sided paired bootstrap: p is the fraction of resamples in which the
/// observed winner fails to win (ties count as non-wins). Deterministic for
/// a fixed seed. Identical systems give p = 1.
pub fn paired_bootstrap(
    hyp_a: &[String],
    hyp_b: &[String],
    refs: &[String],
    metric: &MetricKind,
    n_resamples: usize,
    seed: u64,
) -> Result<f64, MetricError> {
    if hyp_a.len() != refs.len() || hyp_b.len() != refs.len() {
        return Err(MetricError::LengthMismatch {
            hyps: hyp_a.len().max(hyp_b.len()),
            refs: refs.len(),
        });
    }
    let n = refs.len();
    if n < 2 {
        return Err(MetricError::TooFewSegments(n));
    }

    let stats = match metric {
        MetricKind::Bleu(cfg) => SegStats::Bleu(
            hyp_a
                .iter()
                .zip(refs)
                .map(|(h, r)| bleu::segment_stats(h, r, cfg))
                .collect(),
            hyp_b
                .iter()
                .zip(refs)
                .map(|(h, r)| bleu::segment_stats(h, r, cfg))
                .collect(),
        ),
        MetricKind::Chrf(cfg) => SegStats::Chrf(
            hyp_a
                .iter()
                .zip(refs)
                .map(|(h, r)| chrf::segment_stats(h, r, cfg))
                .collect(),
            hyp_b
                .iter()
                .zip(refs)
                .map(|(h, r)| chrf::segment_stats(h, r, cfg))
                .collect(),
        ),
        MetricKind::RougeL => {
            let tok = |s: &String| -> Vec<String> {
                s.split_whitespace().map(|w| w.to_string()).collect()
            };
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for ((ha, hb), r) in hyp_a.iter().zip(hyp_b).zip(refs) {
                a.push(rouge_l_pair(&tok(ha), &tok(r))?);
                b.push(rouge_l_pair(&tok(hb), &tok(r))?);
            }
            SegStats::Rouge(a, b)
        }
    };

    let all: Vec<usize> = (0..n).collect();
    let (obs_a, obs_b) = stats.scores(metric, &all);
    let a_wins_observed = obs_a >= obs_b;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wins = 0usize;
    let mut indices = vec![0usize; n];
    for _ in 0..n_resamples {
        for slot in indices.iter_mut() {
            *slot = rng.random_range(0..n);
        }
        let (sa, sb) = stats.scores(metric, &indices);
        let won = if a_wins_observed { sa > sb } else { sb > sa };
        if won {
            wins += 1;
        }
    }
    Ok(1.0 - wins as f64 / n_resamples as f64)
}
