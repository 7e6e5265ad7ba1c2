//! Unigram vocabulary training: substring seeding, EM over segmentation
//! lattices, and likelihood-guided pruning.

use std::collections::HashMap;

use super::lattice::{log_sum_exp, PieceSet};
use super::{Piece, Specials, SubwordError, SubwordVocab, TokenizerMode, UnitCorpus};

#[derive(Debug, Clone)]
pub struct TrainerConfig {
    pub target_size: usize,
    pub max_piece_len: usize,
    pub seed_size: usize,
    /// EM epochs on the seed vocabulary before pruning starts.
    pub em_epochs: usize,
    /// EM epochs after each prune round.
    pub prune_em_epochs: usize,
    pub shrink_factor: f64,
    /// Characters rarer than this in the corpus are dropped from the final
    /// vocabulary and map to unk.
    pub coverage_min_freq: u64,
    pub mode: TokenizerMode,
    pub specials: Specials,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            target_size: 32_000,
            max_piece_len: 16,
            seed_size: 100_000,
            em_epochs: 4,
            prune_em_epochs: 2,
            shrink_factor: 0.75,
            coverage_min_freq: 2,
            mode: TokenizerMode::WordSegmented,
            specials: Specials::default(),
        }
    }
}

/// Candidate pieces: every unit substring up to `max_piece_len`, ranked by
/// frequency x length and truncated to `seed_size`; single characters are
/// always included. Initial log probabilities are normalized scores.
pub fn seed_vocab(corpus: &UnitCorpus, max_piece_len: usize, seed_size: usize) -> Vec<Piece> {
    let mut char_counts: std::collections::BTreeMap<char, u64> = Default::default();
    let mut sub_counts: HashMap<String, u64> = HashMap::new();
    for (unit, freq) in corpus.units() {
        let chars: Vec<char> = unit.chars().collect();
        for &c in &chars {
            *char_counts.entry(c).or_insert(0) += freq;
        }
        for len in 2..=max_piece_len.min(chars.len()) {
            for start in 0..=chars.len() - len {
                let sub: String = chars[start..start + len].iter().collect();
                if sub.contains(' ') {
                    continue;
                }
                *sub_counts.entry(sub).or_insert(0) += freq;
            }
        }
    }

    let mut scored: Vec<(u64, String)> = sub_counts
        .into_iter()
        .map(|(s, c)| (c * s.chars().count() as u64, s))
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    let n_multi = seed_size.saturating_sub(char_counts.len());
    let mut raw: Vec<(String, f64)> = char_counts
        .iter()
        .map(|(&c, &n)| (c.to_string(), n as f64))
        .collect();
    raw.extend(
        scored
            .into_iter()
            .take(n_multi)
            .map(|(score, s)| (s, score as f64)),
    );
    let total: f64 = raw.iter().map(|(_, s)| s).sum();
    raw.into_iter()
        .map(|(surface, score)| Piece {
            surface,
            log_prob: (score / total).ln(),
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct EmReport {
    /// Corpus log likelihood at the start of each epoch (under the
    /// parameters that epoch refines); non-decreasing.
    pub log_likelihood: Vec<f64>,
}

/// Expectation-maximization over the per-unit segmentation lattices.
/// Pieces whose expected count vanishes get -inf log probability and drop
/// out of the lattice.
pub fn em_train(
    pieces: &[Piece],
    corpus: &UnitCorpus,
    epochs: usize,
) -> Result<(Vec<Piece>, EmReport), SubwordError> {
    if corpus.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    let mut pieces = pieces.to_vec();
    let mut report = EmReport::default();
    for _ in 0..epochs {
        let set = PieceSet::new(&pieces);
        let mut counts = vec![0.0f64; pieces.len()];
        let mut ll = 0.0;
        for (unit, freq) in corpus.units() {
            let chars: Vec<char> = unit.chars().collect();
            let z = set
                .accumulate_expected_counts(&chars, *freq as f64, &mut counts)
                .ok_or_else(|| SubwordError::UncoveredUnit(unit.clone()))?;
            ll += *freq as f64 * z;
        }
        report.log_likelihood.push(ll);
        let total: f64 = counts.iter().sum();
        for (piece, &count) in pieces.iter_mut().zip(&counts) {
            piece.log_prob = if count > 0.0 {
                (count / total).ln()
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    Ok((pieces, report))
}

/// Corpus log likelihood lost by removing each piece, probabilities held
/// fixed (renormalization happens in the EM re-run that follows a prune
/// round). `None` marks mandatory single-character pieces.
pub fn removal_losses(
    pieces: &[Piece],
    corpus: &UnitCorpus,
) -> Result<Vec<Option<f64>>, SubwordError> {
    let set = PieceSet::new(pieces);
    let mut losses: Vec<Option<f64>> = pieces
        .iter()
        .map(|p| {
            if p.surface.chars().count() == 1 {
                None
            } else {
                Some(0.0)
            }
        })
        .collect();
    for (unit, freq) in corpus.units() {
        let chars: Vec<char> = unit.chars().collect();
        let z = set
            .log_z(&chars, None)
            .ok_or_else(|| SubwordError::UncoveredUnit(unit.clone()))?;
        for (idx, piece) in pieces.iter().enumerate() {
            if losses[idx].is_none() || !unit.contains(&piece.surface) {
                continue;
            }
            // single-character pieces stay, so the banned lattice is connected
            let z_without = set
                .log_z(&chars, Some(idx))
                .ok_or_else(|| SubwordError::UncoveredUnit(unit.clone()))?;
            *losses[idx].as_mut().unwrap() += *freq as f64 * (z - z_without);
        }
    }
    Ok(losses)
}

/// Shrink the piece inventory toward `target_size`, each round dropping the
/// pieces whose removal costs the least likelihood (single characters are
/// never dropped) and re-running EM.
pub fn prune_vocab(
    pieces: Vec<Piece>,
    corpus: &UnitCorpus,
    target_size: usize,
    shrink_factor: f64,
) -> Result<Vec<Piece>, SubwordError> {
    prune_with_epochs(pieces, corpus, target_size, shrink_factor, 2)
}

fn prune_with_epochs(
    mut pieces: Vec<Piece>,
    corpus: &UnitCorpus,
    target_size: usize,
    shrink_factor: f64,
    em_epochs: usize,
) -> Result<Vec<Piece>, SubwordError> {
    let shrink = if (0.0..1.0).contains(&shrink_factor) && shrink_factor > 0.0 {
        shrink_factor
    } else {
        0.75
    };
    let mandatory = pieces
        .iter()
        .filter(|p| p.surface.chars().count() == 1)
        .count();
    if target_size < mandatory {
        return Err(SubwordError::TargetBelowCharsetSize {
            target: target_size,
            charset: mandatory,
        });
    }
    while pieces.len() > target_size {
        let losses = removal_losses(&pieces, corpus)?;
        let next_size = ((pieces.len() as f64 * shrink) as usize)
            .max(target_size)
            .max(mandatory);
        let keep_multi = next_size - mandatory;

        let mut removable: Vec<(f64, usize)> = losses
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|loss| (loss, i)))
            .collect();
        removable.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| pieces[a.1].surface.cmp(&pieces[b.1].surface))
        });
        let kept_multi: std::collections::HashSet<usize> =
            removable.iter().take(keep_multi).map(|&(_, i)| i).collect();
        let survivors: Vec<Piece> = pieces
            .iter()
            .enumerate()
            .filter(|(i, p)| p.surface.chars().count() == 1 || kept_multi.contains(i))
            .map(|(_, p)| p.clone())
            .collect();
        let (next, _) = em_train(&survivors, corpus, em_epochs)?;
        pieces = next;
    }
    Ok(pieces)
}

/// Full training run: seed, EM, prune to target, apply the character
/// coverage floor, renormalize, and package with specials. Deterministic for
/// a fixed corpus and config.
pub fn train(corpus: &UnitCorpus, cfg: &TrainerConfig) -> Result<SubwordVocab, SubwordError> {
    if corpus.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    let seeds = seed_vocab(corpus, cfg.max_piece_len, cfg.seed_size);
    let (mut pieces, _) = em_train(&seeds, corpus, cfg.em_epochs.max(1))?;
    if pieces.len() > cfg.target_size {
        pieces = prune_with_epochs(
            pieces,
            corpus,
            cfg.target_size,
            cfg.shrink_factor,
            cfg.prune_em_epochs.max(1),
        )?;
    }

    // coverage floor: rare characters fall back to unk at encode time
    let char_freqs = corpus.char_freqs();
    pieces.retain(|p| {
        if !p.log_prob.is_finite() {
            return false;
        }
        let mut chars = p.surface.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => char_freqs.get(&c).copied().unwrap_or(0) >= cfg.coverage_min_freq,
            _ => true,
        }
    });
    if pieces.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }

    // renormalize so piece probabilities sum to one
    let log_mass = pieces
        .iter()
        .map(|p| p.log_prob)
        .fold(f64::NEG_INFINITY, log_sum_exp);
    for p in &mut pieces {
        p.log_prob -= log_mass;
    }
    pieces.sort_by(|a, b| {
        b.log_prob
            .partial_cmp(&a.log_prob)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.surface.cmp(&b.surface))
    });

    SubwordVocab::new(cfg.mode, cfg.specials.clone(), cfg.target_size, pieces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(units: &[(&str, u64)]) -> UnitCorpus {
        let mut all = Vec::new();
        for &(u, n) in units {
            for _ in 0..n {
                all.push(u.to_string());
            }
        }
        UnitCorpus::from_units(all)
    }

    fn piece_prob(pieces: &[Piece], surface: &str) -> f64 {
        pieces
            .iter()
            .find(|p| p.surface == surface)
            .map(|p| p.log_prob.exp())
            .unwrap_or(0.0)
    }

    #[test]
    fn seed_counts_match_substring_oracle() {
        let c = corpus(&[("aaab", 1)]);
        let seeds = seed_vocab(&c, 3, 100);
        let surfaces: Vec<&str> = seeds.iter().map(|p| p.surface.as_str()).collect();
        for expected in ["a", "b", "aa", "aaa", "ab", "aab"] {
            assert!(surfaces.contains(&expected), "missing {expected}");
        }
        // brute-force substring counts of "aaab" with len <= 3:
        // a:3 b:1 aa:2 ab:1 aaa:1 aab:1 -> scores a:3 b:1 aa:4 ab:2 aaa:3 aab:3
        let score_sum = 3.0 + 1.0 + 4.0 + 2.0 + 3.0 + 3.0;
        assert!((piece_prob(&seeds, "aa") - 4.0 / score_sum).abs() < 1e-12);
        assert!((piece_prob(&seeds, "a") - 3.0 / score_sum).abs() < 1e-12);
    }

    #[test]
    fn seed_keeps_chars_at_tiny_seed_size() {
        let c = corpus(&[("abcab", 2)]);
        let seeds = seed_vocab(&c, 4, 1);
        let surfaces: Vec<&str> = seeds.iter().map(|p| p.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["a", "b", "c"]);
    }

    #[test]
    fn seed_len_one_is_charset() {
        let c = corpus(&[("abcab", 2)]);
        let seeds = seed_vocab(&c, 1, 1000);
        assert_eq!(seeds.len(), 3);
    }

    #[test]
    fn em_monotone_likelihood() {
        let c = corpus(&[("ab", 1)]);
        let seeds = seed_vocab(&c, 2, 100);
        let (_, report) = em_train(&seeds, &c, 10).unwrap();
        for w in report.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "likelihood decreased: {w:?}");
        }
    }

    #[test]
    fn em_converges_on_repeated_unit() {
        let c = corpus(&[("ab", 5)]);
        let seeds = seed_vocab(&c, 2, 100);
        let mut pieces = seeds;
        let mut converged_at = None;
        for iter in 1..=10 {
            let before: Vec<f64> = pieces.iter().map(|p| p.log_prob.exp()).collect();
            let (next, _) = em_train(&pieces, &c, 1).unwrap();
            pieces = next;
            let after: Vec<f64> = pieces.iter().map(|p| p.log_prob.exp()).collect();
            let delta = before
                .iter()
                .zip(&after)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if delta < 1e-9 {
                converged_at = Some(iter);
                break;
            }
        }
        assert!(converged_at.is_some(), "no convergence in 10 iterations");
        assert!(piece_prob(&pieces, "ab") > 0.999_999);
    }

    #[test]
    fn prune_keeps_dominant_piece() {
        // "ab" carries most of the likelihood; pruning to charset+1 keeps it
        let c = corpus(&[("ab", 50), ("cd", 2)]);
        let seeds = seed_vocab(&c, 2, 100);
        let (pieces, _) = em_train(&seeds, &c, 3).unwrap();
        let pruned = prune_vocab(pieces, &c, 5, 0.75).unwrap();
        let surfaces: Vec<&str> = pruned.iter().map(|p| p.surface.as_str()).collect();
        assert!(surfaces.contains(&"ab"), "{surfaces:?}");
        assert!(!surfaces.contains(&"cd"), "{surfaces:?}");
        for ch in ["a", "b", "c", "d"] {
            assert!(surfaces.contains(&ch), "char piece {ch} pruned");
        }
    }

    #[test]
    fn prune_to_charset_leaves_chars() {
        let c = corpus(&[("abab", 10)]);
        let seeds = seed_vocab(&c, 3, 100);
        let (pieces, _) = em_train(&seeds, &c, 2).unwrap();
        let pruned = prune_vocab(pieces, &c, 2, 0.75).unwrap();
        let mut surfaces: Vec<&str> = pruned.iter().map(|p| p.surface.as_str()).collect();
        surfaces.sort();
        assert_eq!(surfaces, vec!["a", "b"]);
    }

    #[test]
    fn prune_target_below_charset_errors() {
        let c = corpus(&[("abc", 1)]);
        let seeds = seed_vocab(&c, 2, 100);
        let err = prune_vocab(seeds, &c, 2, 0.75).unwrap_err();
        assert!(matches!(err, SubwordError::TargetBelowCharsetSize { .. }));
    }

    #[test]
    fn train_deterministic() {
        let c = corpus(&[("កខគ", 7), ("កខ", 11), ("គឃ", 3)]);
        let cfg = TrainerConfig {
            target_size: 6,
            max_piece_len: 3,
            seed_size: 50,
            ..TrainerConfig::default()
        };
        let a = train(&c, &cfg).unwrap().to_file_string();
        let b = train(&c, &cfg).unwrap().to_file_string();
        assert_eq!(a, b);
    }

    #[test]
    fn train_applies_coverage_floor() {
        // "x" occurs once (< coverage_min_freq 2): dropped, encodes as unk
        let c = corpus(&[("aax", 1), ("aa", 9)]);
        let cfg = TrainerConfig {
            target_size: 8,
            max_piece_len: 2,
            seed_size: 50,
            ..TrainerConfig::default()
        };
        let vocab = train(&c, &cfg).unwrap();
        assert!(vocab.piece_id("x").is_none());
        vocab.check_invariants().unwrap();
        let ids = vocab.encode_unit("aax");
        assert_eq!(*ids.last().unwrap(), super::super::UNK_ID);
    }
}
