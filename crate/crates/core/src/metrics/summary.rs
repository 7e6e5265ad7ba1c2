//! Extractive summarization baselines: leading sentences and the best
//! single sentence by Rouge-L.

use super::rouge::{rouge_l_pair, RougeScore};
use super::MetricError;

/// First `min(3, n)` sentences, concatenated (sentences keep their own
/// boundary whitespace). An empty article yields an empty summary.
pub fn lead3(sentences: &[String]) -> String {
    sentences.iter().take(3).cloned().collect()
}

/// Index and score of the article sentence with the highest Rouge-L F
/// against the reference tokens; ties go to the earliest sentence.
pub fn oracle_sentence(
    sentence_tokens: &[Vec<String>],
    reference_tokens: &[String],
) -> Result<(usize, RougeScore), MetricError> {
    if sentence_tokens.is_empty() {
        return Err(MetricError::EmptyArticle);
    }
    let mut best: Option<(usize, RougeScore)> = None;
    for (i, sent) in sentence_tokens.iter().enumerate() {
        let score = rouge_l_pair(sent.as_slice(), reference_tokens)?;
        if best.map_or(true, |(_, b)| score.f > b.f) {
            best = Some((i, score));
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(|w| w.to_string()).collect()
    }

    #[test]
    fn lead3_examples() {
        let sents: Vec<String> = ["A. ", "B. ", "C. ", "D. ", "E."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(lead3(&sents), "A. B. C. ");
        assert_eq!(lead3(&sents[..2]), "A. B. ");
        assert_eq!(lead3(&[]), "");
    }

    #[test]
    fn oracle_finds_verbatim_sentence() {
        let sents = vec![words("one two"), words("the real summary"), words("three")];
        let (idx, score) = oracle_sentence(&sents, &words("the real summary")).unwrap();
        assert_eq!(idx, 1);
        assert_eq!(score.f, 1.0);
    }

    #[test]
    fn oracle_tie_takes_earliest() {
        let sents = vec![words("a b"), words("c d"), words("e f")];
        let (idx, score) = oracle_sentence(&sents, &words("x y")).unwrap();
        assert_eq!(idx, 0);
        assert_eq!(score.f, 0.0);
    }

    #[test]
    fn oracle_hand_computed_argmax() {
        // ref "k l m n"; LCS per sentence: 1, 3, 2, 0
        let sents = vec![
            words("k x y z"),
            words("k l q n"),
            words("m n"),
            words("p q"),
        ];
        let (idx, score) = oracle_sentence(&sents, &words("k l m n")).unwrap();
        assert_eq!(idx, 1);
        // P = 3/4, R = 3/4, F = 3/4
        assert!((score.f - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_article_errors() {
        assert!(matches!(
            oracle_sentence(&[], &words("a")),
            Err(MetricError::EmptyArticle)
        ));
    }
}
