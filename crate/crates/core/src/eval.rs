use crate::corpus::{ParseTree, Sentence};
use crate::error::{Error, Result};

/// Unlabeled attachment score, micro-averaged over tokens.
pub fn uas(predicted: &[ParseTree], gold: &[Sentence]) -> Result<f64> {
    let (correct, total) = attachment_counts(predicted, gold)?;
    if total == 0 {
        return Err(Error::Misaligned("no tokens to evaluate".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// `(correct heads, tokens)` over aligned predictions and gold sentences.
pub fn attachment_counts(predicted: &[ParseTree], gold: &[Sentence]) -> Result<(usize, usize)> {
    if predicted.len() != gold.len() {
        return Err(Error::Misaligned(format!(
            "{} predicted trees, {} gold sentences",
            predicted.len(),
            gold.len()
        )));
    }
    let mut correct = 0;
    let mut total = 0;
    for (tree, sentence) in predicted.iter().zip(gold) {
        let heads = sentence
            .gold_heads()
            .ok_or_else(|| Error::MissingGold(sentence.id().to_string()))?;
        if heads.len() != tree.len() {
            return Err(Error::Misaligned(format!(
                "sentence {}: {} predicted heads, {} gold",
                sentence.id(),
                tree.len(),
                heads.len()
            )));
        }
        correct += tree.heads().iter().zip(heads).filter(|(p, g)| p == g).count();
        total += heads.len();
    }
    Ok((correct, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(id: &str, heads: Vec<usize>) -> Sentence {
        let pairs: Vec<(&str, &str)> = heads.iter().map(|_| ("w", "X")).collect();
        Sentence::from_pairs(id, &pairs)
            .unwrap()
            .with_gold_heads(heads)
            .unwrap()
    }

    #[test]
    fn identity_is_one() {
        let g = sent("a", vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let p = g.gold_tree().unwrap();
        assert_eq!(uas(&[p], &[g]).unwrap(), 1.0);
    }

    #[test]
    fn half_correct() {
        let g = sent("a", vec![2, 0]);
        let p = ParseTree::new(vec![0, 0]).unwrap();
        assert_eq!(uas(&[p], &[g]).unwrap(), 0.5);
    }

    #[test]
    fn micro_average() {
        let g1 = sent("a", vec![2, 0]);
        let g2 = sent("b", vec![0, 1, 2]);
        let p1 = ParseTree::new(vec![0, 0]).unwrap();
        let p2 = ParseTree::new(vec![0, 1, 2]).unwrap();
        assert!((uas(&[p1, p2], &[g1, g2]).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn missing_gold() {
        let g = Sentence::from_pairs("a", &[("w", "X")]).unwrap();
        let p = ParseTree::new(vec![0]).unwrap();
        assert!(matches!(uas(&[p], &[g]), Err(Error::MissingGold(_))));
    }
}
