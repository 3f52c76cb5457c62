use cip::conllu::{read_conllu, write_conllu};
use cip::corpus::{to_distribution, ScoreMatrix, Sentence, Token};
use cip::eval::uas;
use cip::scores::{read_scores, read_scores_with_ids, write_scores};
use cip::ParseTree;
use proptest::prelude::*;

const UPOS: [&str; 6] = ["NOUN", "VERB", "ADP", "ADJ", "DET", "PUNCT"];

fn tree_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    (Just((1..=n).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<prop::sample::Index>(), n))
        .prop_map(move |(order, picks)| {
            let mut heads = vec![0; n];
            for (i, &tok) in order.iter().enumerate() {
                let k = picks[i].index(i + 1);
                heads[tok - 1] = if k == 0 { 0 } else { order[k - 1] };
            }
            heads
        })
}

fn sentence_strategy() -> impl Strategy<Value = Sentence> {
    (1usize..=8)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(("[a-z]{1,6}", 0usize..UPOS.len(), "[a-z:]{1,8}"), n),
                tree_strategy(n),
                "[a-z0-9-]{1,10}",
            )
        })
        .prop_map(|(toks, heads, id)| {
            let tokens = toks.iter().map(|(f, u, _)| Token::new(f.clone(), UPOS[*u])).collect();
            let deprels = toks.iter().map(|(_, _, d)| d.clone()).collect();
            Sentence::new(id, tokens)
                .unwrap()
                .with_gold_heads(heads)
                .unwrap()
                .with_deprels(deprels)
                .unwrap()
        })
}

proptest! {
    #[test]
    fn conllu_round_trip(sentences in prop::collection::vec(sentence_strategy(), 1..5)) {
        let mut buf = Vec::new();
        write_conllu(&mut buf, &sentences, None).unwrap();
        let back = read_conllu(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &sentences);
    }

    #[test]
    fn score_round_trip(n in 1usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = ScoreMatrix::from_fn(n, |_, _| rng.random_range(-1e3..1e3) / 7.0);
        let mut buf = Vec::new();
        write_scores(&mut buf, std::slice::from_ref(&m), None).unwrap();
        prop_assert_eq!(read_scores(buf.as_slice()).unwrap(), vec![m]);
    }

    #[test]
    fn distribution_columns_normalize(n in 1usize..7, values in prop::collection::vec(-30.0f64..30.0, 49), shift in -100.0f64..100.0) {
        let m = ScoreMatrix::from_fn(n, |h, d| values[h * 7 + d - 1]);
        let shifted = ScoreMatrix::from_fn(n, |h, d| values[h * 7 + d - 1] + shift * d as f64);
        let p = to_distribution(&m);
        let q = to_distribution(&shifted);
        for d in 1..=n {
            let col: f64 = (0..=n).map(|h| p.get(h, d)).sum();
            prop_assert!((col - 1.0).abs() < 1e-9);
            prop_assert_eq!(p.get(d, d), 0.0);
            for h in 0..=n {
                prop_assert!((p.get(h, d) - q.get(h, d)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn uas_is_token_weighted_and_order_free(
        pairs in prop::collection::vec((1usize..=6).prop_flat_map(|n| (tree_strategy(n), tree_strategy(n))), 1..6),
    ) {
        let sentences: Vec<Sentence> = pairs
            .iter()
            .enumerate()
            .map(|(k, (gold, _))| {
                let toks: Vec<(&str, &str)> = gold.iter().map(|_| ("w", "X")).collect();
                Sentence::from_pairs(format!("s{k}"), &toks).unwrap().with_gold_heads(gold.clone()).unwrap()
            })
            .collect();
        let preds: Vec<ParseTree> = pairs.iter().map(|(_, p)| ParseTree::new(p.clone()).unwrap()).collect();
        let total = uas(&preds, &sentences).unwrap();
        let tokens: usize = pairs.iter().map(|(g, _)| g.len()).sum();
        let weighted: f64 = preds
            .iter()
            .zip(&sentences)
            .map(|(p, s)| uas(std::slice::from_ref(p), std::slice::from_ref(s)).unwrap() * s.len() as f64)
            .sum::<f64>()
            / tokens as f64;
        prop_assert!((total - weighted).abs() < 1e-12);
        let rev_s: Vec<Sentence> = sentences.iter().rev().cloned().collect();
        let rev_p: Vec<ParseTree> = preds.iter().rev().cloned().collect();
        prop_assert!((uas(&rev_p, &rev_s).unwrap() - total).abs() < 1e-12);
    }
}

#[test]
fn score_examples() {
    let one = read_scores(r#"{"n":1,"scores":[[3.0],[0.0]]}"#.as_bytes()).unwrap();
    assert_eq!(one[0].get(1, 1), f64::NEG_INFINITY);
    assert_eq!(to_distribution(&one[0]).get(0, 1), 1.0);
    let err = read_scores(r#"{"n":2,"scores":[[1,2],[0,3]]}"#.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("expected 3 rows, got 2"), "{err}");
    let ids = read_scores_with_ids(r#"{"sent_id":"a","n":1,"scores":[[1.0],[null]]}"#.as_bytes()).unwrap();
    assert_eq!(ids[0].0.as_deref(), Some("a"));
}

#[test]
fn hand_softmax() {
    let m = ScoreMatrix::from_rows(1, &[vec![0.0], vec![0.0]]).unwrap();
    assert_eq!(to_distribution(&m).get(0, 1), 1.0);
    let two = ScoreMatrix::from_rows(2, &[vec![0.0, 0.0], vec![0.0, 3f64.ln()], vec![3f64.ln(), 0.0]]).unwrap();
    let p = to_distribution(&two);
    assert!((p.get(0, 2) - 0.25).abs() < 1e-12);
    assert!((p.get(1, 2) - 0.75).abs() < 1e-12);
}

#[test]
fn conllu_examples() {
    let text = "1\tdog\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
    let s = read_conllu(text.as_bytes()).unwrap();
    assert_eq!(s[0].gold_heads(), Some(&[0][..]));
    let cyc = "1\ta\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tb\t_\tNOUN\t_\t_\t1\tnmod\t_\t_\n\n";
    let err = read_conllu(cyc.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("gold heads not a tree"), "{err}");
}
