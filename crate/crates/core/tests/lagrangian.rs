use cip::constraints::{self, Constraint};
use cip::corpus::{Corpus, ParseTree, ScoreMatrix, Sentence};
use cip::decoder::{brute_force_constrained, for_each_tree, mst_decode};
use cip::lagrangian::{lr_infer, relaxed_decode, LrParams, UpdateRule};
use cip::DecodeOptions;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NEG: f64 = f64::NEG_INFINITY;

/// Three "DET NOUN VERB" sentences. The verb attaches to the root; the
/// noun prefers the verb (Minus) in the last two and the determiner (Plus)
/// in the first, so the baseline ratio is 1/3.
fn toy_corpus() -> Corpus {
    let mut sentences = Vec::new();
    let mut scores = Vec::new();
    for (k, (to_det, to_verb)) in [(4.0, 2.0), (2.0, 3.0), (1.5, 2.5)].into_iter().enumerate() {
        sentences.push(
            Sentence::from_pairs(format!("s{k}"), &[("the", "DET"), ("dog", "NOUN"), ("ran", "VERB")]).unwrap(),
        );
        scores.push(
            ScoreMatrix::from_rows(
                3,
                &[
                    vec![0.0, -1.0, 5.0],
                    vec![NEG, to_det, 0.0],
                    vec![1.0, NEG, 0.0],
                    vec![0.5, to_verb, NEG],
                ],
            )
            .unwrap(),
        );
    }
    Corpus::new(sentences, scores).unwrap()
}

fn all_left() -> Constraint {
    Constraint::unary("C1", "NOUN", 1.0, 0.01).unwrap()
}

fn baseline(corpus: &Corpus) -> Vec<ParseTree> {
    corpus.scores().iter().map(mst_decode).collect()
}

#[test]
fn toy_corpus_reaches_all_left() {
    let corpus = toy_corpus();
    let c = all_left();
    let base = baseline(&corpus);
    let r0 = constraints::ratio(&c, &corpus, &base).unwrap().unwrap();
    assert!((r0 - 1.0 / 3.0).abs() < 1e-12);

    let out = lr_infer(&corpus, std::slice::from_ref(&c), &LrParams::default(), DecodeOptions::default()).unwrap();
    assert!(out.converged);
    for (s, t) in corpus.sentences().iter().zip(&out.trees) {
        let noun = 2;
        assert!(t.head(noun) < noun, "sentence {} noun head {}", s.id(), t.head(noun));
    }

    let oracle = brute_force_constrained(&corpus, std::slice::from_ref(&c), false).unwrap().unwrap();
    assert!(corpus.objective(&out.trees) <= oracle.objective + 1e-9);
    for it in &out.state.trace {
        assert!(it.dual_value >= oracle.objective - 1e-9, "iteration {}", it.iter);
    }
}

#[test]
fn satisfied_baseline_stops_immediately() {
    let corpus = toy_corpus();
    let loose = Constraint::unary("C1", "NOUN", 0.4, 0.1).unwrap();
    let out = lr_infer(&corpus, &[loose], &LrParams::default(), DecodeOptions::default()).unwrap();
    assert!(out.converged);
    assert_eq!(out.state.trace.len(), 1);
    assert_eq!(out.state.lambda, vec![0.0]);
    assert_eq!(out.trees, baseline(&corpus));
}

#[test]
fn relaxed_decode_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let tags = ["NOUN", "ADP", "VERB"];
    for _ in 0..50 {
        let mut sentences = Vec::new();
        let mut scores = Vec::new();
        for k in 0..2 {
            let n = rng.random_range(2..=5);
            let pairs: Vec<(&str, &str)> = (0..n).map(|_| ("w", tags[rng.random_range(0..3)])).collect();
            sentences.push(Sentence::from_pairs(format!("s{k}"), &pairs).unwrap());
            scores.push(ScoreMatrix::from_fn(n, |_, _| rng.random_range(-3.0..3.0)));
        }
        let corpus = Corpus::new(sentences, scores).unwrap();
        let cs = vec![
            Constraint::unary("C1", "NOUN", rng.random_range(0.0..1.0), 0.0).unwrap(),
            Constraint::binary("C2", "NOUN", "ADP", rng.random_range(0.0..1.0), 0.0).unwrap(),
        ];
        let lambda = vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let (trees, dual) = relaxed_decode(&corpus, &cs, &lambda, DecodeOptions::default());

        // L(Y, λ) = S(Y) + Σ λ_c ((1 - r_c) |Plus| - r_c |Minus|), maximized
        // per sentence by enumeration
        let mut expected = 0.0;
        for (k, (s, m)) in corpus.iter().enumerate() {
            let value = |heads: &[usize]| {
                let tree = ParseTree::new(heads.to_vec()).unwrap();
                let single = Corpus::new(vec![s.clone()], vec![m.clone()]).unwrap();
                let mut v = m.tree_score(&tree);
                for (c, l) in cs.iter().zip(&lambda) {
                    let (p, mi) = constraints::arc_counts(c, &single, std::slice::from_ref(&tree)).unwrap();
                    v += l * ((1.0 - c.r()) * p as f64 - c.r() * mi as f64);
                }
                v
            };
            let mut best = f64::NEG_INFINITY;
            for_each_tree(m.n(), |h| best = best.max(value(h)));
            assert!((value(trees[k].heads()) - best).abs() < 1e-9);
            expected += best;
        }
        assert!((dual - expected).abs() < 1e-9);
    }
}

#[test]
fn overwrite_rule_is_selectable() {
    let corpus = toy_corpus();
    let params = LrParams {
        max_iter: 3,
        update: UpdateRule::Overwrite,
        ..LrParams::default()
    };
    let out = lr_infer(&corpus, &[all_left()], &params, DecodeOptions::default()).unwrap();
    // λ = α (r̂ - r) after the first decode: 50 · (1/3 - 1)
    assert!((out.state.trace[1].lambda[0] - 50.0 * (1.0 / 3.0 - 1.0)).abs() < 1e-9);
}

#[test]
fn deterministic_traces() {
    let corpus = toy_corpus();
    let params = LrParams::default();
    let a = lr_infer(&corpus, &[all_left()], &params, DecodeOptions::default()).unwrap();
    let b = lr_infer(&corpus, &[all_left()], &params, DecodeOptions::default()).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.trees, b.trees);
}

/// Nouns never attach to the root, so every noun contributes exactly one
/// Plus or Minus arc and the Plus count alone tracks the ratio.
fn noun_corpus(rng: &mut ChaCha8Rng) -> Corpus {
    let mut sentences = Vec::new();
    let mut scores = Vec::new();
    for k in 0..3 {
        let n = rng.random_range(3..=6);
        let mut tags: Vec<&str> = (0..n).map(|_| if rng.random_bool(0.5) { "NOUN" } else { "VERB" }).collect();
        tags[0] = "VERB";
        let pairs: Vec<(&str, &str)> = tags.iter().map(|t| ("w", *t)).collect();
        sentences.push(Sentence::from_pairs(format!("s{k}"), &pairs).unwrap());
        scores.push(ScoreMatrix::from_fn(n, |h, d| {
            if h == 0 && tags[d - 1] == "NOUN" {
                -1e3
            } else {
                rng.random_range(-3.0..3.0)
            }
        }));
    }
    Corpus::new(sentences, scores).unwrap()
}

fn plus_count(c: &Constraint, corpus: &Corpus, trees: &[ParseTree]) -> usize {
    constraints::arc_counts(c, corpus, trees).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plus_arcs_respond_monotonically(seed in any::<u64>(), r in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = noun_corpus(&mut rng);
        let c = Constraint::unary("C1", "NOUN", r, 0.0).unwrap();
        let mut last = 0;
        for step in 0..=20 {
            let lambda = -10.0 + step as f64;
            let (trees, _) = relaxed_decode(&corpus, std::slice::from_ref(&c), &[lambda], DecodeOptions::default());
            let p = plus_count(&c, &corpus, &trees);
            prop_assert!(p >= last, "λ = {lambda}: {p} Plus arcs after {last}");
            last = p;
        }
    }

    #[test]
    fn overshoot_lowers_lambda(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus = noun_corpus(&mut rng);
        let probe = Constraint::unary("C1", "NOUN", 0.5, 0.0).unwrap();
        let base = baseline(&corpus);
        let Some(r_hat) = constraints::ratio(&probe, &corpus, &base).unwrap() else { return Ok(()); };
        prop_assume!(r_hat > 0.05);
        // target strictly below the measured ratio
        let c = probe.with_ratio(r_hat / 2.0, 0.0).unwrap();
        let params = LrParams { max_iter: 2, ..LrParams::default() };
        let out = lr_infer(&corpus, std::slice::from_ref(&c), &params, DecodeOptions::default()).unwrap();
        prop_assume!(out.state.trace.len() == 2);
        prop_assert!(out.state.trace[1].lambda[0] < 0.0);
        let (next, _) = relaxed_decode(&corpus, std::slice::from_ref(&c), &out.state.trace[1].lambda, DecodeOptions::default());
        prop_assert!(plus_count(&c, &corpus, &next) <= plus_count(&c, &corpus, &base));
    }
}
