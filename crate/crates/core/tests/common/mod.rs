#![allow(dead_code)]

use cip::compile::{estimate_ratio, generate_synthetic, Corruption, Planted, Side, SyntheticSpec, ORACLE_THETA};
use cip::constraints::{self, Constraint};
use cip::corpus::{Corpus, ParseTree};
use cip::eval::uas;
use cip::{decode, lr_infer, pr_infer, DecodeOptions, LrParams, PrParams};

/// One spec of the fixed synthetic transfer suite. Planted head-left
/// ratios and corruption strength vary so the baseline drifts by
/// different amounts.
pub fn transfer_spec(i: usize) -> SyntheticSpec {
    let ratios = [0.95, 0.9, 0.85, 0.9, 0.8, 0.95, 0.85, 0.9, 0.8, 0.95];
    let biases = [2.0, 2.5, 3.0, 3.5, 4.0, 2.25, 2.75, 3.25, 3.75, 4.25];
    SyntheticSpec {
        sentences: 150,
        min_len: 5,
        max_len: 14,
        planted: vec![Planted::Unary {
            id: "C1".into(),
            pos: "NOUN".into(),
            ratio: ratios[i],
            rate: 0.35,
        }],
        margin: 2.0,
        sigma: 1.0,
        corruption: Some(Corruption {
            pos: "NOUN".into(),
            side: Side::Right,
            bias: biases[i],
        }),
        seed: 1000 + i as u64,
        ..SyntheticSpec::default()
    }
}

#[derive(Debug, Clone)]
pub struct TransferResult {
    pub planted: f64,
    pub oracle: f64,
    pub baseline_ratio: f64,
    pub gap: f64,
    pub baseline_uas: f64,
    pub lr_uas: f64,
    pub pr_uas: f64,
}

/// Oracle ratio from a separately seeded training corpus drawn from the
/// same spec.
pub fn oracle_constraint(spec: &SyntheticSpec) -> Constraint {
    let train = generate_synthetic(&SyntheticSpec {
        seed: spec.seed + 7919,
        sentences: spec.sentences * 2,
        ..spec.clone()
    })
    .unwrap();
    let template = spec.planted[0].constraint(ORACLE_THETA).unwrap();
    let r = estimate_ratio(train.corpus.sentences(), &template, None, 0)
        .unwrap()
        .ratio
        .unwrap();
    template.with_ratio(r, ORACLE_THETA).unwrap()
}

pub fn run_transfer(spec: &SyntheticSpec) -> TransferResult {
    let synth = generate_synthetic(spec).unwrap();
    let corpus: &Corpus = &synth.corpus;
    let c = oracle_constraint(spec);
    let options = DecodeOptions::default();
    let baseline: Vec<ParseTree> = corpus.scores().iter().map(|m| decode(m, options)).collect();
    let baseline_ratio = constraints::ratio(&c, corpus, &baseline).unwrap().unwrap();
    let coverage = constraints::coverage(&c, corpus, &baseline).unwrap();
    let gap = constraints::ratio_gap(std::slice::from_ref(&c), &[baseline_ratio], &[c.r()], &[coverage]).unwrap();
    let lr = lr_infer(corpus, std::slice::from_ref(&c), &LrParams::default(), options).unwrap();
    let pr = pr_infer(corpus, std::slice::from_ref(&c), &PrParams::default(), options).unwrap();
    let sentences = corpus.sentences();
    TransferResult {
        planted: synth.true_ratios[0].unwrap(),
        oracle: c.r(),
        baseline_ratio,
        gap,
        baseline_uas: uas(&baseline, sentences).unwrap(),
        lr_uas: uas(&lr.trees, sentences).unwrap(),
        pr_uas: uas(&pr.trees, sentences).unwrap(),
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}
