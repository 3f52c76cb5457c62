use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::json;

use cip::compile::{
    compile_constraints, estimate_ratio, generate_synthetic, SyntheticSpec, TemplateConfig,
    TypologyTable, UnaryTrainingRatios, ORACLE_THETA,
};
use cip::config::Config;
use cip::constraints::{self, read_constraints, write_constraints, Constraint};
use cip::conllu::{read_conllu, write_conllu};
use cip::corpus::{Corpus, ParseTree};
use cip::decoder::decode;
use cip::report::{write_atomic, write_lr_trace, write_pr_trace, write_report, Report};
use cip::scores::{read_scores_with_ids, write_scores};
use cip::{lr_infer, pr_infer, Error, Result};

#[derive(Parser)]
#[command(name = "cip", version, about = "Dependency decoding under corpus-level word-order constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Baseline,
    Lr,
    Pr,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Lr => "lr",
            Method::Pr => "pr",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decode trees from arc scores, optionally under constraints.
    Decode {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum, default_value = "baseline")]
        method: Method,
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[arg(long)]
        projective: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the minibatch seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compile constraints for one language from a typology table.
    CompileConstraints {
        #[arg(long)]
        wals: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        lang: String,
        /// JSON map of template id to language to observed ratio.
        #[arg(long)]
        training: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate constraint ratios from gold trees.
    EstimateRatios {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = ORACLE_THETA)]
        theta: f64,
        /// Write the constraints with estimated ratios here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unlabeled attachment score of predicted against gold trees.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Generate a synthetic corpus with planted ratios.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Write the planted templates as constraints with the oracle margin.
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coverage-weighted gap between baseline and target ratios.
    RatioGap {
        #[arg(long)]
        conllu: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long)]
        projective: bool,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_corpus(conllu: &Path, scores: &Path) -> Result<Corpus> {
    let sentences = read_conllu(open(conllu)?)?;
    let scored = read_scores_with_ids(open(scores)?)?;
    if scored.len() != sentences.len() {
        return Err(Error::Misaligned(format!(
            "{} sentences but {} score matrices",
            sentences.len(),
            scored.len()
        )));
    }
    for (k, ((id, _), s)) in scored.iter().zip(&sentences).enumerate() {
        if let Some(id) = id {
            if id != s.id() {
                return Err(Error::Misaligned(format!(
                    "score line {} is for sentence {id}, CoNLL-U has {}",
                    k + 1,
                    s.id()
                )));
            }
        }
    }
    Corpus::new(sentences, scored.into_iter().map(|(_, m)| m).collect())
}

fn load_constraints(path: &Path) -> Result<Vec<Constraint>> {
    read_constraints(open(path)?)
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[allow(clippy::too_many_arguments)]
fn run_decode(
    conllu: &Path,
    scores: &Path,
    method: Method,
    constraints_path: Option<&Path>,
    projective: bool,
    out: &Path,
    trace: Option<&Path>,
    report: Option<&Path>,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<()> {
    let mut config = match config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = seed {
        config.pr.seed = seed;
    }
    let corpus = load_corpus(conllu, scores)?;
    let constraints = match constraints_path {
        Some(p) => config.apply_root_policy(load_constraints(p)?),
        None if method == Method::Baseline => Vec::new(),
        None => return Err(Error::Param(format!("--method {} needs --constraints", method.name()))),
    };
    let options = config.decode_options(projective);
    let baseline: Vec<ParseTree> = corpus.scores().iter().map(|m| decode(m, options)).collect();

    let (trees, iterations, converged, trace_bytes) = match method {
        Method::Baseline => (baseline.clone(), 0, true, None),
        Method::Lr => {
            let outcome = lr_infer(&corpus, &constraints, &config.lr, options)?;
            let bytes = to_bytes(|b| write_lr_trace(b, &constraints, &outcome.state.trace))?;
            (outcome.trees, outcome.state.trace.len(), outcome.converged, Some(bytes))
        }
        Method::Pr => {
            let outcome = pr_infer(&corpus, &constraints, &config.pr, options)?;
            let bytes = to_bytes(|b| write_pr_trace(b, &constraints, &outcome.trace))?;
            let converged = outcome.trace.len() < config.pr.max_iter;
            (outcome.trees, outcome.trace.len(), converged, Some(bytes))
        }
    };

    let rep = Report::build(method.name(), &corpus, &constraints, &baseline, &trees, iterations, converged)?;
    for c in rep.constraints.iter().filter(|c| !c.satisfied) {
        warn!(
            "constraint {} not satisfied: target {} ± {}, measured {:?}",
            c.id, c.r, c.theta, c.ratio_final
        );
    }

    write_atomic(out, &to_bytes(|b| write_conllu(b, corpus.sentences(), Some(&trees)))?)?;
    if let Some(path) = trace {
        match trace_bytes {
            Some(bytes) => write_atomic(path, &bytes)?,
            None => warn!("baseline decoding has no trace; {} not written", path.display()),
        }
    }
    if let Some(path) = report {
        write_atomic(path, &to_bytes(|b| write_report(b, &rep))?)?;
    }
    Ok(())
}

fn run_compile(wals: &Path, templates: &Path, lang: &str, training: Option<&Path>, out: &Path) -> Result<()> {
    let table = TypologyTable::read_csv(open(wals)?)?;
    if !table.contains_language(lang) {
        warn!("language {lang} absent from typology table; all features treated as missing");
    }
    let config = TemplateConfig::read(open(templates)?)?;
    let training: UnaryTrainingRatios = match training {
        Some(p) => serde_json::from_reader(open(p)?)?,
        None => BTreeMap::new(),
    };
    let compiled = compile_constraints(&table, lang, &config, &training)?;
    for note in &compiled.notes {
        warn!("{note}");
    }
    write_atomic(out, &to_bytes(|b| write_constraints(b, &compiled.constraints))?)
}

fn run_estimate(
    conllu: &Path,
    constraints_path: &Path,
    sample_size: Option<usize>,
    seed: u64,
    theta: f64,
    out: Option<&Path>,
) -> Result<()> {
    let treebank = read_conllu(open(conllu)?)?;
    let templates = load_constraints(constraints_path)?;
    let mut rows = Vec::new();
    let mut estimated = Vec::new();
    for c in &templates {
        let e = estimate_ratio(&treebank, c, sample_size, seed)?;
        rows.push(json!({"id": c.id(), "ratio": e.ratio, "count": e.count}));
        match e.ratio {
            Some(r) => estimated.push(c.with_ratio(r, theta)?),
            None => warn!("constraint {}: no matching arcs, ratio undefined", c.id()),
        }
    }
    println!("{}", serde_json::to_string_pretty(&rows)?);
    if let Some(path) = out {
        write_atomic(path, &to_bytes(|b| write_constraints(b, &estimated))?)?;
    }
    Ok(())
}

fn run_evaluate(pred: &Path, gold: &Path) -> Result<()> {
    let predicted = read_conllu(open(pred)?)?;
    let gold = read_conllu(open(gold)?)?;
    let trees = predicted
        .iter()
        .map(|s| s.gold_tree().ok_or_else(|| Error::MissingGold(s.id().to_string())))
        .collect::<Result<Vec<_>>>()?;
    let uas = cip::eval::uas(&trees, &gold)?;
    println!("{}", json!({ "uas": uas }));
    Ok(())
}

fn run_synth(spec: &Path, conllu: &Path, scores: &Path, constraints: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let mut spec: SyntheticSpec = serde_json::from_reader(open(spec)?)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let synthetic = generate_synthetic(&spec)?;
    let corpus = &synthetic.corpus;
    let ids: Vec<String> = corpus.sentences().iter().map(|s| s.id().to_string()).collect();
    write_atomic(conllu, &to_bytes(|b| write_conllu(b, corpus.sentences(), None))?)?;
    write_atomic(scores, &to_bytes(|b| write_scores(b, corpus.scores(), Some(&ids)))?)?;
    if let Some(path) = constraints {
        let planted = spec
            .planted
            .iter()
            .map(|p| p.constraint(ORACLE_THETA))
            .collect::<Result<Vec<_>>>()?;
        write_atomic(path, &to_bytes(|b| write_constraints(b, &planted))?)?;
    }
    println!("{}", json!({ "true_ratios": synthetic.true_ratios }));
    Ok(())
}

fn run_ratio_gap(conllu: &Path, scores: &Path, constraints_path: &Path, projective: bool) -> Result<()> {
    let corpus = load_corpus(conllu, scores)?;
    let constraints = load_constraints(constraints_path)?;
    let options = cip::DecodeOptions::projective(projective);
    let baseline: Vec<ParseTree> = corpus.scores().iter().map(|m| decode(m, options)).collect();
    let mut source = Vec::new();
    let mut target = Vec::new();
    let mut coverage = Vec::new();
    for c in &constraints {
        // an undefined baseline ratio has zero coverage and drops out
        source.push(constraints::ratio(c, &corpus, &baseline)?.unwrap_or(c.r()));
        target.push(c.r());
        coverage.push(constraints::coverage(c, &corpus, &baseline)?);
    }
    let gap = constraints::ratio_gap(&constraints, &source, &target, &coverage)?;
    println!(
        "{}",
        json!({ "ratio_gap": gap, "source_ratios": source, "target_ratios": target, "coverages": coverage })
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode {
            conllu,
            scores,
            method,
            constraints,
            projective,
            out,
            trace,
            report,
            config,
            seed,
        } => run_decode(
            &conllu,
            &scores,
            method,
            constraints.as_deref(),
            projective,
            &out,
            trace.as_deref(),
            report.as_deref(),
            config.as_deref(),
            seed,
        ),
        Command::CompileConstraints {
            wals,
            templates,
            lang,
            training,
            out,
        } => run_compile(&wals, &templates, &lang, training.as_deref(), &out),
        Command::EstimateRatios {
            conllu,
            constraints,
            sample_size,
            seed,
            theta,
            out,
        } => run_estimate(&conllu, &constraints, sample_size, seed, theta, out.as_deref()),
        Command::Evaluate { pred, gold } => run_evaluate(&pred, &gold),
        Command::Synth {
            spec,
            conllu,
            scores,
            constraints,
            seed,
        } => run_synth(&spec, &conllu, &scores, constraints.as_deref(), seed),
        Command::RatioGap {
            conllu,
            scores,
            constraints,
            projective,
        } => run_ratio_gap(&conllu, &scores, &constraints, projective),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
