use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use revhelper::assist::{handle_predict, PredictRequest, PredictResponse, ReviewerStats};
use revhelper::corpus::ReviewCorpus;
use revhelper::eval::{
    cross_validate, default_grid, evaluate_runs, run_baseline_comparison, run_grid, train_test_split,
    ComparisonConfig, EvalReport, PerformanceTable, TRAIN_FRACTION,
};
use revhelper::experience::HistorySidecar;
use revhelper::features::{build_dataset, impute_missing, Dataset, FeatureConfig, FeatureSet, ImputeStrategy};
use revhelper::ingest::{
    fetch_remote_reviews, generate_synthetic_corpus, ForgeConfig, LiveTransport, RecordingTransport, SynthSpec,
    TapeTransport,
};
use revhelper::labeling::{label_corpus, LabelPolicy};
use revhelper::learn::{train_classifier, Hyper, ModelKind, TrainedModel};
use revhelper::stats::study::run_comparative_study;
use revhelper::text::{LexiconKind, Lexicons};
use revhelper::{rng, Error, Result};

use crate::args::*;

/// Stream for deriving the importance seed from the training seed.
const IMPORTANCE_STREAM: u64 = 0x1a7f;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fetch(a) => fetch(a),
        Command::Synth(a) => synth(a),
        Command::Label(a) => label(a),
        Command::Features(a) => features(a),
        Command::Study(a) => study(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
        Command::Serve(a) => serve(a),
    }
}

fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn check_input(path: &Path) -> Result<()> {
    if !is_std(path) && !path.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input file {} does not exist", path.display()),
        )));
    }
    Ok(())
}

fn check_output(path: &Path) -> Result<()> {
    if is_std(path) {
        return Ok(());
    }
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", dir.display()),
        ))),
        _ => Ok(()),
    }
}

fn read_input(path: &Path) -> Result<String> {
    if is_std(path) {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(std::fs::read_to_string(path)?)
    }
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    if is_std(path) {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    } else {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn resolve_seed(seed: &SeedArg) -> u64 {
    seed.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn lexicons(args: &LexiconArgs) -> Result<Lexicons> {
    let mut lex = Lexicons::default();
    for (path, kind) in [
        (&args.stop_words, LexiconKind::StopWords),
        (&args.keywords, LexiconKind::ProgKeywords),
        (&args.positive, LexiconKind::SentimentPositive),
        (&args.negative, LexiconKind::SentimentNegative),
        (&args.baseline_keywords, LexiconKind::BaselineKeywords),
    ] {
        if let Some(p) = path {
            lex.replace_from_file(kind, p)?;
        }
    }
    Ok(lex)
}

fn lexicon_paths(args: &LexiconArgs) -> impl Iterator<Item = &PathBuf> {
    [&args.stop_words, &args.keywords, &args.positive, &args.negative, &args.baseline_keywords]
        .into_iter()
        .flatten()
}

fn load_corpus_text(text: &str) -> Result<ReviewCorpus> {
    ReviewCorpus::from_json(text)
}

/// Reads a dataset, or builds one when the input is a labeled corpus.
fn load_any_dataset(path: &Path, lex: &Lexicons) -> Result<Dataset> {
    let text = read_input(path)?;
    let ds = if text.trim_start().starts_with('{') {
        match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(v) if v.get("systems").is_some() => {
                let corpus = load_corpus_text(&text)?;
                build_dataset(&corpus, lex, &FeatureConfig::default(), None)
            }
            _ => Dataset::parse(&text, true)?,
        }
    } else {
        Dataset::parse(&text, false)?
    };
    if ds.is_empty() {
        return Err(Error::contract("dataset has no labeled rows (run `label` first?)"));
    }
    Ok(ds)
}

fn dataset_input(args: &DatasetInput) -> Result<(Dataset, FeatureSet, Lexicons)> {
    check_input(&args.input)?;
    lexicon_paths(&args.lexicons).try_for_each(|p| check_input(p))?;
    let fs: FeatureSet = args.feature_set.parse()?;
    let lex = lexicons(&args.lexicons)?;
    let ds = load_any_dataset(&args.input, &lex)?;
    Ok((ds, fs, lex))
}

fn model_kind(k: Kind) -> ModelKind {
    match k {
        Kind::Nb => ModelKind::GaussianNb,
        Kind::Lr => ModelKind::LogisticRegression,
        Kind::Rf => ModelKind::RandomForest,
        Kind::Cart => ModelKind::Cart,
    }
}

fn hyper(args: &LearnerArgs) -> Result<Hyper> {
    let mut h = Hyper::from_pairs(&args.params)?;
    if let Some(n) = args.n_trees {
        h.n_trees = n;
    }
    if let Some(p) = args.pca {
        h.pca_variance = Some(p);
    }
    h.check()?;
    Ok(h)
}

fn fetch(a: FetchArgs) -> Result<()> {
    check_output(&a.output.out)?;
    if let Some(t) = &a.tape {
        check_input(t)?;
    }
    if let Some(r) = &a.record {
        check_output(r)?;
    }
    let mut cfg = ForgeConfig::new(&a.base_url, &a.repo).with_env_token();
    cfg.max_prs = a.max_prs;
    cfg.page_size = a.page_size;
    cfg.validate()?;
    let corpus = match (&a.tape, &a.record) {
        (Some(tape), _) => fetch_remote_reviews(&cfg, &TapeTransport::load(tape)?)?,
        (None, Some(record)) => {
            let transport = RecordingTransport::new(LiveTransport::new()?, &a.base_url);
            let result = fetch_remote_reviews(&cfg, &transport);
            std::fs::write(record, transport.to_tape())?;
            result?
        }
        (None, None) => fetch_remote_reviews(&cfg, &LiveTransport::new()?)?,
    };
    log::info!(
        "fetched {} pull requests with {} inline comments",
        corpus.systems.iter().map(|s| s.pull_requests.len()).sum::<usize>(),
        corpus.comment_count()
    );
    write_output(&a.output.out, &corpus.to_json())
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::contract(format!("invalid range {s:?}; expected MIN..MAX or N"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo.trim(), hi.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    Ok((lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?))
}

fn synth(a: SynthArgs) -> Result<()> {
    check_output(&a.output.out)?;
    let spec = SynthSpec {
        n_prs: a.n_prs,
        comments_per_pr: parse_range(&a.comments_per_pr)?,
        useful_fraction: a.useful_fraction,
        signal_strength: a.signal,
        seed: resolve_seed(&a.seed),
        n_developers: a.developers,
        history_prs: a.history_prs,
        system: a.system,
    };
    let corpus = generate_synthetic_corpus(&spec)?;
    write_output(&a.output.out, &corpus.to_json())
}

fn label(a: LabelArgs) -> Result<()> {
    check_input(&a.input.input)?;
    check_output(&a.output.out)?;
    let mut policy = LabelPolicy::new(a.vicinity)?;
    policy.require_same_file = !a.any_file;
    let mut corpus = load_corpus_text(&read_input(&a.input.input)?)?;
    label_corpus(&mut corpus, &policy)?;
    let (mut useful, mut total) = (0, 0);
    for (_, pr) in corpus.pull_requests() {
        for c in pr.comments.iter().filter_map(|c| c.label.as_ref()) {
            total += 1;
            useful += usize::from(c.value.is_useful());
        }
    }
    log::info!("labeled {total} comments, {useful} useful");
    write_output(&a.output.out, &corpus.to_json())
}

fn features(a: FeaturesArgs) -> Result<()> {
    check_input(&a.input.input)?;
    check_output(&a.output.out)?;
    if let Some(h) = &a.history {
        check_input(h)?;
    }
    lexicon_paths(&a.lexicons).try_for_each(|p| check_input(p))?;
    let lex = lexicons(&a.lexicons)?;
    let sidecar = a.history.as_ref().map(HistorySidecar::load).transpose()?;
    let corpus = load_corpus_text(&read_input(&a.input.input)?)?;
    let cfg = FeatureConfig {
        ele_window_days: a.ele_window_days,
    };
    let ds = build_dataset(&corpus, &lex, &cfg, sidecar.as_ref());
    if ds.is_empty() {
        return Err(Error::contract("corpus has no labeled comments (run `label` first?)"));
    }
    log::info!(
        "{} rows, {:.1}% with a missing value, {} stop words, config {}",
        ds.len(),
        100.0 * ds.missing_row_fraction(),
        lex.stop_words.len(),
        ds.provenance.config_hash
    );
    let text = match a.format {
        Format::Json => ds.to_jsonl(),
        Format::Csv => ds.to_csv(),
        Format::Table => return Err(Error::contract("features supports --format csv or json")),
    };
    write_output(&a.output.out, &text)
}

fn study(a: StudyArgs) -> Result<()> {
    check_output(&a.output.out)?;
    let (ds, fs, _) = dataset_input(&a.data)?;
    let ds = ds.select(&fs.columns())?;
    let report = run_comparative_study(&ds)?;
    let text = match a.format {
        Format::Table => report.to_table(),
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    write_output(&a.output.out, &text)
}

fn train(a: TrainArgs) -> Result<()> {
    check_output(&a.output.out)?;
    let (ds, fs, _) = dataset_input(&a.data)?;
    let h = hyper(&a.learner)?;
    let kind = model_kind(a.learner.kind);
    let seed = resolve_seed(&a.seed);
    let ds = ds.select(&fs.columns())?;
    let filled = impute_missing(&ds, ImputeStrategy::Mean)?;
    let mut model = train_classifier(&filled, kind, &h, seed)?;
    let importance_seed = (!a.no_importance).then(|| rng::derive(seed, IMPORTANCE_STREAM, 0));
    model.attach_summary(&filled, importance_seed)?;
    log::info!("trained {} on {} rows", kind.as_str(), ds.len());
    write_output(&a.output.out, &model.to_json())
}

fn eval_text(report: &EvalReport, fs: &FeatureSet, format: Format) -> String {
    let table = PerformanceTable::from_report(report, fs.dimension());
    match format {
        Format::Table => table.to_table(),
        Format::Csv => table.to_csv(),
        Format::Json => report.to_json(),
    }
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    check_output(&a.output.out)?;
    if let Some(p) = &a.units_out {
        check_output(p)?;
    }
    if let Some(v) = &a.validation {
        check_input(v)?;
    }
    let (ds, fs, lex) = dataset_input(&a.data)?;
    let h = hyper(&a.learner)?;
    let kind = model_kind(a.learner.kind);
    let seed = resolve_seed(&a.seed);
    let protocol = a.protocol.unwrap_or(if kind == ModelKind::RandomForest {
        ProtocolArg::Runs
    } else {
        ProtocolArg::Cv
    });
    let text = match protocol {
        ProtocolArg::Cv | ProtocolArg::Runs => {
            let sub = ds.select(&fs.columns())?;
            let mut report = if protocol == ProtocolArg::Cv {
                cross_validate(&sub, kind, &h, a.k, seed)?
            } else {
                evaluate_runs(&sub, kind, &h, a.runs, seed)?
            };
            report.feature_set = fs.display();
            if let Some(p) = &a.units_out {
                std::fs::write(p, report.units_csv())?;
            }
            eval_text(&report, &fs, a.format)
        }
        ProtocolArg::Grid => {
            let results = run_grid(&ds, &default_grid(), &h, a.k, a.runs, seed)?;
            let table = PerformanceTable::from_grid(&results);
            match a.format {
                Format::Table => table.to_table(),
                Format::Csv => table.to_csv(),
                Format::Json => table.to_json(),
            }
        }
        ProtocolArg::Baselines => {
            let (train, validation) = match &a.validation {
                Some(v) => (ds, load_any_dataset(v, &lex)?),
                None => {
                    log::warn!("no --validation given; holding out a stratified 35% of the input");
                    let labels: Vec<bool> = ds.rows.iter().map(|r| r.label.is_useful()).collect();
                    let (tr, va) = train_test_split(&labels, TRAIN_FRACTION, rng::derive(seed, 0x5e1d, 0));
                    (ds.subset(&tr), ds.subset(&va))
                }
            };
            let cfg = ComparisonConfig {
                k: a.k,
                runs: a.runs,
                forest: h.clone(),
                cart: h,
                seed,
            };
            let cmp = run_baseline_comparison(&train, &validation, &cfg)?;
            match a.format {
                Format::Table => cmp.to_table(),
                Format::Csv => cmp.to_csv(),
                Format::Json => cmp.to_json(),
            }
        }
    };
    write_output(&a.output.out, &text)
}

fn predict_request(a: &PredictArgs) -> Result<PredictRequest> {
    let text = read_input(&a.input)?;
    if a.request {
        return serde_json::from_str(&text).map_err(|e| Error::Parse {
            offset: e.column(),
            message: format!("prediction request: {e}"),
        });
    }
    let mut req = PredictRequest::new(text.trim_end_matches(['\n', '\r']));
    req.changed_lines = a.changed_lines.clone();
    if let Some(p) = &a.changed_lines_file {
        req.changed_lines.extend(std::fs::read_to_string(p)?.lines().map(String::from));
    }
    let stats = ReviewerStats {
        ca_file: a.ca_file,
        ca_sys: a.ca_sys,
        cr_file: a.cr_file,
        cr_commits: a.cr_commits,
        cr_prs: a.cr_prs,
        ele: a.ele,
    };
    if stats != ReviewerStats::default() {
        req.reviewer_stats = Some(stats);
    }
    Ok(req)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn prediction_table(r: &PredictResponse) -> String {
    let mut out = format!("label: {}\nscore: {:.4}\n\n", r.label, r.score);
    out.push_str(&format!(
        "{:<12} {:>10} {:>14} {:>18} {:>5}\n",
        "feature", "value", "median(useful)", "median(non-useful)", "rank"
    ));
    for f in &r.features {
        let rank = r
            .importance
            .iter()
            .find(|i| i.feature == f.name)
            .map_or("-".to_string(), |i| i.rank.to_string());
        out.push_str(&format!(
            "{:<12} {:>10} {:>14} {:>18} {:>5}{}\n",
            f.name,
            format!("{:.4}", f.value),
            cell(f.median_useful),
            cell(f.median_non_useful),
            rank,
            if f.defaulted { "  (training median)" } else { "" }
        ));
    }
    if !r.hints.is_empty() {
        out.push_str("\nhints:\n");
        for h in &r.hints {
            out.push_str(&format!("- {h}\n"));
        }
    }
    out
}

fn prediction_csv(r: &PredictResponse) -> String {
    let mut out = format!("label,score\n{},{}\n\nfeature,value,defaulted,median_useful,median_non_useful\n", r.label, r.score);
    for f in &r.features {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            f.name,
            f.value,
            f.defaulted,
            opt(f.median_useful),
            opt(f.median_non_useful)
        ));
    }
    out
}

fn predict(a: PredictArgs) -> Result<()> {
    check_input(&a.model)?;
    check_input(&a.input)?;
    check_output(&a.output.out)?;
    if let Some(p) = &a.changed_lines_file {
        check_input(p)?;
    }
    lexicon_paths(&a.lexicons).try_for_each(|p| check_input(p))?;
    let lex = lexicons(&a.lexicons)?;
    let model = TrainedModel::load(&a.model)?;
    let req = predict_request(&a)?;
    let resp = handle_predict(&req, &model, &lex)?;
    let text = match a.format {
        Format::Table => prediction_table(&resp),
        Format::Csv => prediction_csv(&resp),
        Format::Json => serde_json::to_string_pretty(&resp).expect("response serialization is infallible") + "\n",
    };
    write_output(&a.output.out, &text)
}

fn serve(a: ServeArgs) -> Result<()> {
    check_input(&a.model)?;
    lexicon_paths(&a.lexicons).try_for_each(|p| check_input(p))?;
    let mut cfg = revhelper_service::ServeConfig::new(a.addr, &a.model);
    cfg.model_id = a.model_id;
    cfg.cors = !a.no_cors;
    cfg.reload_interval = a.reload_secs.map(Duration::from_secs);
    cfg.lexicons = lexicons(&a.lexicons)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(revhelper_service::serve(cfg))
}
