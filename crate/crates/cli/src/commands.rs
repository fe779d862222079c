use std::fs;
use std::path::{Path, PathBuf};

use ggnn_relevance::dfg::{annotate_dfg, mine_dfg, to_dot, AnnotationKind, AnnotationMap, DotOptions};
use ggnn_relevance::evaluation::{
    ablate_log, ablation_experiment, cross_validate, AblationReport, CvReport,
};
use ggnn_relevance::event_log::{
    generate_synthetic_log, log_statistics, parse_csv_path, write_csv_path, EventLog, Label,
};
use ggnn_relevance::ggnn::{gradient_check, load_model, save_model, GRADIENT_TOLERANCE};
use ggnn_relevance::instance_graph::{build_vocabulary, encode_log};
use ggnn_relevance::numerics::Rng;
use ggnn_relevance::relevance::{
    aggregate_relevance, relevance_csv, trace_relevance, ExtremeMode, RelevanceVector,
};
use ggnn_relevance::training::{train, TrainedModel};
use ggnn_relevance::{Error, Result};

use crate::config::CliConfig;

/// Random problems checked by `gradcheck`.
pub const GRADCHECK_CASES: usize = 20;

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn load_log(cfg: &CliConfig) -> Result<EventLog> {
    parse_csv_path(cfg.input()?, &cfg.schema)
}

fn load_trained(cfg: &CliConfig) -> Result<TrainedModel> {
    let path = cfg.model_path()?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read model {}: {e}", path.display())))?;
    let (params, vocab) = load_model(&text)?;
    Ok(TrainedModel::from_parts(params, vocab))
}

pub fn stats(cfg: &CliConfig) -> Result<()> {
    let s = log_statistics(&load_log(cfg)?)?;
    println!("{s}");
    print!("{}", s.to_key_values());
    Ok(())
}

/// Trains on the whole log. A seeded `validation_fraction` of the traces
/// drives early stopping.
pub fn train_cmd(cfg: &CliConfig) -> Result<()> {
    let log = load_log(cfg)?;
    let mut order: Vec<usize> = (0..log.len()).collect();
    Rng::new(cfg.seed).shuffle(&mut order);
    let n_val = (cfg.train.validation_fraction * log.len() as f64).floor() as usize;
    let (val_idx, train_idx) = order.split_at(n_val);

    let vocab = build_vocabulary(&log);
    let dim = vocab.size() + cfg.train.model.padding;
    let train_set = encode_log(&log.select(train_idx)?, &vocab, dim)?;
    let val_set = encode_log(&log.select(val_idx)?, &vocab, dim)?;
    let model = train(&train_set, &val_set, &vocab, &cfg.train)?;

    let model_path = match &cfg.model {
        Some(p) => p.clone(),
        None => cfg.out.join("model.json"),
    };
    if let Some(parent) = model_path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&model_path, save_model(&model.params, &model.vocab))?;
    let report = write(&cfg.out, "training_report.csv", &model.report.to_csv())?;
    println!(
        "trained {} epochs, best epoch {}; model {}, report {}",
        model.report.stopped_epoch,
        model.report.best_epoch,
        model_path.display(),
        report.display()
    );
    Ok(())
}

fn report_skips(report: &CvReport) {
    for f in &report.folds {
        if !f.skipped.is_empty() {
            eprintln!(
                "fold {}: {} test case(s) skipped for unseen activities",
                f.fold,
                f.skipped.len()
            );
        }
        if f.single_class() {
            eprintln!("fold {}: single-class test set, AUC omitted", f.fold);
        }
    }
}

pub fn crossval(cfg: &CliConfig) -> Result<()> {
    let log = load_log(cfg)?;
    let out = cross_validate(&log, &cfg.train, cfg.folds, cfg.seed, cfg.jobs)?;
    report_skips(&out.report);
    let csv = out.report.to_csv();
    write(&cfg.out, "cv_report.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

fn score_log(model: &TrainedModel, log: &EventLog) -> Result<Vec<RelevanceVector>> {
    let mut vectors = Vec::with_capacity(log.len());
    let mut skipped = 0;
    for t in log.traces() {
        match trace_relevance(model, t) {
            Ok(v) => vectors.push(v),
            Err(Error::Encoding(_)) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        eprintln!("{skipped} case(s) skipped for activities unknown to the model");
    }
    Ok(vectors)
}

pub fn relevance(cfg: &CliConfig) -> Result<()> {
    let model = load_trained(cfg)?;
    let log = load_log(cfg)?;
    let vectors = score_log(&model, &log)?;
    let per_instance = write(
        &cfg.out,
        "relevance.csv",
        &relevance_csv(&vectors, model.vocab.activities()),
    )?;
    let aggregate = write(
        &cfg.out,
        "relevance_aggregate.csv",
        &aggregate_relevance(&vectors).to_csv(),
    )?;
    println!("{}\n{}", per_instance.display(), aggregate.display());
    Ok(())
}

pub fn dfg(cfg: &CliConfig) -> Result<()> {
    let log = load_log(cfg)?;
    let d = mine_dfg(&log)?;
    let options = DotOptions {
        min_edge_count: cfg.min_edge_count,
        title: None,
    };
    let mut written = vec![write(&cfg.out, "dfg_counts.csv", &d.to_csv())?];
    match cfg.annotate {
        AnnotationKind::Frequency => {
            let dot = to_dot(&annotate_dfg(&d, &AnnotationMap::frequency()), &options);
            written.push(write(&cfg.out, "dfg_frequency.dot", &dot)?);
        }
        AnnotationKind::Relevance => {
            let model = load_trained(cfg)?;
            let agg = aggregate_relevance(&score_log(&model, &log)?);
            for (label, name) in [(Label::Positive, "positive"), (Label::Negative, "negative")] {
                let Some(ann) = AnnotationMap::from_aggregate(&agg, label) else {
                    continue;
                };
                let options = DotOptions {
                    title: Some(format!("predicted {name}")),
                    ..options.clone()
                };
                let dot = to_dot(&annotate_dfg(&d, &ann?), &options);
                written.push(write(&cfg.out, &format!("dfg_relevance_{name}.dot"), &dot)?);
            }
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn ablate(cfg: &CliConfig) -> Result<()> {
    let log = load_log(cfg)?;
    let (k, seed, jobs) = (cfg.folds, cfg.seed, cfg.jobs);
    let table = match cfg.mode {
        None => {
            let result = ablation_experiment(&log, &cfg.train, k, seed, jobs)?;
            fs::create_dir_all(&cfg.out)?;
            write_csv_path(&result.least_log, &cfg.schema, cfg.out.join("log_without_least.csv"))?;
            write_csv_path(&result.most_log, &cfg.schema, cfg.out.join("log_without_most.csv"))?;
            report_dropped(&result.least);
            report_dropped(&result.most);
            result.to_table()
        }
        Some(mode) => {
            let original = cross_validate(&log, &cfg.train, k, seed, jobs)?;
            let (ablated, report) = ablate_log(&log, &original.models, &original.splits, mode)?;
            report_dropped(&report);
            fs::create_dir_all(&cfg.out)?;
            write_csv_path(&ablated, &cfg.schema, cfg.out.join(format!("log_without_{}.csv", mode.name())))?;
            let rerun = cross_validate(&ablated, &cfg.train, k, seed, jobs)?;
            two_row_table(&original.report, &rerun.report, mode)
        }
    };
    write(&cfg.out, "ablation.csv", &table)?;
    print!("{table}");
    Ok(())
}

fn report_dropped(report: &AblationReport) {
    if !report.dropped.is_empty() {
        eprintln!(
            "w/o {} relevant: {} trace(s) emptied and dropped",
            report.mode.name(),
            report.dropped.len()
        );
    }
}

fn two_row_table(original: &CvReport, ablated: &CvReport, mode: ExtremeMode) -> String {
    let row = |r: &CvReport| format!("{},{},{}", r.auc(), r.sensitivity(), r.specificity());
    format!(
        "event_log,auc_roc,sensitivity,specificity\noriginal,{}\nw/o {} relevant,{}\n",
        row(original),
        mode.name(),
        row(ablated)
    )
}

pub fn gradcheck(cfg: &CliConfig) -> Result<()> {
    let worst = gradient_check(GRADCHECK_CASES, cfg.seed)?;
    println!("checked {GRADCHECK_CASES} random cases; max relative error = {worst:.3e}");
    if worst < GRADIENT_TOLERANCE {
        println!("max relative error < 1e-4");
        Ok(())
    } else {
        Err(Error::Numeric {
            group: "gradcheck".into(),
            message: format!("max relative error {worst:.3e} is not below 1e-4"),
        })
    }
}

pub fn synth(cfg: &CliConfig) -> Result<()> {
    let log = generate_synthetic_log(&cfg.synth, cfg.seed)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("synthetic_log.csv");
    write_csv_path(&log, &cfg.schema, &path)?;
    println!("{}", path.display());
    Ok(())
}
