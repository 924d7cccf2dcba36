use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use otce::data::FeatureSet;
use otce::guidance::{nearest_centroid_probe, optimize_target_embeddings, GradConfig};
use otce::{
    f_otce, generate_task_pair, jc_otce, kendall_tau, nce_paired, rank_sources, read_csv, read_feature_file,
    spearman_rho, write_feature_file, Error, MetricConfig, MetricId, ScoredPair, SinkhornConfig, SyntheticTaskSpec,
    TransferabilityScore,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::RunReport;
use crate::{CorrMethod, MetricFlags};

pub struct CliError {
    pub code: u8,
    pub message: String,
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

/// Exit 3 for numerical failures, 2 for everything else.
fn fail(context: impl Display, e: Error) -> CliError {
    CliError {
        code: if e.is_numerical() { 3 } else { 2 },
        message: format!("{context}: {e}"),
    }
}

fn load(path: &Path, role: &str) -> CliResult<FeatureSet<f64>> {
    read_feature_file(path).map_err(|e| fail(format!("{role} file {}", path.display()), e))
}

fn metric_config(flags: &MetricFlags) -> CliResult<MetricConfig> {
    let config = MetricConfig {
        sinkhorn: SinkhornConfig {
            lambda: flags.lambda,
            max_iterations: flags.max_iter,
            ..SinkhornConfig::default()
        },
        gamma: flags.gamma,
        standardize_features: flags.standardize,
    };
    config.validate().map_err(|e| fail("flags", e))?;
    Ok(config)
}

fn echo_metric(report: &mut RunReport, metric: MetricId, flags: &MetricFlags) {
    report.echo("metric", metric);
    report.echo("lambda", flags.lambda);
    report.echo("gamma", flags.gamma);
    report.echo("max_iter", flags.max_iter);
    report.echo("standardize", flags.standardize);
}

fn evaluate(
    metric: MetricId,
    src: &FeatureSet<f64>,
    tgt: &FeatureSet<f64>,
    config: &MetricConfig,
) -> otce::Result<TransferabilityScore> {
    match metric {
        MetricId::FOtce => f_otce(src, tgt, config),
        MetricId::JcOtce => jc_otce(src, tgt, config),
        MetricId::Nce => Ok(TransferabilityScore {
            metric,
            value: nce_paired(src.labels(), tgt.labels())?,
            lambda: config.sinkhorn.lambda,
            gamma: None,
            iterations_used: 0,
            converged: true,
        }),
    }
}

pub fn score(metric: MetricId, source: &Path, target: &Path, flags: &MetricFlags) -> CliResult<RunReport> {
    let mut report = RunReport::new("score");
    report.echo("source", source);
    report.echo("target", target);
    echo_metric(&mut report, metric, flags);
    let config = metric_config(flags)?;
    let (src, tgt) = report.timed("load", || {
        Ok::<_, CliError>((load(source, "source")?, load(target, "target")?))
    })?;
    let score = report
        .timed("score", || evaluate(metric, &src, &tgt, &config))
        .map_err(|e| fail(format!("scoring {} against {}", source.display(), target.display()), e))?;
    report.results = serde_json::to_value(score).expect("score serializes");
    Ok(report)
}

fn ftrs_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| invalid(format!("sources directory {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| invalid(format!("sources directory {}: {e}", dir.display())))?
            .path();
        if path.is_file() && path.extension().is_some_and(|x| x == "ftrs") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(invalid(format!(
            "sources directory {} contains no .ftrs files",
            dir.display()
        )));
    }
    Ok(files)
}

/// Scores every file, spread over the available cores. Results are stored
/// by file index, so the output does not depend on scheduling.
fn score_all(
    files: &[PathBuf],
    tgt: &FeatureSet<f64>,
    metric: MetricId,
    config: &MetricConfig,
) -> Vec<CliResult<TransferabilityScore>> {
    let slots: Vec<Mutex<Option<CliResult<TransferabilityScore>>>> = files.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(files.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                let result = load(path, "source").and_then(|src| {
                    evaluate(metric, &src, tgt, config).map_err(|e| fail(format!("scoring {}", path.display()), e))
                });
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every file scored"))
        .collect()
}

pub fn rank(metric: MetricId, target: &Path, sources: &Path, flags: &MetricFlags) -> CliResult<RunReport> {
    let mut report = RunReport::new("rank");
    report.echo("target", target);
    report.echo("sources", sources);
    echo_metric(&mut report, metric, flags);
    let config = metric_config(flags)?;
    let files = ftrs_files(sources)?;
    let tgt = report.timed("load", || load(target, "target"))?;
    let scores = report.timed("score", || score_all(&files, &tgt, metric, &config));

    let mut by_id = HashMap::new();
    let mut pairs = Vec::with_capacity(files.len());
    for (path, score) in files.iter().zip(scores) {
        let score = score?;
        let id = path.file_name().expect("file path").to_string_lossy().into_owned();
        pairs.push(ScoredPair::new(id.clone(), score.value, None).map_err(|e| fail(path.display(), e))?);
        by_id.insert(id, score);
    }
    let ranked = rank_sources(pairs).map_err(|e| fail("ranking", e))?;
    let rows: Vec<Value> = ranked
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let s = &by_id[&p.task_id];
            json!({
                "rank": k + 1,
                "task_id": p.task_id,
                "value": s.value,
                "iterations_used": s.iterations_used,
                "converged": s.converged,
            })
        })
        .collect();
    report.results = json!({ "metric": metric, "ranking": rows });
    Ok(report)
}

#[derive(Debug, Deserialize)]
struct PairRow {
    task_id: String,
    score: f64,
    accuracy: f64,
}

pub fn corr(pairs: &Path, method: CorrMethod) -> CliResult<RunReport> {
    let mut report = RunReport::new("corr");
    report.echo("pairs", pairs);
    report.echo(
        "method",
        match method {
            CorrMethod::Spearman => "spearman",
            CorrMethod::Kendall => "kendall",
            CorrMethod::Both => "both",
        },
    );
    let context = |row: usize| format!("pairs file {} row {row}", pairs.display());
    let rows = report.timed("load", || -> CliResult<Vec<ScoredPair>> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(pairs)
            .map_err(|e| invalid(format!("pairs file {}: {e}", pairs.display())))?;
        let mut out = Vec::new();
        for (row, record) in reader.deserialize::<PairRow>().enumerate() {
            let record = record.map_err(|e| invalid(format!("{}: {e}", context(row + 1))))?;
            out.push(
                ScoredPair::new(record.task_id, record.score, Some(record.accuracy))
                    .map_err(|e| fail(context(row + 1), e))?,
            );
        }
        Ok(out)
    })?;
    if rows.len() < 2 {
        return Err(invalid(format!(
            "pairs file {}: need at least 2 rows, found {}",
            pairs.display(),
            rows.len()
        )));
    }
    let acc: Vec<f64> = rows.iter().map(|p| p.accuracy.expect("accuracy column")).collect();
    let trf: Vec<f64> = rows.iter().map(|p| p.transferability).collect();
    let mut results = serde_json::Map::new();
    results.insert("n".into(), json!(rows.len()));
    report.timed("correlate", || -> CliResult<()> {
        if method != CorrMethod::Kendall {
            let rho = spearman_rho(&acc, &trf).map_err(|e| fail(pairs.display(), e))?;
            results.insert("spearman_rho".into(), json!(rho));
        }
        if method != CorrMethod::Spearman {
            let tau = kendall_tau(&acc, &trf).map_err(|e| fail(pairs.display(), e))?;
            results.insert("kendall_tau".into(), json!(tau));
        }
        Ok(())
    })?;
    report.results = Value::Object(results);
    Ok(report)
}

/// Nearest-centroid accuracy with even rows as training and odd rows as test
/// data; `None` when a test class has no training sample.
fn probe(set: &FeatureSet<f64>) -> Option<f64> {
    let even: Vec<usize> = (0..set.len()).step_by(2).collect();
    let odd: Vec<usize> = (1..set.len()).step_by(2).collect();
    if odd.is_empty() {
        return None;
    }
    nearest_centroid_probe(&set.select(&even).ok()?, &set.select(&odd).ok()?).ok()
}

pub fn optimize(
    source: &Path,
    target: &Path,
    out: &Path,
    config: &GradConfig,
    score_lambda: f64,
    trace: Option<&Path>,
) -> CliResult<RunReport> {
    let mut report = RunReport::new("optimize");
    report.echo("source", source);
    report.echo("target", target);
    report.echo("out", out);
    report.echo("steps", config.steps);
    report.echo("lr", config.learning_rate);
    report.echo("unroll", config.unroll_iterations);
    report.echo("seed", config.seed);
    report.echo("lambda", config.sinkhorn.lambda);
    report.echo("score_lambda", score_lambda);
    report.echo("source_batch", config.source_batch);
    report.echo("target_batch", config.target_batch);
    report.echo("trace", trace);
    config.validate().map_err(|e| fail("flags", e))?;
    let score_config = MetricConfig::with_lambda(score_lambda);
    score_config.validate().map_err(|e| fail("flags", e))?;

    let (src, tgt) = report.timed("load", || {
        Ok::<_, CliError>((load(source, "source")?, load(target, "target")?))
    })?;
    let initial = report
        .timed("score", || f_otce(&src, &tgt, &score_config))
        .map_err(|e| fail("initial score", e))?;
    let run = report
        .timed("optimize", || optimize_target_embeddings(&src, &tgt, config))
        .map_err(|e| fail("optimization", e))?;
    let last = report
        .timed("score", || f_otce(&src, &run.target, &score_config))
        .map_err(|e| fail("final score", e))?;

    report.timed("write", || -> CliResult<()> {
        write_feature_file(&run.target, out).map_err(|e| fail(format!("output file {}", out.display()), e))?;
        if let Some(path) = trace {
            write_trace(path, &run.trace).map_err(|e| invalid(format!("trace file {}: {e}", path.display())))?;
        }
        Ok(())
    })?;
    report.results = json!({
        "initial_f_otce": initial.value,
        "final_f_otce": last.value,
        "initial_probe_accuracy": probe(&tgt),
        "final_probe_accuracy": probe(&run.target),
        "steps_run": run.trace.len(),
    });
    Ok(report)
}

fn write_trace(path: &Path, rows: &[otce::guidance::TraceRow]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Knob {
    DomainShift,
    LabelPermutationFraction,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sweep {
    knob: Knob,
    levels: Vec<f64>,
    seeds: Vec<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    spec: SyntheticTaskSpec,
    sweep: Option<Sweep>,
}

/// A spec file is either a bare task spec or `{"spec": ..., "sweep": ...}`.
fn parse_spec(text: &str) -> serde_json::Result<SweepFile> {
    let value: Value = serde_json::from_str(text)?;
    if value.get("spec").is_some() {
        serde_json::from_value(value)
    } else {
        Ok(SweepFile {
            spec: serde_json::from_value(value)?,
            sweep: None,
        })
    }
}

fn write_pair(spec: &SyntheticTaskSpec, dir: &Path) -> CliResult<()> {
    let (src, tgt) = generate_task_pair::<f64>(spec).map_err(|e| fail("spec", e))?;
    fs::create_dir_all(dir).map_err(|e| invalid(format!("output directory {}: {e}", dir.display())))?;
    for (set, name) in [(&src, "source.ftrs"), (&tgt, "target.ftrs")] {
        let path = dir.join(name);
        write_feature_file(set, &path).map_err(|e| fail(format!("output file {}", path.display()), e))?;
    }
    Ok(())
}

pub fn synth(spec_path: &Path, out: &Path) -> CliResult<RunReport> {
    let mut report = RunReport::new("synth");
    report.echo("spec", spec_path);
    report.echo("out", out);
    let text = fs::read_to_string(spec_path).map_err(|e| invalid(format!("spec file {}: {e}", spec_path.display())))?;
    let file = parse_spec(&text).map_err(|e| invalid(format!("spec file {}: {e}", spec_path.display())))?;
    file.spec
        .validate()
        .map_err(|e| fail(format!("spec file {}", spec_path.display()), e))?;
    report.echo("task", file.spec);

    let Some(sweep) = file.sweep else {
        report.timed("generate", || write_pair(&file.spec, out))?;
        report.results = json!({ "pairs": [{ "path": "." }] });
        return Ok(report);
    };
    report.echo(
        "sweep",
        json!({ "knob": sweep.knob, "levels": sweep.levels, "seeds": sweep.seeds }),
    );
    if sweep.levels.is_empty() || sweep.seeds.is_empty() {
        return Err(invalid(format!(
            "spec file {}: sweep needs levels and seeds",
            spec_path.display()
        )));
    }
    let mut manifest = String::from("level,seed,path\n");
    let mut entries = Vec::new();
    report.timed("generate", || -> CliResult<()> {
        for (l, &level) in sweep.levels.iter().enumerate() {
            for &seed in &sweep.seeds {
                let mut spec = SyntheticTaskSpec { seed, ..file.spec };
                match sweep.knob {
                    Knob::DomainShift => spec.domain_shift = level,
                    Knob::LabelPermutationFraction => spec.label_permutation_fraction = level,
                }
                let rel = format!("level-{l:03}-seed-{seed}");
                write_pair(&spec, &out.join(&rel)).map_err(|e| CliError {
                    message: format!("sweep level {level}, seed {seed}: {}", e.message),
                    ..e
                })?;
                manifest.push_str(&format!("{level},{seed},{rel}\n"));
                entries.push(json!({ "level": level, "seed": seed, "path": rel }));
            }
        }
        let path = out.join("manifest.csv");
        fs::write(&path, &manifest).map_err(|e| invalid(format!("manifest {}: {e}", path.display())))
    })?;
    report.results = json!({ "pairs": entries, "manifest": "manifest.csv" });
    Ok(report)
}

pub fn convert(csv_path: &Path, out: &Path, header: bool) -> CliResult<RunReport> {
    let mut report = RunReport::new("convert");
    report.echo("csv", csv_path);
    report.echo("out", out);
    report.echo("header", header);
    let set = report
        .timed("load", || read_csv::<f64>(csv_path, header))
        .map_err(|e| fail(format!("csv file {}", csv_path.display()), e))?;
    report
        .timed("write", || write_feature_file(&set, out))
        .map_err(|e| fail(format!("output file {}", out.display()), e))?;
    report.results = json!({
        "samples": set.len(),
        "dim": set.dim(),
        "classes": set.class_count(),
        "present_classes": set.present_classes(),
    });
    Ok(report)
}
