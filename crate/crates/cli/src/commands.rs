use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use gaitrehab_core::classify::{evaluate, train_model, EvalReport, ModelKind};
use gaitrehab_core::dataset::{FeatureMatrix, Unit};
use gaitrehab_core::features::{FeatureTable, RowMeta};
use gaitrehab_core::grading::{build_grading_with, Band, Correlation, GradeSeries, GradingModel, Scheme};
use gaitrehab_core::ingest::{load_trial, write_atomic, CohortManifest, ManifestEntry, Split};
use gaitrehab_core::model::Group;
use gaitrehab_core::pipeline::{trial_features, Mode};
use gaitrehab_core::selection::{select_features, SelectionResult};
use gaitrehab_core::synth::fixture_cohorts;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exit::UsageError;
use crate::svg;
use crate::{CohortKind, Context, ExtractArgs, FixturesArgs, GradeArgs, ReportArgs, SelectArgs, TrainEvalArgs};

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn echo_config(ctx: &Context, dir: &Path) -> Result<()> {
    write(&dir.join("config.json"), &ctx.cfg.to_json()?)
}

fn load_table(path: &Path) -> Result<FeatureTable> {
    FeatureTable::load(path).with_context(|| format!("loading features {}", path.display()))
}

/// Training rows: the train split when the table has split labels, every
/// row otherwise.
fn training_matrix(table: &FeatureTable) -> Result<FeatureMatrix<f64>> {
    let split = table.rows.iter().any(|r| r.meta.split.is_some()).then_some(Split::Train);
    Ok(FeatureMatrix::from_table(table, split, Unit::Subject)?)
}

fn selection_for(ctx: &Context, train: &FeatureMatrix<f64>, given: Option<&PathBuf>) -> Result<SelectionResult> {
    match given {
        Some(p) => SelectionResult::load(p).with_context(|| format!("loading selection {}", p.display())),
        None => {
            let sel = select_features(train, &ctx.cfg.selection).context("selecting features")?;
            sel.save(&ctx.output.join("selection.json"))?;
            Ok(sel)
        }
    }
}

pub fn fixtures(ctx: &Context, args: &FixturesArgs) -> Result<()> {
    for (name, spec) in fixture_cohorts(ctx.cfg.seed) {
        let wanted = match args.cohort {
            CohortKind::All => true,
            CohortKind::Standard => name == "standard",
            CohortKind::Null => name == "null",
            CohortKind::Recovery => name == "recovery",
        };
        if !wanted {
            continue;
        }
        let dir = ctx.output.join(name);
        let plan = spec.plan()?;
        let entries = plan
            .trials
            .par_iter()
            .map(|t| t.write(&dir).with_context(|| format!("writing trial {}", t.name)))
            .collect::<Result<Vec<ManifestEntry>>>()?;
        let manifest = dir.join("manifest.json");
        CohortManifest::save(&entries, &manifest)?;
        write(&dir.join("cohort.json"), &serde_json::to_string_pretty(&spec)?)?;
        println!("{}", manifest.display());
    }
    echo_config(ctx, &ctx.output)
}

pub fn extract(ctx: &Context, args: &ExtractArgs) -> Result<()> {
    let manifest = CohortManifest::load(&args.manifest)
        .with_context(|| format!("loading manifest {}", args.manifest.display()))?;
    let pipeline = &ctx.cfg.pipeline;
    let windowed = pipeline.mode == Mode::Windowed;
    let results: Vec<(String, gaitrehab_core::Result<Vec<Vec<f64>>>)> = manifest
        .trials
        .par_iter()
        .map(|t| {
            let name = t
                .trial
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| t.trial.display().to_string());
            let rows = load_trial::<f64>(&t.trial, &t.sidecar, Some(t.subject.clone()))
                .and_then(|trial| trial_features(&trial, pipeline));
            (name, rows)
        })
        .collect();

    let mut table = FeatureTable::new(windowed);
    let mut failures = Vec::new();
    for (t, (name, rows)) in manifest.trials.iter().zip(results) {
        match rows {
            Ok(rows) => {
                for (w, values) in rows.iter().enumerate() {
                    let meta = RowMeta {
                        subject_id: t.subject.id.clone(),
                        group: t.subject.group,
                        days_post_op: t.subject.days_post_op,
                        split: Some(t.split),
                        trial: name.clone(),
                        window: windowed.then_some(w),
                    };
                    table.push(meta, values)?;
                }
            }
            Err(e) => {
                eprintln!("trial {name}: {e}");
                failures.push((name, e));
            }
        }
    }
    if let Some((name, e)) = failures.into_iter().next() {
        return Err(anyhow::Error::new(e).context(format!("extraction failed for trial {name}")));
    }
    let out = ctx.output.join("features.csv");
    table.save(&out)?;
    echo_config(ctx, &ctx.output)?;
    println!("{} rows from {} trials -> {}", table.rows.len(), manifest.trials.len(), out.display());
    Ok(())
}

pub fn select(ctx: &Context, args: &SelectArgs) -> Result<()> {
    let table = load_table(&args.features)?;
    let train = training_matrix(&table)?;
    let sel = selection_for(ctx, &train, None)?;
    echo_config(ctx, &ctx.output)?;
    print!("{}", selection_text(&sel));
    Ok(())
}

fn selection_text(sel: &SelectionResult) -> String {
    let mut s = format!("{} features selected (alpha = {}, k = {})\n", sel.features.len(), sel.alpha, sel.k);
    let _ = writeln!(s, "{:>4}  {:<28} {:>10} {:>8}", "rank", "feature", "p", "snr");
    for (i, f) in sel.features.iter().enumerate() {
        let _ = writeln!(s, "{:>4}  {:<28} {:>10.3e} {:>8.3}", i + 1, f.name(), f.stats.p, f.stats.snr);
    }
    s
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassifierResult {
    pub classifier: ModelKind,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalSummary {
    pub train_subjects: usize,
    pub test_subjects: usize,
    pub features: Vec<String>,
    pub results: Vec<ClassifierResult>,
}

pub fn train_eval(ctx: &Context, args: &TrainEvalArgs) -> Result<()> {
    let table = load_table(&args.features)?;
    let train = FeatureMatrix::from_table(&table, Some(Split::Train), Unit::Subject).context("training split")?;
    let test = FeatureMatrix::from_table(&table, Some(Split::Test), Unit::Subject).context("test split")?;
    let sel = selection_for(ctx, &train, args.selection.as_ref())?;
    let idx = sel.indices();
    let (train, test) = (train.select(&idx)?, test.select(&idx)?);

    let mut results = Vec::new();
    for kind in ModelKind::ALL {
        let model = train_model(kind, &train, &ctx.cfg.classifier)
            .with_context(|| format!("training {}", kind.name()))?;
        model.save(&ctx.output.join(format!("model_{}.json", kind.name())))?;
        let report = evaluate(&model, &test)?;
        results.push(ClassifierResult { classifier: kind, report });
    }
    let summary = EvalSummary {
        train_subjects: train.len(),
        test_subjects: test.len(),
        features: sel.features.iter().map(|f| f.name()).collect(),
        results,
    };
    write(&ctx.output.join("eval.json"), &serde_json::to_string_pretty(&summary)?)?;
    echo_config(ctx, &ctx.output)?;
    print!("{}", eval_table(&summary));
    Ok(())
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{:.1} %", 100.0 * v))
}

fn eval_table(s: &EvalSummary) -> String {
    let mut out = format!(
        "{} training / {} test subjects, {} features\n",
        s.train_subjects,
        s.test_subjects,
        s.features.len()
    );
    let _ = writeln!(out, "{:<10} {:>10} {:>12} {:>12}   TP FP TN FN", "classifier", "accuracy", "sensitivity", "specificity");
    for r in &s.results {
        let e = &r.report;
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>12} {:>12}   {:>2} {:>2} {:>2} {:>2}",
            r.classifier.name().to_uppercase(),
            pct(Some(e.accuracy)),
            pct(e.sensitivity),
            pct(e.specificity),
            e.tp,
            e.fp,
            e.tn,
            e.fn_
        );
    }
    out
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct BandCounts {
    pub below: usize,
    pub within: usize,
    pub above: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub g_min: f64,
    pub g_avg: f64,
    pub g_max: f64,
    /// Over every graded (subject, day) point with a recovery day.
    pub correlation: Option<Correlation>,
    pub per_subject: BTreeMap<String, Option<Correlation>>,
    pub bands: BTreeMap<String, BandCounts>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GradeSummary {
    pub subjects: usize,
    pub schemes: BTreeMap<Scheme, SchemeSummary>,
}

fn grading_models(ctx: &Context, args: &GradeArgs) -> Result<Vec<GradingModel<f64>>> {
    if !args.model.is_empty() {
        return args
            .model
            .iter()
            .map(|p| GradingModel::load(p).with_context(|| format!("loading grading model {}", p.display())))
            .collect();
    }
    let path = args.train.as_ref().ok_or_else(|| UsageError("grade needs --train or --model".into()))?;
    let train = training_matrix(&load_table(path)?)?;
    let sel = selection_for(ctx, &train, args.selection.as_ref())?;
    let train = train.select(&sel.indices())?;
    ctx.cfg
        .grading
        .schemes
        .iter()
        .map(|&scheme| {
            let m = build_grading_with(&sel, &train, scheme, ctx.cfg.classifier.lda_shrinkage)
                .with_context(|| format!("building {} grading", scheme.name()))?;
            m.save(&ctx.output.join(format!("grading_{}.json", scheme.name())))?;
            Ok(m)
        })
        .collect()
}

pub fn grade(ctx: &Context, args: &GradeArgs) -> Result<()> {
    let models = grading_models(ctx, args)?;
    let target_path = args
        .features
        .as_ref()
        .or(args.train.as_ref())
        .ok_or_else(|| UsageError("grade with --model needs --features".into()))?;
    let target = FeatureMatrix::from_table(&load_table(target_path)?, None, Unit::Subject)?;

    let mut csv = String::from("subject_id,days_post_op,scheme,G,band\n");
    let mut schemes = BTreeMap::new();
    for model in &models {
        let rows = target.select(&model.columns).context("target features lack the model's columns")?;
        let grades = rows.rows.iter().map(|r| model.grade(r)).collect::<gaitrehab_core::Result<Vec<f64>>>()?;
        let mut bands: BTreeMap<String, BandCounts> = BTreeMap::new();
        let mut points = Vec::new();
        let mut plot = Vec::new();
        for (i, &g) in grades.iter().enumerate() {
            let band = model.band(g);
            let day = rows.days[i];
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                rows.subjects[i],
                day.map(|d| d.to_string()).unwrap_or_default(),
                model.scheme.name(),
                g,
                band.name()
            );
            let counts = bands.entry(rows.labels[i].name().to_string()).or_default();
            match band {
                Band::BelowBand => counts.below += 1,
                Band::WithinControlBand => counts.within += 1,
                Band::AboveBand => counts.above += 1,
            }
            if let Some(d) = day {
                points.push((rows.subjects[i].clone(), d, g));
            }
            plot.push(svg::Point {
                subject: rows.subjects[i].clone(),
                day: if rows.labels[i] == Group::Control { None } else { day.map(f64::from) },
                grade: g,
            });
        }
        let series = GradeSeries::from_points(&points);
        let correlation = series.correlation().ok();
        let per_subject = series.per_subject().into_iter().map(|(s, c)| (s, c.ok())).collect();
        if ctx.cfg.grading.svg {
            let title = format!("{} grading", model.scheme.name().to_uppercase());
            let bounds = svg::Bounds { g_min: model.g_min, g_avg: model.g_avg, g_max: model.g_max };
            write(
                &ctx.output.join(format!("grades_{}.svg", model.scheme.name())),
                &svg::scatter(&title, &plot, &bounds),
            )?;
        }
        schemes.insert(
            model.scheme,
            SchemeSummary {
                g_min: model.g_min,
                g_avg: model.g_avg,
                g_max: model.g_max,
                correlation,
                per_subject,
                bands,
            },
        );
    }
    write(&ctx.output.join("grades.csv"), &csv)?;
    let summary = GradeSummary { subjects: target.len(), schemes };
    write(&ctx.output.join("grade_summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    echo_config(ctx, &ctx.output)?;
    print!("{}", grade_table(&summary));
    Ok(())
}

fn grade_table(s: &GradeSummary) -> String {
    let mut out = format!("{} graded rows\n", s.subjects);
    let _ = writeln!(out, "{:<6} {:>9} {:>9} {:>9} {:>9} {:>9}", "scheme", "G_min", "G_avg", "G_max", "pearson", "spearman");
    for (scheme, m) in &s.schemes {
        let (r, rho) = m
            .correlation
            .map_or(("n/a".into(), "n/a".into()), |c| (format!("{:.3}", c.pearson), format!("{:.3}", c.spearman)));
        let _ = writeln!(
            out,
            "{:<6} {:>9.3} {:>9.3} {:>9.3} {:>9} {:>9}",
            scheme.name().to_uppercase(),
            m.g_min,
            m.g_avg,
            m.g_max,
            r,
            rho
        );
    }
    out
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

pub fn report(ctx: &Context, args: &ReportArgs) -> Result<()> {
    let dir = args.dir.as_ref().unwrap_or(&ctx.output);
    let selection: Option<SelectionResult> = read_json(&dir.join("selection.json"))?;
    let eval: Option<EvalSummary> = read_json(&dir.join("eval.json"))?;
    let grades: Option<GradeSummary> = read_json(&dir.join("grade_summary.json"))?;
    if selection.is_none() && eval.is_none() && grades.is_none() {
        bail!(anyhow!(UsageError(format!("{} holds no selection, evaluation or grading output", dir.display()))));
    }
    let mut text = String::from("# Gait analysis report\n");
    if let Some(s) = &selection {
        let _ = write!(text, "\n## Feature selection\n\n```\n{}```\n", selection_text(s));
    }
    if let Some(e) = &eval {
        let _ = write!(text, "\n## Classification\n\n```\n{}```\n", eval_table(e));
    }
    if let Some(g) = &grades {
        let _ = write!(text, "\n## Grading\n\n```\n{}```\n", grade_table(g));
    }
    write(&ctx.output.join("report.md"), &text)?;
    echo_config(ctx, &ctx.output)?;
    print!("{text}");
    Ok(())
}
