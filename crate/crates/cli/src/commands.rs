use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cactus::abstraction::{apply_abstraction, fit_abstraction, AbstractionModel};
use cactus::baselines::{fit_forest, forest_importance, import_external_report, mean_impute, ForestParams};
use cactus::classifier::significance;
use cactus::evaluation::{overlap_curve, relative_change, run_experiment, OverlapCurve, RunSeeds, StabilityReport};
use cactus::importance::ImportanceReport;
use cactus::missingness::MissingnessLevel;
use cactus::tabular::{load_csv, stratify_subset, Dataset};

use crate::config::RunConfig;
use crate::error::{from_report, from_tabular, CliError};
use crate::export::{self, Artifacts, HeatmapTable, Manifest};

fn load(input: &Path, target: &str, stratify: Option<&crate::config::Stratum>) -> Result<Dataset, CliError> {
    let d = load_csv(input, target, None).map_err(|e| from_tabular(input, e))?;
    match stratify {
        Some(s) => stratify_subset(&d, &s.column, &s.level)
            .map(|sub| sub.with_name(format!("{}={}", s.column, s.level)))
            .map_err(CliError::data),
        None => Ok(d.with_name("total")),
    }
}

fn importance_files(artifacts: &mut Artifacts, report: &ImportanceReport) {
    let stem = format!("importance/{}__{}", report.model_name(), report.dataset_tag());
    artifacts.add(format!("{stem}.json"), format!("{}\n", report.to_json()).into_bytes());
    artifacts.add(format!("{stem}.csv"), report.to_csv_string().into_bytes());
}

#[derive(Serialize)]
struct RepeatSeeds {
    repeat: usize,
    level: f64,
    #[serde(flatten)]
    seeds: RunSeeds,
}

/// Outcome of [`cmd_run`].
#[derive(Debug)]
pub struct RunSummary {
    pub cohort_rows: usize,
    pub manifest: Manifest,
}

/// Full experiment: load, optionally stratify, run the repeated missingness
/// grid, fit the descriptive abstraction on the complete cohort, and write
/// every artifact plus `manifest.json` to `config.out`.
///
/// Nothing is written unless every step succeeds.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary, CliError> {
    config.validate()?;
    let data = load(&config.input, &config.target, config.stratify.as_ref())?;

    let mut experiment = config.experiment();
    if let Some(f) = &mut experiment.forest {
        if f.features_per_split == 0 {
            f.features_per_split = ForestParams::defaults_for(data.feature_count(), 0).features_per_split;
        }
    }
    let result = run_experiment(&data, &experiment)?;

    let model = fit_abstraction(&data).map_err(CliError::data)?;
    let abstracted = apply_abstraction(&model, &data).map_err(CliError::data)?;
    let ranks = significance(&abstracted).map_err(CliError::data)?;
    let heatmap = HeatmapTable::build(&model, &ranks, config.top_k).map_err(CliError::data)?;

    let stabilities: Vec<&StabilityReport> = result.models.iter().map(|m| &m.stability).collect();
    let overlaps: Vec<&OverlapCurve> = result.models.iter().map(|m| &m.overlap).collect();
    let mut artifacts = Artifacts::default();
    artifacts.add("metrics.json", export::metrics_json(&result.models));
    artifacts.add("metrics.csv", export::metrics_csv(&result.models));
    artifacts.add("stability.json", export::stability_json(&stabilities));
    artifacts.add("stability.csv", export::stability_csv(&stabilities));
    artifacts.add("stability_features.csv", export::stability_features_csv(&stabilities));
    artifacts.add("overlap.json", export::overlap_json(&overlaps));
    artifacts.add("overlap.csv", export::overlap_csv(&overlaps));
    artifacts.add("ranking.csv", export::ranking_csv(&stabilities));
    artifacts.add("heatmap.csv", heatmap.to_csv());
    artifacts.add("abstraction_model.json", format!("{}\n", model.to_json()).into_bytes());
    for m in &result.models {
        for r in &m.mean_reports {
            importance_files(&mut artifacts, r);
        }
    }

    let seeds: Vec<RepeatSeeds> = (0..experiment.repeats)
        .flat_map(|r| {
            result.grid.iter().map(move |&l| RepeatSeeds {
                repeat: r,
                level: l.fraction(),
                seeds: RunSeeds::derive(experiment.seed, r, l),
            })
        })
        .collect();
    let mut config_json = serde_json::to_value(config).map_err(|e| CliError::Internal(e.to_string()))?;
    config_json["forest"] = serde_json::to_value(experiment.forest).map_err(|e| CliError::Internal(e.to_string()))?;
    let manifest = artifacts.write(
        &config.out,
        "run",
        config_json,
        serde_json::json!({ "master": config.seed, "runs": seeds }),
    )?;
    Ok(RunSummary {
        cohort_rows: data.row_count(),
        manifest,
    })
}

/// Joins an abstraction model with a ranked report into heatmap CSV bytes.
pub fn cmd_heatmap(model_file: &Path, report_file: &Path, k: usize) -> Result<Vec<u8>, CliError> {
    let text = std::fs::read_to_string(model_file).map_err(|e| CliError::io(model_file, e))?;
    let model = AbstractionModel::from_json(&text).map_err(CliError::data)?;
    let report = import_external_report(report_file).map_err(|e| from_report(report_file, e))?;
    if k == 0 {
        return Err(CliError::Config("top-k must be at least 1".into()));
    }
    Ok(HeatmapTable::build(&model, &report, k).map_err(CliError::data)?.to_csv())
}

/// Per-model stability and overlap from importance reports on disk.
#[derive(Debug)]
pub struct Comparison {
    pub stability: Vec<StabilityReport>,
    pub overlap: Vec<OverlapCurve>,
}

/// Groups reports by model; each model needs a complete-data report (a tag
/// without a `+NN%` suffix) and one report per requested level.
pub fn compare_reports(
    reports: Vec<ImportanceReport>,
    levels: &[MissingnessLevel],
    k: usize,
) -> Result<Comparison, CliError> {
    let mut by_model: BTreeMap<String, BTreeMap<MissingnessLevel, ImportanceReport>> = BTreeMap::new();
    for r in reports {
        let (_, level) = MissingnessLevel::parse_tag(r.dataset_tag()).map_err(CliError::data)?;
        let slot = by_model.entry(r.model_name().to_string()).or_default();
        if slot.contains_key(&level) {
            return Err(CliError::Data(format!(
                "model `{}` has more than one report for level {level}",
                r.model_name()
            )));
        }
        slot.insert(level, r);
    }
    let mut stability = Vec::new();
    let mut overlap = Vec::new();
    for (model, mut per_level) in by_model {
        let complete = per_level.remove(&MissingnessLevel::COMPLETE).ok_or_else(|| {
            CliError::Data(format!("MissingLevelReport: model `{model}` has no complete-data report"))
        })?;
        let mut chosen = BTreeMap::new();
        for level in levels.iter().filter(|l| !l.is_complete()) {
            let r = per_level.remove(level).ok_or_else(|| {
                CliError::Data(format!(
                    "MissingLevelReport: model `{model}` has no report for level {}",
                    level.percent_label()
                ))
            })?;
            chosen.insert(*level, r);
        }
        stability.push(relative_change(&complete, &chosen, k)?);
        overlap.push(overlap_curve(&complete, &chosen, k)?);
    }
    Ok(Comparison { stability, overlap })
}

/// Reads report files and writes stability, overlap and ranking artifacts.
pub fn cmd_compare(files: &[PathBuf], levels: &[MissingnessLevel], k: usize, out: &Path) -> Result<Manifest, CliError> {
    if k == 0 {
        return Err(CliError::Config("top-k must be at least 1".into()));
    }
    let reports = files
        .iter()
        .map(|p| import_external_report(p).map_err(|e| from_report(p, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = compare_reports(reports, levels, k)?;
    let stabilities: Vec<&StabilityReport> = cmp.stability.iter().collect();
    let overlaps: Vec<&OverlapCurve> = cmp.overlap.iter().collect();
    let mut artifacts = Artifacts::default();
    artifacts.add("stability.json", export::stability_json(&stabilities));
    artifacts.add("stability.csv", export::stability_csv(&stabilities));
    artifacts.add("stability_features.csv", export::stability_features_csv(&stabilities));
    artifacts.add("overlap.json", export::overlap_json(&overlaps));
    artifacts.add("overlap.csv", export::overlap_csv(&overlaps));
    artifacts.add("ranking.csv", export::ranking_csv(&stabilities));
    let inputs: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    artifacts.write(
        out,
        "compare",
        serde_json::json!({
            "reports": inputs,
            "levels": levels.iter().map(|l| l.fraction()).collect::<Vec<_>>(),
            "top_k": k,
        }),
        serde_json::Value::Null,
    )
}

/// Validates a report and returns it in canonical form, as CSV when `as_csv`
/// and JSON otherwise.
pub fn cmd_report_import(path: &Path, as_csv: bool) -> Result<String, CliError> {
    let report = import_external_report(path).map_err(|e| from_report(path, e))?;
    Ok(if as_csv {
        report.to_csv_string()
    } else {
        format!("{}\n", report.to_json())
    })
}

pub struct BaselineArgs<'a> {
    pub input: &'a Path,
    pub target: &'a str,
    pub stratify: Option<&'a crate::config::Stratum>,
    pub params: ForestParams,
    pub impute: bool,
}

/// Fits the forest on the whole input and returns its importance report.
pub fn cmd_baseline_fit(args: &BaselineArgs) -> Result<ImportanceReport, CliError> {
    let mut data = load(args.input, args.target, args.stratify)?;
    if args.impute {
        data = mean_impute(&data)?;
    }
    let mut params = args.params;
    if params.features_per_split == 0 {
        params.features_per_split = ForestParams::defaults_for(data.feature_count(), 0).features_per_split;
    }
    let forest = fit_forest(&data, &params)?;
    Ok(forest_importance(&forest))
}
