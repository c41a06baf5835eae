//! Rendering of run artifacts and the hashed manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use cactus::abstraction::{AbstractionModel, Direction};
use cactus::evaluation::{ModelResult, OverlapCurve, StabilityReport};
use cactus::importance::ImportanceReport;
use cactus::FeatureKind;

use crate::error::CliError;

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    text.into_bytes()
}

#[derive(Serialize)]
struct MetricJson<'a> {
    model: &'a str,
    level: f64,
    metrics: BTreeMap<&'a str, MetricStatJson>,
}

#[derive(Serialize)]
struct MetricStatJson {
    mean: Option<f64>,
    std: Option<f64>,
    defined: usize,
}

pub fn metrics_json(models: &[ModelResult]) -> Vec<u8> {
    let rows: Vec<MetricJson> = models
        .iter()
        .flat_map(|m| {
            m.metrics.iter().map(move |lm| MetricJson {
                model: &m.model,
                level: lm.level.fraction(),
                metrics: lm
                    .metrics
                    .iter()
                    .map(|(k, s)| {
                        (
                            k.as_str(),
                            MetricStatJson {
                                mean: s.mean,
                                std: s.std,
                                defined: s.defined,
                            },
                        )
                    })
                    .collect(),
            })
        })
        .collect();
    json(&rows)
}

pub fn metrics_csv(models: &[ModelResult]) -> Vec<u8> {
    let mut out = String::from("model,level,metric,mean,std,defined\n");
    for m in models {
        for lm in &m.metrics {
            for (metric, s) in &lm.metrics {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    csv_field(&m.model),
                    lm.level,
                    metric,
                    opt(s.mean),
                    opt(s.std),
                    s.defined
                );
            }
        }
    }
    out.into_bytes()
}

pub fn stability_json(reports: &[&StabilityReport]) -> Vec<u8> {
    json(reports)
}

/// One row per model: the aggregate mean and spread.
pub fn stability_csv(reports: &[&StabilityReport]) -> Vec<u8> {
    let mut out = String::from("model,k,aggregate_mean,aggregate_std\n");
    for s in reports {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(&s.model),
            s.k,
            num(s.aggregate_mean),
            num(s.aggregate_std)
        );
    }
    out.into_bytes()
}

/// Long format: one row per (model, feature, level).
pub fn stability_features_csv(reports: &[&StabilityReport]) -> Vec<u8> {
    let mut out = String::from("model,feature,baseline,level,change\n");
    for s in reports {
        for f in &s.per_feature {
            for c in &f.changes {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    csv_field(&s.model),
                    csv_field(&f.feature),
                    num(f.baseline),
                    c.level,
                    num(c.change)
                );
            }
        }
    }
    out.into_bytes()
}

pub fn overlap_json(curves: &[&OverlapCurve]) -> Vec<u8> {
    json(curves)
}

pub fn overlap_csv(curves: &[&OverlapCurve]) -> Vec<u8> {
    let mut out = String::from("model,level,overlap\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(out, "{},{},{}", csv_field(&c.model), p.level, num(p.overlap));
        }
    }
    out.into_bytes()
}

/// Models ordered by aggregate stability mean, most stable first.
pub fn ranking_csv(reports: &[&StabilityReport]) -> Vec<u8> {
    let mut sorted: Vec<&&StabilityReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.aggregate_mean.total_cmp(&b.aggregate_mean).then(a.model.cmp(&b.model)));
    let mut out = String::from("rank,model,aggregate_mean,aggregate_std\n");
    for (i, s) in sorted.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            csv_field(&s.model),
            num(s.aggregate_mean),
            num(s.aggregate_std)
        );
    }
    out.into_bytes()
}

#[derive(Debug, Error, PartialEq)]
pub enum HeatmapError {
    #[error("feature `{0}` of the report is absent from the abstraction model")]
    FeatureMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapRow {
    pub rank: usize,
    pub feature: String,
    pub kind: FeatureKind,
    /// Threshold, or `up=<levels>` for categorical features.
    pub cut: String,
    pub direction: Option<Direction>,
    pub significance: f64,
}

/// Top-ranked features joined with the cut points that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapTable {
    pub rows: Vec<HeatmapRow>,
}

impl HeatmapTable {
    /// Joins the first `k` report entries (all of them if fewer) with the
    /// model, preserving report order.
    pub fn build(model: &AbstractionModel, report: &ImportanceReport, k: usize) -> Result<Self, HeatmapError> {
        let rows = report
            .entries()
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, e)| {
                let fa = model
                    .get(&e.feature)
                    .ok_or_else(|| HeatmapError::FeatureMismatch(e.feature.clone()))?;
                Ok(HeatmapRow {
                    rank: i + 1,
                    feature: e.feature.clone(),
                    kind: fa.kind,
                    cut: fa.describe_cut(),
                    direction: fa.direction(),
                    significance: e.importance,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HeatmapTable { rows })
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::from("rank,feature,kind,cut,direction,significance\n");
        for r in &self.rows {
            let kind = match r.kind {
                FeatureKind::Continuous => "continuous",
                FeatureKind::Categorical => "categorical",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.rank,
                csv_field(&r.feature),
                kind,
                csv_field(&r.cut),
                r.direction.map(Direction::as_str).unwrap_or(""),
                num(r.significance)
            );
        }
        out.into_bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub created_unix: u64,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output files held in memory until every computation has succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(path.into(), bytes);
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every file under `dir`, then `manifest.json` listing them with
    /// their SHA-256.
    pub fn write(self, dir: &Path, command: &str, config: serde_json::Value, seeds: serde_json::Value) -> Result<Manifest, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.files.len());
        for (rel, bytes) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            entries.push(FileEntry {
                path: rel.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            });
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            config,
            seeds,
            files: entries,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, json(&manifest)).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
