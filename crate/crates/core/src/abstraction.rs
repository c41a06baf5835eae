//! Two-category abstraction of features.
//!
//! Every feature is reduced to [`Category::Up`] or [`Category::Down`]. For a
//! continuous feature the cut point is the ROC operating point that maximises
//! Youden's `|TPR - FPR|`; `Up` is always the side enriched in class 1. For a
//! categorical feature each level is `Up` when its class-1 rate exceeds the
//! feature's overall class-1 rate.
//!
//! Rates are compared with exact integer arithmetic so that thresholds and
//! tie-breaks do not depend on floating point rounding.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::tabular::{ColumnData, Dataset, FeatureKind};

#[derive(Debug, Error, PartialEq)]
pub enum AbstractionError {
    #[error("a class has no observed values for this feature")]
    DegenerateFeature,
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("values and labels differ in length ({values} vs {labels})")]
    LengthMismatch { values: usize, labels: usize },
    #[error("feature `{0}` is not in the abstraction model")]
    UnknownFeature(String),
    #[error("feature `{feature}` is {found:?} but the model expects {expected:?}")]
    KindMismatch {
        feature: String,
        expected: FeatureKind,
        found: FeatureKind,
    },
    #[error("malformed abstraction model: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `v > threshold` is `Up`.
    HighIsUp,
    /// `v <= threshold` is `Up`.
    LowIsUp,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::HighIsUp => Direction::LowIsUp,
            Direction::LowIsUp => Direction::HighIsUp,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::HighIsUp => "high_is_up",
            Direction::LowIsUp => "low_is_up",
        }
    }
}

/// Result of [`roc_threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub direction: Direction,
    /// Youden `|TPR - FPR|` at `threshold`.
    pub separation: f64,
}

impl ThresholdChoice {
    pub fn categorize(&self, v: f64) -> Category {
        let up = match self.direction {
            Direction::HighIsUp => v > self.threshold,
            Direction::LowIsUp => v <= self.threshold,
        };
        if up {
            Category::Up
        } else {
            Category::Down
        }
    }
}

/// Result of [`abstract_categorical`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelChoice {
    /// Observed levels and their category; levels absent here are unseen.
    pub level_map: BTreeMap<String, Category>,
    pub separation: f64,
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi` so
/// that `v > t` always separates them.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = (lo + hi) / 2.0;
    if m.is_finite() && m < hi && m >= lo {
        m
    } else if (lo / 2.0 + hi / 2.0) < hi {
        lo / 2.0 + hi / 2.0
    } else {
        lo
    }
}

fn check_lengths<T>(values: &[T], labels: &[u8]) -> Result<(), AbstractionError> {
    if values.len() != labels.len() {
        return Err(AbstractionError::LengthMismatch {
            values: values.len(),
            labels: labels.len(),
        });
    }
    Ok(())
}

fn separation_from(score: i128, positives: u64, negatives: u64) -> f64 {
    score.unsigned_abs() as f64 / (positives as f64 * negatives as f64)
}

/// Youden-optimal threshold over the observed cells of one continuous feature.
///
/// Candidates are `-inf`, the midpoints between consecutive distinct values,
/// and `+inf`. The winner maximises `|TPR - FPR|` for the rule `v > t`; ties go
/// to the smallest threshold. A negative `TPR - FPR` flips the direction to
/// [`Direction::LowIsUp`]. A constant feature returns that value with
/// separation 0.
pub fn roc_threshold(values: &[Option<f64>], labels: &[u8]) -> Result<ThresholdChoice, AbstractionError> {
    check_lengths(values, labels)?;
    let mut observed: Vec<(f64, u8)> = values
        .iter()
        .zip(labels)
        .filter_map(|(v, &y)| v.map(|v| (v, y)))
        .collect();
    let positives = observed.iter().filter(|(_, y)| *y == 1).count() as u64;
    let negatives = observed.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(AbstractionError::DegenerateFeature);
    }
    observed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let first = observed[0].0;
    if observed.iter().all(|(v, _)| *v == first) {
        return Ok(ThresholdChoice {
            threshold: first,
            direction: Direction::HighIsUp,
            separation: 0.0,
        });
    }

    // At t = -inf every cell is above: TPR = FPR = 1 and the score is 0.
    let (p, n) = (positives as i128, negatives as i128);
    let (mut tp_above, mut fp_above) = (p, n);
    let mut best_score: i128 = 0;
    let mut best_threshold = f64::NEG_INFINITY;
    let mut i = 0;
    while i < observed.len() {
        let value = observed[i].0;
        while i < observed.len() && observed[i].0 == value {
            if observed[i].1 == 1 {
                tp_above -= 1;
            } else {
                fp_above -= 1;
            }
            i += 1;
        }
        if i == observed.len() {
            // +inf scores 0 and never beats -inf on the tie rule
            break;
        }
        let score = tp_above * n - fp_above * p;
        if score.abs() > best_score.abs() {
            best_score = score;
            best_threshold = midpoint(value, observed[i].0);
        }
    }
    Ok(ThresholdChoice {
        threshold: best_threshold,
        direction: if best_score >= 0 {
            Direction::HighIsUp
        } else {
            Direction::LowIsUp
        },
        separation: separation_from(best_score, positives, negatives),
    })
}

/// Level partition of one categorical feature.
///
/// `codes` index into `levels`. A level is `Up` iff its observed class-1 rate
/// is strictly above the feature's observed class-1 rate.
pub fn abstract_categorical(
    codes: &[Option<u32>],
    levels: &[String],
    labels: &[u8],
) -> Result<LevelChoice, AbstractionError> {
    check_lengths(codes, labels)?;
    let mut counts = vec![[0u64; 2]; levels.len()];
    for (code, &y) in codes.iter().zip(labels) {
        if let Some(c) = code {
            counts[*c as usize][y as usize] += 1;
        }
    }
    let negatives: u64 = counts.iter().map(|c| c[0]).sum();
    let positives: u64 = counts.iter().map(|c| c[1]).sum();
    if positives == 0 || negatives == 0 {
        return Err(AbstractionError::DegenerateFeature);
    }
    let total = (positives + negatives) as u128;
    let mut level_map = BTreeMap::new();
    let (mut up_pos, mut up_neg) = (0i128, 0i128);
    for (level, [neg, pos]) in levels.iter().zip(&counts) {
        if neg + pos == 0 {
            continue;
        }
        let up = *pos as u128 * total > positives as u128 * (neg + pos) as u128;
        if up {
            up_pos += *pos as i128;
            up_neg += *neg as i128;
        }
        level_map.insert(level.clone(), if up { Category::Up } else { Category::Down });
    }
    let score = up_pos * negatives as i128 - up_neg * positives as i128;
    Ok(LevelChoice {
        level_map,
        separation: separation_from(score, positives, negatives),
    })
}

/// How a feature's cells are mapped to categories.
#[derive(Debug, Clone, PartialEq)]
pub enum AbstractionRule {
    Threshold { threshold: f64, direction: Direction },
    Levels(BTreeMap<String, Category>),
    /// One class had no observed values at fit time. Observed cells map to
    /// `Down` and the feature is excluded from classification.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAbstraction {
    pub feature: String,
    pub kind: FeatureKind,
    pub rule: AbstractionRule,
    pub separation: f64,
}

impl FeatureAbstraction {
    pub fn is_degenerate(&self) -> bool {
        matches!(self.rule, AbstractionRule::Degenerate)
    }

    pub fn direction(&self) -> Option<Direction> {
        match self.rule {
            AbstractionRule::Threshold { direction, .. } => Some(direction),
            _ => None,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self.rule {
            AbstractionRule::Threshold { threshold, .. } => Some(threshold),
            _ => None,
        }
    }

    /// Human-readable cut description: the threshold, or `up=A;B` for levels.
    pub fn describe_cut(&self) -> String {
        match &self.rule {
            AbstractionRule::Threshold { threshold, .. } => format_threshold(*threshold),
            AbstractionRule::Levels(map) => {
                let up: Vec<&str> = map
                    .iter()
                    .filter(|(_, c)| **c == Category::Up)
                    .map(|(l, _)| l.as_str())
                    .collect();
                format!("up={}", up.join(";"))
            }
            AbstractionRule::Degenerate => "degenerate".to_string(),
        }
    }
}

pub(crate) fn format_threshold(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".to_string()
    } else if t == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        t.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedOn {
    pub dataset: String,
    pub row_count: usize,
}

/// One [`FeatureAbstraction`] per feature of the fitting dataset, in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractionModel {
    features: Vec<FeatureAbstraction>,
    index: HashMap<String, usize>,
    fitted_on: Option<FittedOn>,
}

impl AbstractionModel {
    pub fn new(features: Vec<FeatureAbstraction>, fitted_on: Option<FittedOn>) -> Result<Self, AbstractionError> {
        let mut index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if index.insert(f.feature.clone(), i).is_some() {
                return Err(AbstractionError::Malformed(format!("duplicate feature `{}`", f.feature)));
            }
        }
        Ok(Self {
            features,
            index,
            fitted_on,
        })
    }

    pub fn features(&self) -> &[FeatureAbstraction] {
        &self.features
    }

    pub fn get(&self, feature: &str) -> Option<&FeatureAbstraction> {
        self.index.get(feature).map(|&i| &self.features[i])
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn fitted_on(&self) -> Option<&FittedOn> {
        self.fitted_on.as_ref()
    }

    /// JSON array of `{feature, kind, threshold | level_map, direction, separation}`.
    pub fn to_json(&self) -> String {
        let records: Vec<AbstractionRecord> = self.features.iter().map(AbstractionRecord::from).collect();
        serde_json::to_string_pretty(&records).expect("abstraction records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, AbstractionError> {
        let records: Vec<AbstractionRecord> =
            serde_json::from_str(text).map_err(|e| AbstractionError::Malformed(e.to_string()))?;
        let features = records
            .into_iter()
            .map(FeatureAbstraction::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        AbstractionModel::new(features, None)
    }
}

/// Fits the abstraction for every feature of `train`.
///
/// Features are fitted in parallel and collected in column order. Features
/// where a class has no observed value are recorded as
/// [`AbstractionRule::Degenerate`] with separation 0.
pub fn fit_abstraction(train: &Dataset) -> Result<AbstractionModel, AbstractionError> {
    let [neg, pos] = train.class_counts();
    if neg == 0 || pos == 0 {
        return Err(AbstractionError::SingleClassTraining);
    }
    let labels = train.target();
    let features = train
        .columns()
        .par_iter()
        .map(|col| {
            let fitted = match col.data() {
                ColumnData::Continuous(values) => roc_threshold(values, labels).map(|c| {
                    (
                        AbstractionRule::Threshold {
                            threshold: c.threshold,
                            direction: c.direction,
                        },
                        c.separation,
                    )
                }),
                ColumnData::Categorical { levels, codes } => {
                    abstract_categorical(codes, levels, labels).map(|c| (AbstractionRule::Levels(c.level_map), c.separation))
                }
            };
            let (rule, separation) = match fitted {
                Ok(fit) => fit,
                Err(AbstractionError::DegenerateFeature) => (AbstractionRule::Degenerate, 0.0),
                Err(e) => return Err(e),
            };
            Ok(FeatureAbstraction {
                feature: col.name().to_string(),
                kind: col.kind(),
                rule,
                separation,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    AbstractionModel::new(
        features,
        Some(FittedOn {
            dataset: train.name().to_string(),
            row_count: train.row_count(),
        }),
    )
}

/// A column of abstracted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractedColumn {
    pub name: String,
    pub cells: Vec<Option<Category>>,
    /// False for features that were degenerate at fit time.
    pub informative: bool,
}

/// Same shape as its source dataset, with every cell in `{Up, Down, Missing}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractedDataset {
    pub name: String,
    pub columns: Vec<AbstractedColumn>,
    pub target: Vec<u8>,
}

impl AbstractedDataset {
    pub fn row_count(&self) -> usize {
        self.target.len()
    }

    /// Cells of one row keyed by feature name.
    pub fn record(&self, row: usize) -> Vec<(&str, Option<Category>)> {
        self.columns.iter().map(|c| (c.name.as_str(), c.cells[row])).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.cells.iter().filter(|x| x.is_none()).count())
            .sum()
    }
}

/// Maps each feature of `d` through the fitted abstraction.
///
/// Missing cells stay missing; categorical levels the model never observed
/// become missing.
pub fn apply_abstraction(model: &AbstractionModel, d: &Dataset) -> Result<AbstractedDataset, AbstractionError> {
    let columns = d
        .columns()
        .iter()
        .map(|col| {
            let fa = model
                .get(col.name())
                .ok_or_else(|| AbstractionError::UnknownFeature(col.name().to_string()))?;
            if fa.kind != col.kind() {
                return Err(AbstractionError::KindMismatch {
                    feature: col.name().to_string(),
                    expected: fa.kind,
                    found: col.kind(),
                });
            }
            let cells = match (col.data(), &fa.rule) {
                (ColumnData::Continuous(values), AbstractionRule::Threshold { threshold, direction }) => {
                    let choice = ThresholdChoice {
                        threshold: *threshold,
                        direction: *direction,
                        separation: fa.separation,
                    };
                    values.iter().map(|v| v.map(|v| choice.categorize(v))).collect()
                }
                (ColumnData::Categorical { levels, codes }, AbstractionRule::Levels(map)) => {
                    let by_code: Vec<Option<Category>> = levels.iter().map(|l| map.get(l).copied()).collect();
                    codes.iter().map(|c| c.and_then(|c| by_code[c as usize])).collect()
                }
                (data, AbstractionRule::Degenerate) => (0..data.len())
                    .map(|r| (!data.is_missing(r)).then_some(Category::Down))
                    .collect(),
                _ => return Err(AbstractionError::Malformed(format!("rule for `{}` does not fit its kind", fa.feature))),
            };
            Ok(AbstractedColumn {
                name: col.name().to_string(),
                cells,
                informative: !fa.is_degenerate(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AbstractedDataset {
        name: d.name().to_string(),
        columns,
        target: d.target().to_vec(),
    })
}

/// Flat JSON form of a [`FeatureAbstraction`].
#[derive(Debug, Serialize, Deserialize)]
struct AbstractionRecord {
    feature: String,
    kind: FeatureKind,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_threshold",
        deserialize_with = "de_threshold"
    )]
    threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level_map: Option<BTreeMap<String, Category>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
    separation: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    degenerate: bool,
}

impl From<&FeatureAbstraction> for AbstractionRecord {
    fn from(f: &FeatureAbstraction) -> Self {
        let mut rec = AbstractionRecord {
            feature: f.feature.clone(),
            kind: f.kind,
            threshold: None,
            level_map: None,
            direction: None,
            separation: f.separation,
            degenerate: false,
        };
        match &f.rule {
            AbstractionRule::Threshold { threshold, direction } => {
                rec.threshold = Some(*threshold);
                rec.direction = Some(*direction);
            }
            AbstractionRule::Levels(map) => rec.level_map = Some(map.clone()),
            AbstractionRule::Degenerate => rec.degenerate = true,
        }
        rec
    }
}

impl TryFrom<AbstractionRecord> for FeatureAbstraction {
    type Error = AbstractionError;

    fn try_from(rec: AbstractionRecord) -> Result<Self, Self::Error> {
        if !(0.0..=1.0).contains(&rec.separation) {
            return Err(AbstractionError::Malformed(format!(
                "separation {} of `{}` outside [0, 1]",
                rec.separation, rec.feature
            )));
        }
        let rule = match (rec.degenerate, rec.kind, rec.threshold, rec.direction, rec.level_map) {
            (true, _, None, None, None) => AbstractionRule::Degenerate,
            (false, FeatureKind::Continuous, Some(threshold), Some(direction), None) => {
                AbstractionRule::Threshold { threshold, direction }
            }
            (false, FeatureKind::Categorical, None, None, Some(map)) => AbstractionRule::Levels(map),
            _ => {
                return Err(AbstractionError::Malformed(format!(
                    "inconsistent fields for feature `{}`",
                    rec.feature
                )))
            }
        };
        Ok(FeatureAbstraction {
            feature: rec.feature,
            kind: rec.kind,
            rule,
            separation: rec.separation,
        })
    }
}

// JSON has no infinities; the open-ended candidates travel as "inf"/"-inf".
fn ser_threshold<S: Serializer>(t: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match t {
        Some(v) if v.is_finite() => s.serialize_f64(*v),
        Some(v) => s.serialize_str(&format_threshold(*v)),
        None => s.serialize_none(),
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Option::<Repr>::deserialize(d)? {
        None => Ok(None),
        Some(Repr::Num(v)) => Ok(Some(v)),
        Some(Repr::Text(t)) => match t.as_str() {
            "inf" => Ok(Some(f64::INFINITY)),
            "-inf" => Ok(Some(f64::NEG_INFINITY)),
            other => Err(serde::de::Error::custom(format!("invalid threshold `{other}`"))),
        },
    }
}
