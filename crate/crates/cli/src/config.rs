//! Run configuration: flat `key = value` files overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cactus::baselines::ForestParams;
use cactus::evaluation::ExperimentConfig;
use cactus::missingness::MissingnessLevel;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CACTUS_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stratum {
    pub column: String,
    pub level: String,
}

impl std::str::FromStr for Stratum {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('=') {
            Some((c, l)) if !c.trim().is_empty() && !l.trim().is_empty() => Ok(Stratum {
                column: c.trim().to_string(),
                level: l.trim().to_string(),
            }),
            _ => Err(CliError::Config(format!("stratify expects column=level, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub target: String,
    pub stratify: Option<Stratum>,
    pub levels: Vec<MissingnessLevel>,
    pub repeats: usize,
    pub seed: u64,
    pub alpha: f64,
    pub top_k: usize,
    pub test_fraction: f64,
    /// `None` skips the forest baseline.
    pub forest: Option<ForestParams>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.top_k == 0 {
            return bad("top-k must be at least 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test-fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if self.target.is_empty() {
            return bad("target must be named".into());
        }
        if let Some(f) = &self.forest {
            // features_per_split == 0 means the square root of the feature count
            if f.n_trees == 0 || f.max_depth == 0 || f.min_leaf == 0 {
                return bad("forest trees, depth and min-leaf must be positive".into());
            }
        }
        Ok(())
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            levels: self.levels.clone(),
            repeats: self.repeats,
            seed: self.seed,
            alpha: self.alpha,
            k: self.top_k,
            test_fraction: self.test_fraction,
            forest: self.forest,
        }
    }
}

/// Raw settings as strings, before validation. Keys match the long flag
/// names: `input`, `target`, `stratify`, `levels`, `repeats`, `seed`,
/// `alpha`, `top-k`, `test-fraction`, `trees`, `depth`, `min-leaf`,
/// `features-per-split`, `forest`, `out`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(pub BTreeMap<String, String>);

pub const KEYS: [&str; 15] = [
    "input",
    "target",
    "stratify",
    "levels",
    "repeats",
    "seed",
    "alpha",
    "top-k",
    "test-fraction",
    "trees",
    "depth",
    "min-leaf",
    "features-per-split",
    "forest",
    "out",
];

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", n + 1)));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Settings(map))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Settings::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.0.insert(key.to_string(), v);
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("invalid value `{v}` for {key}")))
            })
            .transpose()
    }

    /// Resolves into a [`RunConfig`], filling defaults. `env_out` is the value
    /// of [`OUT_DIR_ENV`], used only when no `out` is given.
    pub fn resolve(&self, env_out: Option<String>) -> Result<RunConfig, CliError> {
        let input: PathBuf = self
            .get("input")?
            .ok_or_else(|| CliError::Config("an input file is required".into()))?;
        let levels = match self.0.get("levels") {
            Some(list) => parse_levels(list)?,
            None => MissingnessLevel::canonical_grid()[1..].to_vec(),
        };
        let stratify = self.0.get("stratify").map(|s| s.parse()).transpose()?;
        let seed = self.get("seed")?.unwrap_or(42);
        let with_forest = match self.0.get("forest").map(String::as_str) {
            None | Some("true") | Some("yes") | Some("on") => true,
            Some("false") | Some("no") | Some("off") => false,
            Some(other) => return Err(CliError::Config(format!("invalid value `{other}` for forest"))),
        };
        let forest = if with_forest {
            Some(ForestParams {
                n_trees: self.get("trees")?.unwrap_or(100),
                max_depth: self.get("depth")?.unwrap_or(8),
                min_leaf: self.get("min-leaf")?.unwrap_or(2),
                features_per_split: self.get("features-per-split")?.unwrap_or(0),
                seed,
            })
        } else {
            None
        };
        let out = self
            .get::<PathBuf>("out")?
            .or_else(|| env_out.map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("cactus-out"));
        let config = RunConfig {
            input,
            target: self.get("target")?.unwrap_or_else(|| "target".to_string()),
            stratify,
            levels,
            repeats: self.get("repeats")?.unwrap_or(10),
            seed,
            alpha: self.get("alpha")?.unwrap_or(1.0),
            top_k: self.get("top-k")?.unwrap_or(10),
            test_fraction: self.get("test-fraction")?.unwrap_or(0.3),
            forest,
            out,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Comma-separated fractions, e.g. `0.1,0.2,0.3`.
pub fn parse_levels(list: &str) -> Result<Vec<MissingnessLevel>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: f64 = s
                .parse()
                .map_err(|_| CliError::Config(format!("invalid level `{s}`")))?;
            MissingnessLevel::new(v).map_err(|e| CliError::Config(e.to_string()))
        })
        .collect()
}
