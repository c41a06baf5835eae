//! Random forest of CART trees with Gini importance.
//!
//! Trees grow on bootstrap samples. At each node a random subset of features
//! is searched for the split with the largest decrease in weighted Gini
//! impurity,
//!
//! ```text
//! decrease = n·G(parent) - n_l·G(left) - n_r·G(right),   G = 1 - Σ p_k²
//! ```
//!
//! Rows whose split feature is missing follow the branch that received more
//! observed rows, both while training and while predicting. Importance of a
//! feature is its summed decrease over all trees, normalised to sum to 1.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::midpoint;
use crate::importance::{ImportanceEntry, ImportanceReport};
use crate::seed;
use crate::tabular::{ColumnData, Dataset, FeatureKind};

pub const MODEL_NAME: &str = "RF";

const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("training data contains a single class")]
    SingleClassTraining,
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
    #[error("feature `{0}` used by the forest is absent from the dataset")]
    UnknownFeature(String),
    #[error("feature `{0}` has a different kind than at training time")]
    KindMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
    pub seed: u64,
}

impl ForestParams {
    /// 100 trees, depth 8, leaves of at least 2 rows, `ceil(sqrt(features))` per split.
    pub fn defaults_for(feature_count: usize, seed: u64) -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 2,
            features_per_split: ((feature_count as f64).sqrt().ceil() as usize).max(1),
            seed,
        }
    }

    fn validate(&self, feature_count: usize) -> Result<(), ForestError> {
        let bad = |m: &str| Err(ForestError::InvalidParams(m.to_string()));
        if self.n_trees == 0 || self.max_depth == 0 || self.min_leaf == 0 || self.features_per_split == 0 {
            return bad("n_trees, max_depth, min_leaf and features_per_split must be positive");
        }
        if self.features_per_split > feature_count {
            return Err(ForestError::InvalidParams(format!(
                "features_per_split {} exceeds the {feature_count} features",
                self.features_per_split
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Split {
    /// `v <= threshold` goes left.
    Threshold { feature: usize, threshold: f64 },
    /// Training level codes sent left and right; any other level is treated
    /// as missing.
    Levels {
        feature: usize,
        left: Vec<u32>,
        right: Vec<u32>,
    },
}

impl Split {
    pub fn feature(&self) -> usize {
        match self {
            Split::Threshold { feature, .. } | Split::Levels { feature, .. } => *feature,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf {
        label: u8,
    },
    Internal {
        split: Split,
        /// Branch taken by rows with a missing or unseen value.
        missing_left: bool,
        left: usize,
        right: usize,
        impurity_decrease: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// In-bag class counts reaching this node (bootstrap multiplicity included).
    pub class_counts: [u64; 2],
    pub depth: usize,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    in_bag: Vec<usize>,
}

impl Tree {
    /// Nodes in creation order; index 0 is the root.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Bootstrap row indices the tree was grown on.
    pub fn in_bag(&self) -> &[usize] {
        &self.in_bag
    }

    fn predict(&self, cells: &dyn Fn(usize) -> Cell) -> u8 {
        let mut at = 0;
        loop {
            match &self.nodes[at].kind {
                NodeKind::Leaf { label } => return *label,
                NodeKind::Internal {
                    split,
                    missing_left,
                    left,
                    right,
                    ..
                } => {
                    let go_left = match (split, cells(split.feature())) {
                        (Split::Threshold { threshold, .. }, Cell::Value(v)) => v <= *threshold,
                        (Split::Levels { left, right, .. }, Cell::Level(code)) => {
                            if left.binary_search(&code).is_ok() {
                                true
                            } else if right.binary_search(&code).is_ok() {
                                false
                            } else {
                                *missing_left
                            }
                        }
                        _ => *missing_left,
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Cell {
    Value(f64),
    Level(u32),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
struct FeatureSchema {
    name: String,
    kind: FeatureKind,
    levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    schema: Vec<FeatureSchema>,
    trees: Vec<Tree>,
    raw_importance: Vec<f64>,
    dataset_tag: String,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.schema.iter().map(|f| f.name.as_str())
    }

    /// Summed impurity decrease per feature, in schema order.
    pub fn raw_importance(&self) -> &[f64] {
        &self.raw_importance
    }

    /// Importance normalised to sum to 1 (all zero if the forest never split).
    pub fn normalized_importance(&self) -> Vec<f64> {
        let total: f64 = self.raw_importance.iter().sum();
        if total > 0.0 {
            self.raw_importance.iter().map(|g| g / total).collect()
        } else {
            vec![0.0; self.raw_importance.len()]
        }
    }
}

fn gini_mass(c: [u64; 2]) -> f64 {
    // Σ c_k² / n; weighted impurity is n - gini_mass
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        0.0
    } else {
        ((c[0] * c[0] + c[1] * c[1]) as f64) / n
    }
}

fn add(a: [u64; 2], b: [u64; 2]) -> [u64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: [u64; 2], b: [u64; 2]) -> [u64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn total(c: [u64; 2]) -> u64 {
    c[0] + c[1]
}

fn majority(c: [u64; 2]) -> u8 {
    u8::from(c[1] > c[0])
}

struct Candidate {
    decrease: f64,
    split: Split,
    missing_left: bool,
}

struct Grower<'a> {
    data: &'a Dataset,
    params: &'a ForestParams,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let target = self.data.target();
        let mut counts = [0u64; 2];
        for &r in &rows {
            counts[target[r] as usize] += 1;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            class_counts: counts,
            depth,
            kind: NodeKind::Leaf { label: majority(counts) },
        });
        let splittable = depth < self.params.max_depth
            && counts[0] > 0
            && counts[1] > 0
            && rows.len() >= 2 * self.params.min_leaf;
        if !splittable {
            return id;
        }

        let mut features = index::sample(rng, self.data.feature_count(), self.params.features_per_split).into_vec();
        features.sort_unstable();
        let mut best: Option<Candidate> = None;
        for f in features {
            if let Some(c) = self.best_split(f, &rows, counts) {
                if best.as_ref().is_none_or(|b| c.decrease > b.decrease) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else { return id };

        let column = &self.data.columns()[best.split.feature()];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| {
            match (&best.split, column.data()) {
                (Split::Threshold { threshold, .. }, ColumnData::Continuous(v)) => {
                    v[r].map_or(best.missing_left, |x| x <= *threshold)
                }
                (Split::Levels { left, .. }, ColumnData::Categorical { codes, .. }) => {
                    codes[r].map_or(best.missing_left, |c| left.binary_search(&c).is_ok())
                }
                _ => unreachable!("split kind follows column kind"),
            }
        });
        self.importance[best.split.feature()] += best.decrease;
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[id].kind = NodeKind::Internal {
            split: best.split,
            missing_left: best.missing_left,
            left,
            right,
            impurity_decrease: best.decrease,
        };
        id
    }

    /// Scores a two-way partition of the observed rows, routing the missing
    /// rows to the side with more observed rows (ties go left).
    fn score(&self, left_obs: [u64; 2], right_obs: [u64; 2], missing: [u64; 2], parent: [u64; 2]) -> Option<(f64, bool)> {
        let missing_left = total(left_obs) >= total(right_obs);
        let (left, right) = if missing_left {
            (add(left_obs, missing), right_obs)
        } else {
            (left_obs, add(right_obs, missing))
        };
        let min_leaf = self.params.min_leaf as u64;
        if total(left) < min_leaf || total(right) < min_leaf {
            return None;
        }
        let decrease = gini_mass(left) + gini_mass(right) - gini_mass(parent);
        (decrease > MIN_DECREASE).then_some((decrease, missing_left))
    }

    fn best_split(&self, feature: usize, rows: &[usize], parent: [u64; 2]) -> Option<Candidate> {
        let target = self.data.target();
        let mut missing = [0u64; 2];
        let mut best: Option<Candidate> = None;
        match self.data.columns()[feature].data() {
            ColumnData::Continuous(values) => {
                let mut observed: Vec<(f64, u8)> = Vec::with_capacity(rows.len());
                for &r in rows {
                    match values[r] {
                        Some(v) => observed.push((v, target[r])),
                        None => missing[target[r] as usize] += 1,
                    }
                }
                observed.sort_by(|a, b| a.0.total_cmp(&b.0));
                let obs_total = sub(parent, missing);
                let mut left = [0u64; 2];
                let mut i = 0;
                while i < observed.len() {
                    let value = observed[i].0;
                    while i < observed.len() && observed[i].0 == value {
                        left[observed[i].1 as usize] += 1;
                        i += 1;
                    }
                    if i == observed.len() {
                        break;
                    }
                    if let Some((decrease, missing_left)) = self.score(left, sub(obs_total, left), missing, parent) {
                        if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                            best = Some(Candidate {
                                decrease,
                                split: Split::Threshold {
                                    feature,
                                    threshold: midpoint(value, observed[i].0),
                                },
                                missing_left,
                            });
                        }
                    }
                }
            }
            ColumnData::Categorical { levels, codes } => {
                let mut per_level = vec![[0u64; 2]; levels.len()];
                for &r in rows {
                    match codes[r] {
                        Some(c) => per_level[c as usize][target[r] as usize] += 1,
                        None => missing[target[r] as usize] += 1,
                    }
                }
                let mut present: Vec<u32> = (0..levels.len() as u32).filter(|&c| total(per_level[c as usize]) > 0).collect();
                // order levels by class-1 share; optimal for binary targets
                present.sort_by(|&a, &b| {
                    let (ca, cb) = (per_level[a as usize], per_level[b as usize]);
                    (ca[1] as u128 * total(cb) as u128)
                        .cmp(&(cb[1] as u128 * total(ca) as u128))
                        .then(a.cmp(&b))
                });
                let obs_total = sub(parent, missing);
                let mut left = [0u64; 2];
                for cut in 1..present.len() {
                    left = add(left, per_level[present[cut - 1] as usize]);
                    if let Some((decrease, missing_left)) = self.score(left, sub(obs_total, left), missing, parent) {
                        if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                            let mut l = present[..cut].to_vec();
                            let mut r = present[cut..].to_vec();
                            l.sort_unstable();
                            r.sort_unstable();
                            best = Some(Candidate {
                                decrease,
                                split: Split::Levels {
                                    feature,
                                    left: l,
                                    right: r,
                                },
                                missing_left,
                            });
                        }
                    }
                }
            }
        }
        best
    }
}

fn fit_tree(d: &Dataset, params: &ForestParams, tree_seed: u64) -> (Tree, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
    let n = d.row_count();
    let mut in_bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    in_bag.sort_unstable();
    let mut grower = Grower {
        data: d,
        params,
        nodes: Vec::new(),
        importance: vec![0.0; d.feature_count()],
    };
    grower.grow(in_bag.clone(), 0, &mut rng);
    (
        Tree {
            nodes: grower.nodes,
            in_bag,
        },
        grower.importance,
    )
}

/// Grows `n_trees` trees in parallel. Tree `i` draws from a seed derived
/// from `(params.seed, i)`, so the forest does not depend on thread count.
pub fn fit_forest(d: &Dataset, params: &ForestParams) -> Result<Forest, ForestError> {
    params.validate(d.feature_count())?;
    let [neg, pos] = d.class_counts();
    if neg == 0 || pos == 0 {
        return Err(ForestError::SingleClassTraining);
    }
    let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| fit_tree(d, params, seed::derive(params.seed, i as u64)))
        .collect();
    let mut raw_importance = vec![0.0; d.feature_count()];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, importance) in grown {
        for (acc, g) in raw_importance.iter_mut().zip(importance) {
            *acc += g;
        }
        trees.push(tree);
    }
    let schema = d
        .columns()
        .iter()
        .map(|c| FeatureSchema {
            name: c.name().to_string(),
            kind: c.kind(),
            levels: match c.data() {
                ColumnData::Categorical { levels, .. } => levels.clone(),
                ColumnData::Continuous(_) => Vec::new(),
            },
        })
        .collect();
    Ok(Forest {
        schema,
        trees,
        raw_importance,
        dataset_tag: d.name().to_string(),
    })
}

/// Per-row vote tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vote {
    pub label: u8,
    pub votes: [usize; 2],
    /// Equal votes; `label` fell back to 0.
    pub tie: bool,
}

/// Majority vote of every tree for every row of `d`. Columns are matched by
/// name; categorical levels are matched by their text.
pub fn forest_votes(f: &Forest, d: &Dataset) -> Result<Vec<Vote>, ForestError> {
    enum Resolved<'a> {
        Continuous(&'a [Option<f64>]),
        Categorical(&'a [Option<u32>], Vec<Option<u32>>),
    }
    let resolved = f
        .schema
        .iter()
        .map(|fs| {
            let col = d.column(&fs.name).ok_or_else(|| ForestError::UnknownFeature(fs.name.clone()))?;
            match (fs.kind, col.data()) {
                (FeatureKind::Continuous, ColumnData::Continuous(v)) => Ok(Resolved::Continuous(v)),
                (FeatureKind::Categorical, ColumnData::Categorical { levels, codes }) => {
                    let map = levels
                        .iter()
                        .map(|l| fs.levels.iter().position(|t| t == l).map(|p| p as u32))
                        .collect();
                    Ok(Resolved::Categorical(codes, map))
                }
                _ => Err(ForestError::KindMismatch(fs.name.clone())),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok((0..d.row_count())
        .map(|row| {
            let cell = |feature: usize| match &resolved[feature] {
                Resolved::Continuous(v) => v[row].map_or(Cell::Missing, Cell::Value),
                Resolved::Categorical(codes, map) => codes[row]
                    .and_then(|c| map[c as usize])
                    .map_or(Cell::Missing, Cell::Level),
            };
            let mut votes = [0usize; 2];
            for tree in &f.trees {
                votes[tree.predict(&cell) as usize] += 1;
            }
            Vote {
                label: u8::from(votes[1] > votes[0]),
                votes,
                tie: votes[0] == votes[1],
            }
        })
        .collect())
}

/// Majority-vote labels; ties resolve to 0.
pub fn forest_predict(f: &Forest, d: &Dataset) -> Result<Vec<u8>, ForestError> {
    Ok(forest_votes(f, d)?.into_iter().map(|v| v.label).collect())
}

/// Normalised Gini importance as an interchange report.
pub fn forest_importance(f: &Forest) -> ImportanceReport {
    let entries = f
        .schema
        .iter()
        .zip(f.normalized_importance())
        .map(|(fs, g)| ImportanceEntry::new(fs.name.clone(), g))
        .collect();
    ImportanceReport::new(MODEL_NAME, f.dataset_tag.clone(), entries).expect("forest importances are valid")
}
