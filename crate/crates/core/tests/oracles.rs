//! Library results checked against the brute-force references in
//! `support/oracle.rs`.

mod support;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cactus::abstraction::{abstract_categorical, roc_threshold, Category, Direction};
use cactus::baselines::{fit_forest, forest_predict, ForestParams, NodeKind, Split};
use cactus::classifier::{classify, ClassProfiles, FeatureProfile};
use cactus::evaluation::{metrics, relative_change, ConfusionMatrix};
use cactus::{Dataset, FeatureColumn, ImportanceEntry, ImportanceReport, MissingnessLevel};

use support::oracle;

fn random_instance(rng: &mut ChaCha8Rng, max_len: usize) -> (Vec<Option<f64>>, Vec<u8>) {
    let n = rng.random_range(2..=max_len);
    // a small value pool forces ties; a missing share exercises the filter
    let pool = rng.random_range(2..=12);
    let values = (0..n)
        .map(|_| (!rng.random_bool(0.1)).then(|| rng.random_range(0..pool) as f64 * 0.5 - 2.0))
        .collect();
    let labels = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
    (values, labels)
}

#[test]
fn roc_threshold_matches_exhaustive_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for _ in 0..2000 {
        let (values, labels) = random_instance(&mut rng, 60);
        match (oracle::roc_sweep(&values, &labels), roc_threshold(&values, &labels)) {
            (None, Err(_)) => {}
            (Some((t, j, sign)), Ok(got)) => {
                assert_eq!(got.threshold.to_bits(), t.to_bits(), "{values:?} {labels:?}");
                assert_eq!(got.separation, j);
                let want = if sign < 0 { Direction::LowIsUp } else { Direction::HighIsUp };
                assert_eq!(got.direction, want);
                checked += 1;
            }
            (o, l) => panic!("oracle {o:?} library {l:?}"),
        }
    }
    assert!(checked > 1500);
}

#[test]
fn roc_threshold_on_continuous_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let n = rng.random_range(2..=50);
        let values: Vec<Option<f64>> = (0..n).map(|_| Some(rng.random_range(-5.0..5.0))).collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let (t, j, _) = oracle::roc_sweep(&values, &labels).unwrap();
        let got = roc_threshold(&values, &labels).unwrap();
        assert_eq!((got.threshold, got.separation), (t, j));
    }
}

#[test]
fn categorical_partition_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let n_levels = rng.random_range(1..=5usize);
        let n = rng.random_range(4..=40);
        let rates: Vec<f64> = (0..n_levels).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut codes = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let c = rng.random_range(0..n_levels);
            codes.push((!rng.random_bool(0.1)).then_some(c as u32));
            labels.push(u8::from(rng.random_bool(rates[c])));
        }
        let levels: Vec<String> = (0..n_levels).map(|i| format!("L{i}")).collect();
        let Ok(choice) = abstract_categorical(&codes, &levels, &labels) else {
            continue;
        };
        let best = oracle::best_level_subset(&codes, n_levels, &labels);
        assert!((choice.separation - best).abs() < 1e-12, "{} vs {best}", choice.separation);
    }
}

#[test]
fn categorical_three_rates() {
    // rates 0.9 / 0.5 / 0.1 over 10 rows each: overall 0.5
    let mut codes = Vec::new();
    let mut labels = Vec::new();
    for (code, positives) in [(0u32, 9), (1, 5), (2, 1)] {
        for i in 0..10 {
            codes.push(Some(code));
            labels.push(u8::from(i < positives));
        }
    }
    let levels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let choice = abstract_categorical(&codes, &levels, &labels).unwrap();
    let want: BTreeMap<String, Category> = [("a", Category::Up), ("b", Category::Down), ("c", Category::Down)]
        .into_iter()
        .map(|(l, c)| (l.to_string(), c))
        .collect();
    assert_eq!(choice.level_map, want);
    assert_eq!(choice.separation, oracle::best_level_subset(&codes, 3, &labels));
}

#[test]
fn classifier_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let names: Vec<String> = (0..8).map(|i| format!("f{i}")).collect();
    for _ in 0..20 {
        let prior1 = rng.random_range(0.1..0.9);
        let p_up: Vec<[f64; 2]> = (0..8)
            .map(|_| [rng.random_range(0.02..0.98), rng.random_range(0.02..0.98)])
            .collect();
        let profiles = ClassProfiles::from_parts(
            1.0,
            [1.0 - prior1, prior1],
            names
                .iter()
                .zip(&p_up)
                .map(|(n, p)| FeatureProfile {
                    feature: n.clone(),
                    p_up: *p,
                })
                .collect(),
            BTreeSet::new(),
        );
        for bits in 0u32..256 {
            let cells: Vec<Option<bool>> = (0..8).map(|i| Some(bits & (1 << i) != 0)).collect();
            let record = names.iter().zip(&cells).map(|(n, c)| {
                (n.as_str(), c.map(|up| if up { Category::Up } else { Category::Down }))
            });
            let got = classify(&profiles, record).unwrap();
            assert_eq!(got.label, oracle::naive_bayes([1.0 - prior1, prior1], &p_up, &cells));
        }
        // every third cell missing
        for bits in 0u32..256 {
            let cells: Vec<Option<bool>> = (0..8).map(|i| (i % 3 != 0).then_some(bits & (1 << i) != 0)).collect();
            let record = names.iter().zip(&cells).map(|(n, c)| {
                (n.as_str(), c.map(|up| if up { Category::Up } else { Category::Down }))
            });
            let got = classify(&profiles, record).unwrap();
            assert_eq!(got.label, oracle::naive_bayes([1.0 - prior1, prior1], &p_up, &cells));
        }
    }
}

#[test]
fn metric_identities_up_to_forty() {
    let mut cases = 0;
    for total in 1..=40u64 {
        for tp in 0..=total {
            for fp in 0..=total - tp {
                for tn in 0..=total - tp - fp {
                    let fn_ = total - tp - fp - tn;
                    let got = metrics(&ConfusionMatrix::new(tp, fp, tn, fn_)).values();
                    let want = oracle::metrics(tp, fp, tn, fn_);
                    for (g, w) in got.iter().zip(&want) {
                        match (g, w) {
                            (Some(g), Some(w)) => assert!((g - w).abs() <= 1e-12),
                            (None, None) => {}
                            _ => panic!("definedness differs at {tp},{fp},{tn},{fn_}: {got:?} {want:?}"),
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    assert_eq!(cases, (1..=40u64).map(|t| (t + 1) * (t + 2) * (t + 3) / 6).sum::<u64>());
}

#[test]
fn relative_change_hand_value() {
    let report = |v: f64| ImportanceReport::new("m", "t", vec![ImportanceEntry::new("nse", v)]).unwrap();
    let mut levels = BTreeMap::new();
    for (m, v) in [(0.1, 0.25), (0.2, 0.15), (0.3, 0.2)] {
        levels.insert(MissingnessLevel::new(m).unwrap(), report(v));
    }
    let s = relative_change(&report(0.2), &levels, 1).unwrap();
    // independent arithmetic, mirrored from the declared formula
    let want = [0.25f64, 0.15, 0.2].iter().map(|v| (v - 0.2f64).abs() / 0.2).sum::<f64>() / 3.0;
    assert!((s.aggregate_mean - want).abs() < 1e-12);
    assert!((s.aggregate_mean - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(s.aggregate_std, 0.0);
}

fn continuous_dataset(columns: &[Vec<f64>], labels: &[u8]) -> Dataset {
    Dataset::new(
        "d",
        columns
            .iter()
            .enumerate()
            .map(|(i, c)| FeatureColumn::continuous(format!("x{i}"), c.iter().map(|v| Some(*v)).collect()).unwrap())
            .collect(),
        labels.to_vec(),
    )
    .unwrap()
}

#[test]
fn tree_splits_match_gini_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for round in 0..40 {
        let columns: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..20).map(|_| (rng.random_range(0..40) as f64) / 4.0).collect())
            .collect();
        let labels: Vec<u8> = (0..20).map(|r| u8::from(columns[0][r] + rng.random_range(-3.0..3.0) > 5.0)).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        let d = continuous_dataset(&columns, &labels);
        let params = ForestParams {
            n_trees: 1,
            max_depth: 2,
            min_leaf: 1,
            features_per_split: 3,
            seed: round,
        };
        let forest = fit_forest(&d, &params).unwrap();
        let tree = &forest.trees()[0];

        // walk the tree, recomputing the rows that reach each node
        let mut stack = vec![(0usize, tree.in_bag().to_vec())];
        let mut internal = 0;
        while let Some((id, rows)) = stack.pop() {
            let node = &tree.nodes()[id];
            let mut counts = [0u64; 2];
            for &r in &rows {
                counts[labels[r] as usize] += 1;
            }
            assert_eq!(node.class_counts, counts);
            let best = oracle::best_gini_split(&columns, &labels, &rows, 1);
            match &node.kind {
                NodeKind::Internal {
                    split: Split::Threshold { feature, threshold },
                    left,
                    right,
                    impurity_decrease,
                    ..
                } => {
                    internal += 1;
                    let (_, _, d) = best.expect("oracle finds a split where the tree did");
                    assert!((impurity_decrease - d).abs() < 1e-9, "{impurity_decrease} vs {d}");
                    // the chosen split is itself optimal under the oracle's arithmetic
                    let chosen = oracle::best_gini_split(
                        std::slice::from_ref(&columns[*feature]),
                        &labels,
                        &rows,
                        1,
                    )
                    .unwrap();
                    assert!((chosen.2 - d).abs() < 1e-9);
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| columns[*feature][r] <= *threshold);
                    stack.push((*left, l));
                    stack.push((*right, r));
                }
                NodeKind::Internal { .. } => unreachable!("continuous data"),
                NodeKind::Leaf { .. } => {
                    if node.depth < 2 && counts[0] > 0 && counts[1] > 0 {
                        assert!(best.is_none_or(|b| b.2 <= 1e-12), "leaf with an improving split");
                    }
                }
            }
        }
        assert!(internal >= 1);
    }
}

#[test]
fn deep_forest_fits_consistent_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // 30 distinct points, labels a noisy function of both features
    let mut seen = BTreeSet::new();
    let mut columns = vec![Vec::new(), Vec::new()];
    while columns[0].len() < 30 {
        let (a, b) = (rng.random_range(0..100), rng.random_range(0..100));
        if seen.insert((a, b)) {
            columns[0].push(a as f64);
            columns[1].push(b as f64);
        }
    }
    let labels: Vec<u8> = (0..30)
        .map(|r| u8::from(columns[0][r] + columns[1][r] + rng.random_range(-30.0..30.0) > 100.0))
        .collect();
    let d = continuous_dataset(&columns, &labels);
    let params = ForestParams {
        n_trees: 200,
        max_depth: 64,
        min_leaf: 1,
        features_per_split: 2,
        seed: 9,
    };
    let forest = fit_forest(&d, &params).unwrap();
    let pred = forest_predict(&forest, &d).unwrap();
    let accuracy = pred.iter().zip(&labels).filter(|(p, y)| p == y).count() as f64 / 30.0;
    assert_eq!(accuracy, 1.0);
}
