use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use cactus::abstraction::{roc_threshold, Direction};
use cactus::baselines::mean_impute;
use cactus::evaluation::{overlap_curve, relative_change};
use cactus::missingness::inject_mcar;
use cactus::tabular::{read_csv, split, stratify_subset, ColumnData, SplitSpec};
use cactus::{Dataset, FeatureColumn, FeatureKind, ImportanceEntry, ImportanceReport, InjectionPlan, MissingnessLevel};

fn labelled_values() -> impl Strategy<Value = (Vec<Option<f64>>, Vec<u8>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::option::weighted(0.9, -50i32..50), n),
            prop::collection::vec(0u8..=1, n),
        )
            .prop_map(|(v, y)| (v.into_iter().map(|x| x.map(|x| x as f64 / 4.0)).collect(), y))
    })
}

fn level_name() -> impl Strategy<Value = String> {
    "[a-z]{1,4}".prop_filter("not a missing token", |s| s != "na" && s != "nan")
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..25, 1usize..5).prop_flat_map(|(rows, cols)| {
        let column = (any::<bool>(), prop::collection::vec(prop::option::weighted(0.8, -1e6f64..1e6), rows), prop::collection::vec(prop::option::weighted(0.8, level_name()), rows));
        (
            prop::collection::vec(column, cols),
            prop::collection::vec(0u8..=1, rows),
        )
            .prop_map(|(cols, target)| {
                let columns = cols
                    .into_iter()
                    .enumerate()
                    .map(|(i, (continuous, nums, words))| {
                        if continuous {
                            FeatureColumn::continuous(format!("c{i}"), nums).unwrap()
                        } else {
                            FeatureColumn::categorical(format!("c{i}"), &words)
                        }
                    })
                    .collect();
                Dataset::new("prop", columns, target).unwrap()
            })
    })
}

fn report_from(values: &[f64]) -> ImportanceReport {
    ImportanceReport::new(
        "m",
        "t",
        values.iter().enumerate().map(|(i, v)| ImportanceEntry::new(format!("f{i:02}"), *v)).collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn csv_round_trip(d in dataset()) {
        let mut buf = Vec::new();
        d.write_csv(&mut buf, "y").unwrap();
        let hints: HashMap<String, FeatureKind> = d.columns().iter().map(|c| (c.name().to_string(), c.kind())).collect();
        let back = read_csv(buf.as_slice(), "prop", "y", Some(&hints)).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn label_flip_mirrors_direction((values, labels) in labelled_values()) {
        if let Ok(a) = roc_threshold(&values, &labels) {
            prop_assume!(a.separation > 0.0);
            let flipped: Vec<u8> = labels.iter().map(|y| 1 - y).collect();
            let b = roc_threshold(&values, &flipped).unwrap();
            prop_assert_eq!(a.threshold, b.threshold);
            prop_assert_eq!(a.separation, b.separation);
            prop_assert_eq!(a.direction.flipped(), b.direction);
        }
    }

    #[test]
    fn increasing_transforms_keep_categories((values, labels) in labelled_values(), scale in 0.01f64..100.0, shift in -100f64..100.0) {
        let Ok(a) = roc_threshold(&values, &labels) else { return Ok(()) };
        let moved: Vec<Option<f64>> = values.iter().map(|v| v.map(|x| x * scale + shift)).collect();
        let b = roc_threshold(&moved, &labels).unwrap();
        prop_assert_eq!(a.separation, b.separation);
        prop_assert_eq!(a.direction, b.direction);
        for (v, m) in values.iter().zip(&moved) {
            if let (Some(v), Some(m)) = (v, m) {
                prop_assert_eq!(a.categorize(*v), b.categorize(*m));
            }
        }
    }

    #[test]
    fn relative_change_ignores_uniform_rescaling(
        base in prop::collection::vec(0.01f64..10.0, 10..15),
        noise in prop::collection::vec(prop::collection::vec(0.0f64..3.0, 15), 3),
        c in 1e-3f64..1e3,
    ) {
        let complete = report_from(&base);
        let scaled = report_from(&base.iter().map(|v| v * c).collect::<Vec<_>>());
        let mut levels = BTreeMap::new();
        let mut scaled_levels = BTreeMap::new();
        for (i, n) in noise.iter().enumerate() {
            let level = MissingnessLevel::new(0.1 * (i + 1) as f64).unwrap();
            let v: Vec<f64> = base.iter().zip(n).map(|(b, x)| b * x).collect();
            levels.insert(level, report_from(&v));
            scaled_levels.insert(level, report_from(&v.iter().map(|x| x * c).collect::<Vec<_>>()));
        }
        let a = relative_change(&complete, &levels, 10).unwrap();
        let b = relative_change(&scaled, &scaled_levels, 10).unwrap();
        prop_assert!((a.aggregate_mean - b.aggregate_mean).abs() <= 1e-12 * a.aggregate_mean.abs().max(1.0));
        prop_assert!((a.aggregate_std - b.aggregate_std).abs() <= 1e-12 * a.aggregate_std.abs().max(1.0));
    }

    #[test]
    fn overlap_ignores_entry_order(values in prop::collection::vec(0.0f64..1.0, 12), perm_seed in any::<u64>()) {
        let complete = report_from(&values);
        let other = report_from(&values.iter().rev().copied().collect::<Vec<_>>());
        let mut entries: Vec<ImportanceEntry> = other.entries().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        rand::seq::SliceRandom::shuffle(entries.as_mut_slice(), &mut rng);
        let shuffled = ImportanceReport::new("m", "t", entries).unwrap();
        let level = MissingnessLevel::new(0.2).unwrap();
        let a = overlap_curve(&complete, &BTreeMap::from([(level, other)]), 10).unwrap();
        let b = overlap_curve(&complete, &BTreeMap::from([(level, shuffled)]), 10).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mean_impute_is_idempotent(d in dataset()) {
        if let Ok(once) = mean_impute(&d) {
            prop_assert!(once.columns().iter().all(|c| c.data().missing_count() == 0));
            prop_assert_eq!(mean_impute(&once).unwrap(), once);
        }
    }

    #[test]
    fn strata_partition_observed_rows(d in dataset()) {
        for col in d.columns() {
            let ColumnData::Categorical { levels, codes } = col.data() else { continue };
            if d.feature_count() == 1 {
                continue;
            }
            let observed = codes.iter().filter(|c| c.is_some()).count();
            let sum: usize = levels
                .iter()
                .map(|l| stratify_subset(&d, col.name(), l).map(|s| s.row_count()).unwrap_or(0))
                .sum();
            prop_assert_eq!(sum, observed);
        }
    }

    #[test]
    fn split_is_deterministic_and_covers(n in 10usize..80, seed in any::<u64>(), f in 0.15f64..0.5) {
        let target: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let ids: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        let d = Dataset::new("s", vec![FeatureColumn::continuous("id", ids).unwrap()], target).unwrap();
        let spec = SplitSpec::new(f, seed, true);
        let (Ok(a), Ok(b)) = (split(&d, &spec), split(&d, &spec)) else { return Ok(()) };
        prop_assert_eq!(&a, &b);
        let (train, test) = a;
        prop_assert_eq!(train.row_count() + test.row_count(), n);
        let mut seen: Vec<String> = [&train, &test]
            .iter()
            .flat_map(|part| (0..part.row_count()).map(|r| part.columns()[0].cell_text(r).unwrap()))
            .collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), n);
    }
}

#[test]
fn mcar_cells_are_uniform() {
        let rows = 20;
    let columns = (0..5)
        .map(|c| FeatureColumn::continuous(format!("x{c}"), (0..rows).map(|r| Some((r * c) as f64)).collect()).unwrap())
        .collect();
    let d = Dataset::new("u", columns, (0..rows).map(|r| (r % 2) as u8).collect()).unwrap();
    let level = MissingnessLevel::new(0.1).unwrap();
    let mut hits = vec![0u64; 100];
    let draws = 2000;
    for seed in 0..draws {
        let out = inject_mcar(&d, &InjectionPlan::new(level, seed)).unwrap();
        for (c, col) in out.columns().iter().enumerate() {
            for r in 0..rows {
                if col.data().is_missing(r) {
                    hits[c * rows + r] += 1;
                }
            }
        }
    }
    assert_eq!(hits.iter().sum::<u64>(), 10 * draws);
    // per-cell hits are Binomial(draws, 0.1)
    let expected = draws as f64 * 0.1;
    let stat: f64 = hits.iter().map(|&h| (h as f64 - expected).powi(2) / (expected * 0.9)).sum();
    let p = 1.0 - ChiSquared::new(99.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat}, p = {p}");
}

#[test]
fn label_flip_with_zero_separation_is_not_mirrored() {
    // the -inf fallback keeps high_is_up for both labelings
    let values = [Some(1.0), Some(2.0), Some(1.0), Some(2.0)];
    let a = roc_threshold(&values, &[0, 0, 1, 1]).unwrap();
    let b = roc_threshold(&values, &[1, 1, 0, 0]).unwrap();
    assert_eq!(a.separation, 0.0);
    assert_eq!((a.direction, b.direction), (Direction::HighIsUp, Direction::HighIsUp));
}
