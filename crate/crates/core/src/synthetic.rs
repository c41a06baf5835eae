//! Seeded synthetic cohorts for tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::tabular::{Dataset, FeatureColumn};

/// Two-class table of Gaussian features.
///
/// Informative features are `N(0, 1)` in class 0 and shifted by
/// `effect_size` in class 1; every other informative feature is shifted
/// downwards instead. Noise features are `N(0, 1)` in both classes. Columns
/// are named `inf_01..` and `noise_01..`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub rows: usize,
    pub informative: usize,
    pub noise: usize,
    pub effect_size: f64,
    pub positive_fraction: f64,
}

impl Default for SyntheticCohort {
    /// 600 rows, 10 informative and 20 noise features, d = 2, 35% positives.
    fn default() -> Self {
        Self {
            rows: 600,
            informative: 10,
            noise: 20,
            effect_size: 2.0,
            positive_fraction: 0.35,
        }
    }
}

impl SyntheticCohort {
    pub fn informative_names(&self) -> Vec<String> {
        (1..=self.informative).map(|i| format!("inf_{i:02}")).collect()
    }

    pub fn noise_names(&self) -> Vec<String> {
        (1..=self.noise).map(|i| format!("noise_{i:02}")).collect()
    }

    /// Exactly `round(rows * positive_fraction)` positives, in shuffled order.
    pub fn generate(&self, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positives = (self.rows as f64 * self.positive_fraction).round() as usize;
        let mut target: Vec<u8> = (0..self.rows).map(|i| u8::from(i < positives)).collect();
        target.shuffle(&mut rng);

        let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut columns = Vec::with_capacity(self.informative + self.noise);
        for (i, name) in self.informative_names().into_iter().enumerate() {
            let shift = if i % 2 == 0 { self.effect_size } else { -self.effect_size };
            let values = target
                .iter()
                .map(|&y| Some(std_normal.sample(&mut rng) + shift * y as f64))
                .collect();
            columns.push(FeatureColumn::continuous(name, values).expect("finite samples"));
        }
        for name in self.noise_names() {
            let values = (0..self.rows).map(|_| Some(std_normal.sample(&mut rng))).collect();
            columns.push(FeatureColumn::continuous(name, values).expect("finite samples"));
        }
        Dataset::new("synthetic", columns, target).expect("generator output is well formed")
    }
}

/// Mixed-type table shaped like a haematuria referral cohort: 568 rows,
/// 201 positives, a `sex` column with 130 `female` and 438 `male` rows,
/// two further categorical features and 86 log-normal biomarkers, 89
/// features in all. Every feature except `sex` has 3-24% of its cells
/// missing. The first 12 biomarkers and `haematuria` carry signal.
pub fn cohort_shaped(seed: u64) -> Dataset {
    const ROWS: usize = 568;
    const POSITIVES: usize = 201;
    const FEMALES: usize = 130;
    const BIOMARKERS: usize = 86;
    const INFORMATIVE: usize = 12;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut target: Vec<u8> = (0..ROWS).map(|i| u8::from(i < POSITIVES)).collect();
    target.shuffle(&mut rng);
    let mut sex: Vec<&str> = (0..ROWS).map(|i| if i < FEMALES { "female" } else { "male" }).collect();
    sex.shuffle(&mut rng);

    let mask = |rng: &mut ChaCha8Rng| -> Vec<bool> {
        let rate = rng.random_range(0.03..=0.24);
        (0..ROWS).map(|_| rng.random_bool(rate)).collect()
    };

    let mut columns = vec![FeatureColumn::categorical(
        "sex",
        &sex.iter().map(|s| Some(*s)).collect::<Vec<_>>(),
    )];

    let missing = mask(&mut rng);
    let haematuria: Vec<Option<&str>> = target
        .iter()
        .zip(&missing)
        .map(|(&y, &m)| {
            let p_visible = if y == 1 { 0.75 } else { 0.4 };
            (!m).then(|| if rng.random_bool(p_visible) { "visible" } else { "non-visible" })
        })
        .collect();
    columns.push(FeatureColumn::categorical("haematuria", &haematuria));

    let missing = mask(&mut rng);
    let smoking: Vec<Option<&str>> = target
        .iter()
        .zip(&missing)
        .map(|(&y, &m)| {
            let u: f64 = rng.random();
            let current = if y == 1 { 0.35 } else { 0.2 };
            let level = if u < current {
                "current"
            } else if u < current + 0.35 {
                "former"
            } else {
                "never"
            };
            (!m).then_some(level)
        })
        .collect();
    columns.push(FeatureColumn::categorical("smoking", &smoking));

    let noise = Normal::new(0.0, 0.5).expect("valid normal");
    for b in 0..BIOMARKERS {
        let missing = mask(&mut rng);
        let shift = if b < INFORMATIVE { 0.55 - 0.025 * b as f64 } else { 0.0 };
        let centre = 1.0 + (b % 7) as f64 * 0.5;
        let values = target
            .iter()
            .zip(&missing)
            .map(|(&y, &m)| {
                let v = (centre + shift * y as f64 + noise.sample(&mut rng)).exp();
                (!m).then_some((v * 1000.0).round() / 1000.0)
            })
            .collect();
        columns.push(FeatureColumn::continuous(format!("marker_{:02}", b + 1), values).expect("finite samples"));
    }
    Dataset::new("cohort", columns, target).expect("generator output is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::missingness::missing_fraction;
    use crate::tabular::stratify_subset;

    #[test]
    fn synthetic_shape() {
        let gen = SyntheticCohort::default();
        let d = gen.generate(1);
        assert_eq!(d.row_count(), 600);
        assert_eq!(d.feature_count(), 30);
        assert_eq!(d.class_counts(), [390, 210]);
        assert_eq!(gen.generate(1), d);
        assert_ne!(gen.generate(2), d);
    }

    #[test]
    fn cohort_counts() {
        let d = cohort_shaped(3);
        assert_eq!(d.row_count(), 568);
        assert_eq!(d.feature_count(), 89);
        assert_eq!(d.class_counts(), [367, 201]);
        assert_eq!(stratify_subset(&d, "sex", "female").unwrap().row_count(), 130);
        assert_eq!(stratify_subset(&d, "sex", "male").unwrap().row_count(), 438);
        let m = missing_fraction(&d);
        assert!(m > 0.03 && m < 0.24, "{m}");
    }
}
