use thiserror::Error;

use crate::tabular::{ColumnData, Dataset, FeatureColumn};

#[derive(Debug, Error, PartialEq)]
pub enum ImputeError {
    #[error("feature `{0}` has no observed values to impute from")]
    AllMissingFeature(String),
}

/// Fills missing cells with the column mean (continuous) or modal level
/// (categorical, ties to the first level in sorted order). Observed cells are
/// left untouched.
pub fn mean_impute(d: &Dataset) -> Result<Dataset, ImputeError> {
    let columns = d
        .columns()
        .iter()
        .map(|col| {
            let missing = || ImputeError::AllMissingFeature(col.name().to_string());
            match col.data() {
                ColumnData::Continuous(values) => {
                    let observed: Vec<f64> = values.iter().flatten().copied().collect();
                    if observed.is_empty() {
                        return Err(missing());
                    }
                    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                    let filled = values.iter().map(|v| Some(v.unwrap_or(mean))).collect();
                    Ok(FeatureColumn::continuous(col.name(), filled).expect("mean of finite values is finite"))
                }
                ColumnData::Categorical { levels, codes } => {
                    let mut counts = vec![0usize; levels.len()];
                    for c in codes.iter().flatten() {
                        counts[*c as usize] += 1;
                    }
                    let mode = counts
                        .iter()
                        .enumerate()
                        .filter(|(_, &n)| n > 0)
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i as u32)
                        .ok_or_else(missing)?;
                    let filled = codes.iter().map(|c| Some(c.unwrap_or(mode))).collect();
                    Ok(FeatureColumn::from_codes(col.name(), levels.clone(), filled).expect("codes stay in range"))
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(d.name(), columns, d.target().to_vec()).expect("shape is preserved"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_mode() {
        let d = Dataset::new(
            "d",
            vec![
                FeatureColumn::continuous("x", vec![Some(1.0), None, Some(3.0), Some(2.0)]).unwrap(),
                FeatureColumn::categorical("c", &[Some("A"), Some("A"), None, Some("B")]),
            ],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let out = mean_impute(&d).unwrap();
        assert_eq!(out.columns()[0].data(), &ColumnData::Continuous(vec![Some(1.0), Some(2.0), Some(3.0), Some(2.0)]));
        let texts: Vec<_> = (0..4).map(|r| out.columns()[1].cell_text(r).unwrap()).collect();
        assert_eq!(texts, ["A", "A", "A", "B"]);
        assert_eq!(mean_impute(&out).unwrap(), out);
    }

    #[test]
    fn mode_ties_take_first_level() {
        let d = Dataset::new("d", vec![FeatureColumn::categorical("c", &[Some("B"), Some("A"), None])], vec![0, 1, 0]).unwrap();
        assert_eq!(mean_impute(&d).unwrap().columns()[0].cell_text(2).as_deref(), Some("A"));
    }

    #[test]
    fn all_missing_rejected() {
        let d = Dataset::new("d", vec![FeatureColumn::continuous("x", vec![None, None]).unwrap()], vec![0, 1]).unwrap();
        assert_eq!(mean_impute(&d), Err(ImputeError::AllMissingFeature("x".into())));
    }
}
