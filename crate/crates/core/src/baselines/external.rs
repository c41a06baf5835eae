use std::fs;
use std::path::Path;

use crate::importance::{ImportanceReport, ReportError};

/// Reads an importance report produced by any tool.
///
/// `.json` files carry their own model and dataset labels. `.csv` files take
/// them from the file stem, `<model>__<dataset_tag>.csv`; a stem without `__`
/// is the model name and the tag is left empty.
pub fn import_external_report(path: impl AsRef<Path>) -> Result<ImportanceReport, ReportError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "json" => ImportanceReport::from_json(&fs::read_to_string(path)?),
        "csv" => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let (model, tag) = stem.split_once("__").unwrap_or((stem.as_str(), ""));
            ImportanceReport::read_csv(fs::File::open(path)?, model, tag)
        }
        other => Err(ReportError::SchemaViolation(format!(
            "unsupported report extension `{other}`, expected .json or .csv"
        ))),
    }
}
