use std::fs::File;
use std::io::Read;
use std::path::Path;

use ndarray::Array2;

use super::FeatureSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Reads `label,f1,...,fd` rows. The class count is `max label + 1`.
pub fn read_csv<T: Real>(path: impl AsRef<Path>, has_header: bool) -> Result<FeatureSet<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv_from(file, has_header, name)
}

pub fn read_csv_from<T: Real, R: Read>(reader: R, has_header: bool, name: impl Into<String>) -> Result<FeatureSet<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut labels = Vec::new();
    let mut values: Vec<T> = Vec::new();
    let mut width: Option<usize> = None;
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::NonNumericField {
            row,
            field: 0,
            text: e.to_string(),
        })?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => {
                if record.len() < 2 {
                    return Err(Error::RaggedRow {
                        row,
                        expected: 2,
                        found: record.len(),
                    });
                }
                width = Some(record.len());
            }
            Some(w) if w != record.len() => {
                return Err(Error::RaggedRow {
                    row,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => {}
        }
        let label_text = &record[0];
        let label: i64 = label_text.parse().map_err(|_| Error::NonNumericField {
            row,
            field: 0,
            text: label_text.to_string(),
        })?;
        if label < 0 {
            return Err(Error::NegativeLabel { row, label });
        }
        let label = u32::try_from(label).map_err(|_| Error::LabelOutOfRange {
            record: row,
            label,
            classes: u32::MAX as usize,
        })?;
        labels.push(label);
        for (field, text) in record.iter().enumerate().skip(1) {
            let v: f64 = text.parse().map_err(|_| Error::NonNumericField {
                row,
                field,
                text: text.to_string(),
            })?;
            values.push(T::lit(v));
        }
    }
    let Some(w) = width else {
        return Err(Error::EmptyInput("csv has no data rows".into()));
    };
    let n = labels.len();
    let classes = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    let features = Array2::from_shape_vec((n, w - 1), values).expect("row widths checked");
    FeatureSet::new(name, features, labels, classes)
}
