//! CSV ingestion and emission.

use std::io::Write;
use std::path::Path;

use linhsic::linreg::Dataset;
use ndarray::Array2;

use crate::error::{CliError, Result};

/// A dataset together with the column names it was read from.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub response: String,
    pub predictors: Vec<String>,
}

/// Reads `response` and `predictors` from a headed CSV file. With no
/// predictor list, every column other than the response is used, in file
/// order.
pub fn load_csv(path: &Path, response: &str, predictors: Option<&[String]>) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => CliError::Io {
                path: path.display().to_string(),
                source,
            },
            other => CliError::Input(format!("{}: {other:?}", path.display())),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("column '{name}' not found in {}", path.display())))
    };
    let response_idx = find(response)?;
    let predictor_names: Vec<String> = match predictors {
        Some(names) => names.to_vec(),
        None => header.iter().filter(|h| h.as_str() != response).cloned().collect(),
    };
    if predictor_names.is_empty() {
        return Err(CliError::Input("no predictor columns selected".into()));
    }
    let predictor_idx: Vec<usize> = predictor_names.iter().map(|p| find(p)).collect::<Result<_>>()?;

    let d = predictor_idx.len();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            let name = &header[idx];
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ if raw.is_empty() => Err(CliError::Input(format!("row {row}, column '{name}': empty cell"))),
                _ => Err(CliError::Input(format!(
                    "row {row}, column '{name}': '{raw}' is not a finite number"
                ))),
            }
        };
        y.push(cell(response_idx)?);
        for &j in &predictor_idx {
            x.push(cell(j)?);
        }
    }
    let n = y.len();
    if n < d + 2 {
        return Err(CliError::Input(format!(
            "insufficient data: {n} rows for {d} predictors, need at least {}",
            d + 2
        )));
    }
    let predictors_matrix = Array2::from_shape_vec((n, d), x).expect("row-major shape");
    Ok(LoadedData {
        dataset: Dataset::new(predictors_matrix, y)?,
        response: response.to_string(),
        predictors: predictor_names,
    })
}

/// Writes `y, x1, ..., xd` with a header row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_dataset<W: Write>(out: W, data: &Dataset, predictor_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend(predictor_names.iter().cloned());
    w.write_record(&header)?;
    for (i, row) in data.predictors().outer_iter().enumerate() {
        let mut record = vec![data.response()[i].to_string()];
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

/// `x1, ..., xd`.
pub fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}
