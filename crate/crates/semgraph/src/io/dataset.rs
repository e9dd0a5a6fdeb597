//! CSV dataset ingestion.
//!
//! Datasets arrive as a delimited table with a header row. By default rows
//! are observations and columns are variables; the transpose layout is
//! supported for files that store one feature per row. Output variables are
//! designated by name or by a trailing `last:k` rule (default `last:2`).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::matrix::GraphSignalMatrix;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Rows are observations, columns are variables (header names them).
    RowsAreObservations,
    /// Rows are variables, columns are observations.
    RowsAreFeatures,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OutputSelector {
    /// Header names of the output variables.
    Names(Vec<String>),
    /// The last k variables are outputs.
    LastK(usize),
}

impl OutputSelector {
    /// Parses `"last:2"` or a comma-separated name list.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("last:") {
            let k: usize = k.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("bad output rule '{s}': expected last:<count>"))
            })?;
            Ok(OutputSelector::LastK(k))
        } else {
            let names: Vec<String> = s
                .split(',')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect();
            if names.is_empty() {
                return Err(Error::InvalidInput(format!("empty output selector '{s}'")));
            }
            Ok(OutputSelector::Names(names))
        }
    }
}

#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub orientation: Orientation,
    pub output_columns: OutputSelector,
    pub normalize: bool,
    pub delimiter: u8,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            orientation: Orientation::RowsAreObservations,
            output_columns: OutputSelector::LastK(2),
            normalize: false,
            delimiter: b',',
        }
    }

    pub fn orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn outputs(mut self, sel: OutputSelector) -> Self {
        self.output_columns = sel;
        self
    }

    pub fn normalize(mut self, on: bool) -> Self {
        self.normalize = on;
        self
    }

    pub fn delimiter(mut self, d: u8) -> Self {
        self.delimiter = d;
        self
    }
}

/// Per-node moments removed by z-scoring (mean, sample standard deviation).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeMoments {
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug)]
pub struct LoadedDataset {
    pub matrix: GraphSignalMatrix,
    /// Present when the spec asked for normalization.
    pub normalization: Option<Vec<NodeMoments>>,
}

/// Loads and validates a dataset. Parse failures carry 1-based data-row and
/// column coordinates (the header is row 0).
pub fn load_dataset(spec: &DatasetSpec) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_path(&spec.path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let width = headers.len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = idx + 1;
        if record.len() != width {
            return Err(Error::Parse {
                row: row_no,
                col: record.len().min(width) + 1,
                message: format!("expected {width} cells, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(width);
        for (c, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                col: c + 1,
                message: format!("'{}' is not a number", cell.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    col: c + 1,
                    message: format!("non-finite value '{}'", cell.trim()),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no data rows",
            spec.path.display()
        )));
    }

    // Internal layout is always N x M (variables x observations).
    let (mut data, names) = match spec.orientation {
        Orientation::RowsAreObservations => {
            let n = width;
            let m = rows.len();
            let mut data = Array2::zeros((n, m));
            for (j, row) in rows.iter().enumerate() {
                for (i, &v) in row.iter().enumerate() {
                    data[[i, j]] = v;
                }
            }
            (data, headers.clone())
        }
        Orientation::RowsAreFeatures => {
            let n = rows.len();
            let m = width;
            let mut data = Array2::zeros((n, m));
            for (i, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    data[[i, j]] = v;
                }
            }
            let names = (1..=n).map(|i| i.to_string()).collect();
            (data, names)
        }
    };
    let n = data.nrows();

    let outputs: BTreeSet<usize> = match &spec.output_columns {
        OutputSelector::LastK(k) => {
            if *k > n {
                return Err(Error::InvalidInput(format!(
                    "last:{k} outputs requested but only {n} variables"
                )));
            }
            ((n - k)..n).collect()
        }
        OutputSelector::Names(list) => {
            if spec.orientation == Orientation::RowsAreFeatures {
                return Err(Error::InvalidInput(
                    "name-based output selection needs column-per-variable layout".into(),
                ));
            }
            let mut set = BTreeSet::new();
            for name in list {
                let idx = names
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::InvalidInput(format!("output column '{name}' not found")))?;
                if !set.insert(idx) {
                    return Err(Error::InvalidInput(format!(
                        "output column '{name}' listed twice"
                    )));
                }
            }
            set
        }
    };

    let normalization = if spec.normalize {
        let m = data.ncols();
        if m < 2 {
            return Err(Error::InvalidInput(
                "normalization needs at least 2 observations".into(),
            ));
        }
        let mut moments = Vec::with_capacity(n);
        for i in 0..n {
            let row = data.row(i);
            let mean = row.sum() / m as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
            let std = var.sqrt();
            if std == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "variable '{}' is constant; cannot z-score",
                    names[i]
                )));
            }
            moments.push(NodeMoments { mean, std });
        }
        for i in 0..n {
            let NodeMoments { mean, std } = moments[i];
            data.row_mut(i).mapv_inplace(|v| (v - mean) / std);
        }
        Some(moments)
    } else {
        None
    };

    Ok(LoadedDataset {
        matrix: GraphSignalMatrix::new(data, names, outputs)?,
        normalization,
    })
}

/// Writes a dataset back out as observations-per-row CSV with a header.
/// Loading the result reproduces the numeric payload exactly (floats are
/// printed in shortest round-trip form).
pub fn save_dataset_csv(x: &GraphSignalMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_path(path.as_ref())?;
    w.write_record(x.node_names())?;
    for j in 0..x.m() {
        let row: Vec<String> = (0..x.n()).map(|i| x.data()[[i, j]].to_string()).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_csv_with_last_one_output() {
        let f = write_temp("a,b,c\n1,2,3\n4,5,6\n");
        let spec = DatasetSpec::new(f.path()).outputs(OutputSelector::LastK(1));
        let loaded = load_dataset(&spec).unwrap();
        let x = loaded.matrix;
        assert_eq!(x.n(), 3);
        assert_eq!(x.m(), 2);
        assert_eq!(x.output_nodes().iter().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(x.data()[[0, 0]], 1.0);
        assert_eq!(x.data()[[2, 1]], 6.0);
        assert_eq!(x.node_names(), &["a", "b", "c"]);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let f = write_temp("a,b,c\n1,2,3\n4,5,6\n7,8,9\n1,2,3\n4,abc,6\n");
        let err = load_dataset(&DatasetSpec::new(f.path())).unwrap_err();
        match err {
            Error::Parse { row, col, .. } => {
                assert_eq!((row, col), (5, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ragged_and_non_finite_rows_are_rejected() {
        let ragged = write_temp("a,b\n1,2\n3\n");
        assert!(matches!(
            load_dataset(&DatasetSpec::new(ragged.path())),
            Err(Error::Parse { row: 2, .. })
        ));
        let nan = write_temp("a,b\n1,NaN\n2,3\n");
        assert!(matches!(
            load_dataset(&DatasetSpec::new(nan.path())),
            Err(Error::Parse { row: 1, col: 2, .. })
        ));
    }

    #[test]
    fn name_based_outputs_resolve() {
        let f = write_temp("f1,f2,arousal,valence\n1,2,3,4\n5,6,7,8\n");
        let spec = DatasetSpec::new(f.path()).outputs(OutputSelector::parse("arousal,valence").unwrap());
        let x = load_dataset(&spec).unwrap().matrix;
        assert_eq!(
            x.output_nodes().iter().copied().collect::<Vec<_>>(),
            vec![2, 3]
        );
        let missing = DatasetSpec::new(f.path()).outputs(OutputSelector::parse("nope").unwrap());
        assert!(load_dataset(&missing).is_err());
    }

    #[test]
    fn feature_rows_orientation_transposes() {
        let f = write_temp("o1,o2,o3\n1,2,3\n4,5,6\n");
        let spec = DatasetSpec::new(f.path())
            .orientation(Orientation::RowsAreFeatures)
            .outputs(OutputSelector::LastK(1));
        let x = load_dataset(&spec).unwrap().matrix;
        assert_eq!(x.n(), 2);
        assert_eq!(x.m(), 3);
        assert_eq!(x.data()[[1, 2]], 6.0);
        assert_eq!(x.node_names(), &["1", "2"]);
    }

    #[test]
    fn normalization_z_scores_and_records_transform() {
        let f = write_temp("a,b\n1,10\n2,20\n3,30\n");
        let spec = DatasetSpec::new(f.path())
            .outputs(OutputSelector::LastK(1))
            .normalize(true);
        let loaded = load_dataset(&spec).unwrap();
        let x = loaded.matrix;
        let moments = loaded.normalization.unwrap();
        assert_eq!(moments[0].mean, 2.0);
        for i in 0..2 {
            let row = x.data().row(i);
            let mean = row.sum() / 3.0;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 2.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
        let constant = write_temp("a,b\n1,5\n1,6\n");
        assert!(load_dataset(&DatasetSpec::new(constant.path()).normalize(true)).is_err());
    }

    #[test]
    fn save_then_load_round_trips_numbers() {
        let f = write_temp("a,b,c\n0.1,2.5,-3.75\n4.125,5.5,6.0625\n");
        let spec = DatasetSpec::new(f.path()).outputs(OutputSelector::LastK(1));
        let x = load_dataset(&spec).unwrap().matrix;

        let out = tempfile::NamedTempFile::new().unwrap();
        save_dataset_csv(&x, out.path()).unwrap();
        let x2 = load_dataset(&DatasetSpec::new(out.path()).outputs(OutputSelector::LastK(1)))
            .unwrap()
            .matrix;
        assert_eq!(x.data(), x2.data());
        assert_eq!(x.node_names(), x2.node_names());
    }
}
