use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Scalar};

/// Binary-labelled samples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Vec<T>,
    dim: usize,
    labels: Vec<u8>,
    names: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from feature rows; rejects ragged or non-finite rows
    /// and labels other than 0/1.
    pub fn new(rows: Vec<Vec<T>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch(rows.len(), labels.len()));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * dim);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse { line: r + 1, msg: format!("non-finite value {v}") });
            }
            features.extend(row);
        }
        Self::from_flat(features, dim, labels)
    }

    fn from_flat(features: Vec<T>, dim: usize, labels: Vec<u8>) -> Result<Self> {
        if let Some((r, &l)) = labels.iter().enumerate().find(|(_, &l)| l > 1) {
            return Err(Error::NonBinaryLabel { row: r + 1, value: l.to_string() });
        }
        if labels.len() < 2 {
            return Err(Error::Invalid(format!("dataset needs at least 2 samples, got {}", labels.len())));
        }
        if dim == 0 {
            return Err(Error::Invalid("dataset has no feature columns".into()));
        }
        Ok(Dataset { features, dim, labels, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: names.len() });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.len() - ones, ones]
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Self::from_flat(features, self.dim, labels)?;
        out.names = self.names.clone();
        Ok(out)
    }

    /// Same labels, new features (one row per sample).
    pub fn with_features(&self, features: Vec<T>, dim: usize) -> Result<Self> {
        if features.len() != dim * self.len() {
            return Err(Error::DimensionMismatch { expected: dim * self.len(), actual: features.len() });
        }
        Self::from_flat(features, dim, self.labels.clone())
    }

    /// CSV with a header row; features printed with 17 significant digits and
    /// the label in the last column.
    pub fn write_csv<W: Write>(&self, w: W, label_column: &str) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = match &self.names {
            Some(n) => n.clone(),
            None => (0..self.dim).map(|k| format!("x{k}")).collect(),
        };
        header.push(label_column.to_string());
        wr.write_record(&header)?;
        for (row, label) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            rec.push(label.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Reads a headed CSV; `label_column` names the 0/1 label column and every
/// other column must be numeric and finite. Errors carry 1-based file lines.
pub fn read_csv<T: Scalar, R: Read>(r: R, label_column: &str) -> Result<Dataset<T>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.clone();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("no column named '{label_column}'") })?;
    let names: Vec<String> =
        header.iter().enumerate().filter(|&(k, _)| k != label_idx).map(|(_, h)| h.to_string()).collect();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rd.records().enumerate() {
        let line = r + 2;
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::Parse { line, msg: format!("expected {} fields, found {}", header.len(), rec.len()) });
        }
        for (k, cell) in rec.iter().enumerate() {
            if k == label_idx {
                let label = match cell.parse::<f64>() {
                    Ok(v) if v == 0.0 => 0,
                    Ok(v) if v == 1.0 => 1,
                    _ => return Err(Error::NonBinaryLabel { row: line, value: cell.to_string() }),
                };
                labels.push(label);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse { line, msg: format!("'{cell}' is not a number") })?;
            if !v.is_finite() {
                return Err(Error::Parse { line, msg: format!("non-finite value '{cell}'") });
            }
            features.push(T::lit(v));
        }
    }
    Dataset::from_flat(features, names.len(), labels)?.with_names(names)
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset<T>> {
    read_csv(File::open(path)?, label_column)
}

/// Divides every sample by its ℓ2 norm; returns the norms (zero rows stay zero).
pub fn normalize_rows<T: Scalar>(ds: &Dataset<T>) -> Result<(Dataset<T>, Vec<T>)> {
    let mut features = Vec::with_capacity(ds.features.len());
    let mut norms = Vec::with_capacity(ds.len());
    for row in ds.rows() {
        let n = norm2(row);
        norms.push(n);
        if n > T::zero() {
            features.extend(row.iter().map(|&v| v / n));
        } else {
            features.extend_from_slice(row);
        }
    }
    let mut out = ds.with_features(features, ds.dim)?;
    out.names = ds.names.clone();
    Ok((out, norms))
}

/// Stratified shuffle split: `test_fraction` of each class goes to the test set.
pub fn split<T: Scalar>(ds: &Dataset<T>, test_fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Invalid(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Randomly drops majority-class samples until both classes have equal size.
pub fn undersample<T: Scalar>(ds: &Dataset<T>, seed: u64) -> Result<Dataset<T>> {
    let [n0, n1] = ds.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass);
    }
    let keep = n0.min(n1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(2 * keep);
    for class in 0..=1u8 {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        idx.shuffle(&mut rng);
        chosen.extend_from_slice(&idx[..keep]);
    }
    chosen.sort_unstable();
    ds.subset(&chosen)
}
