//! Dataset representation, LIBSVM sparse-format parsing, deterministic
//! splitting and subsampling.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: feature indices must be strictly increasing (saw {index} after {previous})")]
    NonIncreasingIndex { line: usize, index: usize, previous: usize },
    #[error("empty dataset")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary-labeled dense dataset. Labels are exactly -1 or +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n * d
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset from row-major features and ±1 labels.
    ///
    /// Panics if the invariants do not hold (non-±1 label, ragged rows,
    /// empty data); construction sites own validation of external input.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Self {
        assert!(!rows.is_empty(), "dataset needs at least one example");
        assert_eq!(rows.len(), labels.len());
        let dim = rows[0].len();
        assert!(dim >= 1, "dataset needs at least one feature");
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            assert_eq!(row.len(), dim, "all rows must share one dimension");
            features.extend_from_slice(row);
        }
        for &y in &labels {
            assert!(y == 1.0 || y == -1.0, "labels must be exactly -1 or +1");
        }
        Dataset { features, labels, dim }
    }

    pub fn example_count(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_count(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Value of feature `f` on example `i`.
    pub fn value(&self, i: usize, f: usize) -> f64 {
        self.features[i * self.dim + f]
    }

    /// New dataset with the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        assert!(!indices.is_empty(), "subset must be nonempty");
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset { features, labels, dim: self.dim }
    }

    /// Zero-pads rows to `dim` features. No-op when already that wide.
    pub fn pad_to_dim(&mut self, dim: usize) {
        if dim <= self.dim {
            return;
        }
        let n = self.example_count();
        let mut features = vec![0.0; n * dim];
        for i in 0..n {
            features[i * dim..i * dim + self.dim].copy_from_slice(self.row(i));
        }
        self.features = features;
        self.dim = dim;
    }

    /// Serializes to LIBSVM text. Zero entries are dropped; if no row
    /// references the last feature, a literal `d:0` is emitted on the first
    /// line so the dimension survives a round trip.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        let last_used = self
            .features
            .chunks(self.dim)
            .flat_map(|row| row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j))
            .max();
        for i in 0..self.example_count() {
            let label = if self.labels[i] > 0.0 { "+1" } else { "-1" };
            out.push_str(label);
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 {
                    let _ = write!(out, " {}:{}", j + 1, v);
                }
            }
            if i == 0 && last_used != Some(self.dim - 1) {
                let _ = write!(out, " {}:0", self.dim);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the LIBSVM text format: `<label> <idx>:<val> ...` per nonempty
/// line, 1-based strictly increasing indices. Labels ≤ 0 map to -1, others
/// to +1. The feature dimension is the maximum index seen in the file.
pub fn parse_libsvm<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let reader = BufReader::new(reader);
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut dim = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let mut parts = line.split_ascii_whitespace();
        let label_tok = parts.next().expect("nonempty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| DataError::Malformed {
            line: lineno,
            msg: format!("label {label_tok:?} is not a number"),
        })?;
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut prev_index = 0usize;
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| DataError::Malformed {
                line: lineno,
                msg: format!("expected index:value, got {tok:?}"),
            })?;
            let index: usize = idx_s.parse().map_err(|_| DataError::Malformed {
                line: lineno,
                msg: format!("bad feature index {idx_s:?}"),
            })?;
            let value: f64 = val_s.parse().map_err(|_| DataError::Malformed {
                line: lineno,
                msg: format!("bad feature value {val_s:?}"),
            })?;
            if index == 0 {
                return Err(DataError::Malformed {
                    line: lineno,
                    msg: "feature indices are 1-based".into(),
                });
            }
            if index <= prev_index {
                return Err(DataError::NonIncreasingIndex {
                    line: lineno,
                    index,
                    previous: prev_index,
                });
            }
            prev_index = index;
            dim = dim.max(index);
            entries.push((index - 1, value));
        }
        labels.push(if label <= 0.0 { -1.0 } else { 1.0 });
        sparse_rows.push(entries);
    }

    if sparse_rows.is_empty() {
        return Err(DataError::Empty);
    }
    let dim = dim.max(1);
    let n = sparse_rows.len();
    let mut features = vec![0.0; n * dim];
    for (i, entries) in sparse_rows.iter().enumerate() {
        for &(j, v) in entries {
            features[i * dim + j] = v;
        }
    }
    Ok(Dataset { features, labels, dim })
}

/// Loads a LIBSVM file from disk.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(file)
}

/// Train/test splitting protocol: hold out `test_fraction` of the points,
/// chosen by a seeded shuffle.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&test_fraction), "test fraction must be in [0,1)");
        SplitSpec { test_fraction, seed }
    }
}

/// Deterministic partition into (train, test). Train gets
/// `ceil(n * (1 - f))` points, test the remainder; `f = 0` leaves the test
/// side empty and `None` is returned for it.
pub fn split(ds: &Dataset, spec: SplitSpec) -> (Dataset, Option<Dataset>) {
    let n = ds.example_count();
    let train_size = ((n as f64) * (1.0 - spec.test_fraction)).ceil() as usize;
    let train_size = train_size.clamp(1, n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);
    let (train_idx, test_idx) = indices.split_at(train_size);
    let train = ds.subset(train_idx);
    let test = if test_idx.is_empty() { None } else { Some(ds.subset(test_idx)) };
    (train, test)
}

/// Uniform subsample without replacement down to `cap` points; identity when
/// the dataset is already small enough. Selected indices keep their original
/// relative order.
pub fn subsample(ds: &Dataset, cap: usize, seed: u64) -> Dataset {
    assert!(cap >= 1, "subsample cap must be at least 1");
    let n = ds.example_count();
    if n <= cap {
        return ds.clone();
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut chosen = indices[..cap].to_vec();
    chosen.sort_unstable();
    ds.subset(&chosen)
}
