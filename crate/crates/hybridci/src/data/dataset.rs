//! Supervised datasets, splitting, normalization, and RMSE scoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Matrix, RngStream};

/// A supervised training set: `n` rows of `d` inputs paired with `m` targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Matrix,
    pub targets: Matrix,
    pub name: String,
}

impl Dataset {
    pub fn new(inputs: Matrix, targets: Matrix, name: impl Into<String>) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::InvalidInput(format!(
                "dataset: {} input rows but {} target rows",
                inputs.rows(),
                targets.rows()
            )));
        }
        if inputs.rows() == 0 || inputs.cols() == 0 || targets.cols() == 0 {
            return Err(Error::InvalidInput("dataset: empty dimension".into()));
        }
        if !inputs.is_finite() || !targets.is_finite() {
            return Err(Error::InvalidInput("dataset: non-finite entries".into()));
        }
        Ok(Dataset {
            inputs,
            targets,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_width(&self) -> usize {
        self.inputs.cols()
    }

    pub fn target_width(&self) -> usize {
        self.targets.cols()
    }

    /// Dataset restricted to the given row indices, in order.
    pub fn select_rows(&self, rows: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let inputs: Vec<Vec<f64>> = rows.iter().map(|&r| self.inputs.row(r).to_vec()).collect();
        let targets: Vec<Vec<f64>> = rows.iter().map(|&r| self.targets.row(r).to_vec()).collect();
        Dataset::new(
            Matrix::from_rows(&inputs)?,
            Matrix::from_rows(&targets)?,
            name,
        )
    }

    /// 64-bit FNV-1a fingerprint over dimensions and exact entry bytes.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&(self.len() as u64).to_le_bytes());
        eat(&(self.input_width() as u64).to_le_bytes());
        eat(&(self.target_width() as u64).to_le_bytes());
        for v in self.inputs.as_slice() {
            eat(&v.to_bits().to_le_bytes());
        }
        for v in self.targets.as_slice() {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}

/// Fractions for a train/validation/test partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub shuffle: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, valid: f64, test: f64, shuffle: bool, seed: u64) -> Result<Self> {
        let spec = SplitSpec {
            train_fraction: train,
            valid_fraction: valid,
            test_fraction: test,
            shuffle,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fs = [
            self.train_fraction,
            self.valid_fraction,
            self.test_fraction,
        ];
        if fs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidInput("split fractions must be >= 0".into()));
        }
        let sum: f64 = fs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "split fractions sum to {}, expected 1",
                sum
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    /// Time-series friendly default: 0.5 / 0.25 / 0.25 without shuffling.
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.5,
            valid_fraction: 0.25,
            test_fraction: 0.25,
            shuffle: false,
            seed: 0,
        }
    }
}

/// Partition into train/validation/test. Sizes are floor allocations with the
/// remainder assigned to train; a nonzero fraction that would receive zero
/// rows is an error.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let n = ds.len();
    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    let n_valid = (spec.valid_fraction * n as f64).floor() as usize;
    let n_test = (spec.test_fraction * n as f64).floor() as usize;
    let n_train = n_train + (n - n_train - n_valid - n_test);

    for (frac, size, label) in [
        (spec.train_fraction, n_train, "train"),
        (spec.valid_fraction, n_valid, "valid"),
        (spec.test_fraction, n_test, "test"),
    ] {
        if frac > 0.0 && size == 0 {
            return Err(Error::InvalidSplit(format!(
                "{} fraction {} maps to zero rows of {}",
                label, frac, n
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    if spec.shuffle {
        let mut rng = RngStream::new(spec.seed, 0);
        rng.shuffle(&mut order);
    }

    let train = &order[..n_train];
    let valid = &order[n_train..n_train + n_valid];
    let test = &order[n_train + n_valid..];
    Ok((
        ds.select_rows(train, format!("{}/train", ds.name))?,
        if valid.is_empty() {
            empty_like(ds, format!("{}/valid", ds.name))
        } else {
            ds.select_rows(valid, format!("{}/valid", ds.name))?
        },
        if test.is_empty() {
            empty_like(ds, format!("{}/test", ds.name))
        } else {
            ds.select_rows(test, format!("{}/test", ds.name))?
        },
    ))
}

/// Zero-row placeholder carrying the source widths. Bypasses `Dataset::new`
/// because an empty split partition is legitimate.
fn empty_like(ds: &Dataset, name: String) -> Dataset {
    Dataset {
        inputs: Matrix::zeros(0, ds.input_width()),
        targets: Matrix::zeros(0, ds.target_width()),
        name,
    }
}

/// Per-column affine ranges recorded by [`normalize_minmax`], enough to
/// invert the mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub input_ranges: Vec<(f64, f64)>,
    pub target_ranges: Vec<(f64, f64)>,
}

impl NormParams {
    /// Map a raw input row into normalized space.
    pub fn normalize_input(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.input_ranges)
            .map(|(v, r)| forward_one(*v, *r))
            .collect()
    }

    /// Map a normalized target row back to raw space.
    pub fn denormalize_target(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.target_ranges)
            .map(|(v, r)| inverse_one(*v, *r))
            .collect()
    }

    /// Undo the normalization on a whole dataset.
    pub fn denormalize(&self, ds: &Dataset) -> Result<Dataset> {
        let inputs = apply_columns(&ds.inputs, &self.input_ranges, inverse_one)?;
        let targets = apply_columns(&ds.targets, &self.target_ranges, inverse_one)?;
        Dataset::new(inputs, targets, ds.name.clone())
    }
}

fn forward_one(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn inverse_one(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        lo + v * (hi - lo)
    } else {
        lo
    }
}

fn apply_columns(
    m: &Matrix,
    ranges: &[(f64, f64)],
    f: impl Fn(f64, (f64, f64)) -> f64,
) -> Result<Matrix> {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.set(r, c, f(m.get(r, c), ranges[c]));
        }
    }
    Ok(out)
}

/// Map every input and target column affinely onto `[0, 1]`; constant
/// columns map to 0.5. Returns the normalized dataset and the parameters of
/// the inverse mapping.
pub fn normalize_minmax(ds: &Dataset) -> Result<(Dataset, NormParams)> {
    let ranges = |m: &Matrix| -> Vec<(f64, f64)> {
        (0..m.cols())
            .map(|c| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for r in 0..m.rows() {
                    lo = lo.min(m.get(r, c));
                    hi = hi.max(m.get(r, c));
                }
                (lo, hi)
            })
            .collect()
    };
    let params = NormParams {
        input_ranges: ranges(&ds.inputs),
        target_ranges: ranges(&ds.targets),
    };
    let inputs = apply_columns(&ds.inputs, &params.input_ranges, forward_one)?;
    let targets = apply_columns(&ds.targets, &params.target_ranges, forward_one)?;
    Ok((Dataset::new(inputs, targets, ds.name.clone())?, params))
}

/// Root mean squared error `sqrt(Σ‖yᵢ − tᵢ‖² / (n·m))`.
pub fn rmse(predicted: &Matrix, targets: &Matrix) -> Result<f64> {
    if predicted.rows() != targets.rows() || predicted.cols() != targets.cols() {
        return Err(Error::InvalidInput(format!(
            "rmse: shapes {}x{} vs {}x{}",
            predicted.rows(),
            predicted.cols(),
            targets.rows(),
            targets.cols()
        )));
    }
    let n = predicted.rows() * predicted.cols();
    if n == 0 {
        return Err(Error::InvalidInput("rmse: empty matrices".into()));
    }
    let sse: f64 = predicted
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(y, t)| (y - t) * (y - t))
        .sum();
    Ok((sse / n as f64).sqrt())
}

/// Delay-embed a scalar series: row `k` has inputs `x[k + max_lag − lag_j]`
/// and target `x[k + max_lag + horizon]`.
pub fn embed_series(x: &[f64], lags: &[usize], horizon: usize) -> Result<Dataset> {
    if lags.is_empty() {
        return Err(Error::InvalidInput("embedding needs at least one lag".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let max_lag = *lags.iter().max().unwrap();
    if max_lag + horizon >= x.len() {
        return Err(Error::InvalidInput(format!(
            "series of length {} too short for max lag {} and horizon {}",
            x.len(),
            max_lag,
            horizon
        )));
    }
    let rows = x.len() - max_lag - horizon;
    let mut inputs = Vec::with_capacity(rows);
    let mut targets = Vec::with_capacity(rows);
    for k in 0..rows {
        inputs.push(
            lags.iter()
                .map(|&lag| x[k + max_lag - lag])
                .collect::<Vec<f64>>(),
        );
        targets.push(vec![x[k + max_lag + horizon]]);
    }
    Dataset::new(
        Matrix::from_rows(&inputs)?,
        Matrix::from_rows(&targets)?,
        "embedded",
    )
}
