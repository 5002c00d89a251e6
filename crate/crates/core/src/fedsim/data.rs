//! Synthetic and CSV datasets, and the vertical split across parties.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::model::{scores, ModelKind};
use super::FedError;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major samples.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Weights that generated the labels, for synthetic data.
    pub true_weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn samples(&self) -> usize {
        self.x.len()
    }

    pub fn features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Gaussian features; linear targets carry N(0, 0.1^2) noise, logistic
    /// labels are the sign of the true score (linearly separable).
    pub fn synthetic(kind: ModelKind, samples: usize, features: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..features).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x: Vec<Vec<f64>> = (0..samples)
            .map(|_| (0..features).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let noise = Normal::new(0.0, 0.1).expect("valid sigma");
        let y = scores(&x, &w)
            .into_iter()
            .map(|s| match kind {
                ModelKind::Linear => s + noise.sample(&mut rng),
                ModelKind::Logistic => {
                    if s > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect();
        Dataset { x, y, true_weights: Some(w) }
    }

    /// Header row, float columns, label in the last column.
    pub fn from_csv(path: &Path) -> Result<Dataset, FedError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| FedError::Dataset(format!("{}: {e}", path.display())))?;
        let width = reader
            .headers()
            .map_err(|e| FedError::Dataset(format!("{}: {e}", path.display())))?
            .len();
        if width < 2 {
            return Err(FedError::Dataset("need at least one feature column and a label column".into()));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| FedError::Dataset(format!("{}: {e}", path.display())))?;
            let values = record
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| FedError::Dataset(format!("{}: row {}: {e}", path.display(), line + 2)))?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(FedError::Dataset(format!("{}: row {}: non-finite value", path.display(), line + 2)));
            }
            let (label, features) = values.split_last().expect("width >= 2");
            y.push(*label);
            x.push(features.to_vec());
        }
        if x.is_empty() {
            return Err(FedError::Dataset(format!("{}: no data rows", path.display())));
        }
        Ok(Dataset { x, y, true_weights: None })
    }

    /// Rescales every feature column to zero mean and unit variance.
    pub fn standardize(&mut self) {
        let m = self.samples() as f64;
        for j in 0..self.features() {
            let mean = self.x.iter().map(|r| r[j]).sum::<f64>() / m;
            let var = self.x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            self.x.iter_mut().for_each(|r| r[j] = (r[j] - mean) / sd);
        }
    }

    /// Column ranges of a vertical split into `parts` nearly equal blocks.
    pub fn split_columns(&self, parts: usize) -> Result<Vec<std::ops::Range<usize>>, FedError> {
        let d = self.features();
        if parts == 0 || parts > d {
            return Err(FedError::Shape(format!("cannot split {d} features across {parts} parties")));
        }
        let base = d / parts;
        let extra = d % parts;
        let mut start = 0;
        Ok((0..parts)
            .map(|p| {
                let len = base + usize::from(p < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect())
    }

    pub fn columns(&self, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        self.x.iter().map(|r| r[range.clone()].to_vec()).collect()
    }
}

/// Random row order, used to subsample large CSV files.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    idx
}
