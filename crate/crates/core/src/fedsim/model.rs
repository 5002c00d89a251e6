//! Losses and gradients of the two linear models.

use serde::{Deserialize, Serialize};

use super::FedError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Logistic,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "logistic" => Ok(ModelKind::Logistic),
            other => Err(format!("unknown model {other:?}, expected linear or logistic")),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// First-order expansion of the sigmoid around 0.
pub fn sigmoid_taylor(z: f64) -> f64 {
    0.5 + z / 4.0
}

fn check_shapes(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<(), FedError> {
    if x.len() != y.len() {
        return Err(FedError::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(FedError::Shape("no samples".into()));
    }
    if let Some(row) = x.iter().find(|r| r.len() != w.len()) {
        return Err(FedError::Shape(format!("row of {} features for {} weights", row.len(), w.len())));
    }
    Ok(())
}

pub fn scores(x: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    x.iter().map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
}

/// `X^T r / m`.
pub fn xt_times(x: &[Vec<f64>], r: &[f64], width: usize) -> Vec<f64> {
    let m = x.len() as f64;
    let mut g = vec![0.0; width];
    for (row, ri) in x.iter().zip(r) {
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += xj * ri;
        }
    }
    g.iter_mut().for_each(|v| *v /= m);
    g
}

/// `mean((Xw - y)^2) / 2`.
pub fn linear_loss(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<f64, FedError> {
    check_shapes(x, y, w)?;
    let s = scores(x, w);
    Ok(s.iter().zip(y).map(|(si, yi)| (si - yi).powi(2)).sum::<f64>() / (2.0 * x.len() as f64))
}

pub fn linear_gradient(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>, FedError> {
    check_shapes(x, y, w)?;
    let r: Vec<f64> = scores(x, w).iter().zip(y).map(|(s, yi)| s - yi).collect();
    Ok(xt_times(x, &r, w.len()))
}

/// Mean cross-entropy with labels in {0, 1}.
pub fn logistic_loss(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<f64, FedError> {
    check_shapes(x, y, w)?;
    let s = scores(x, w);
    let total: f64 = s
        .iter()
        .zip(y)
        // log(1 + e^z) - y z, written to stay finite for large |z|
        .map(|(&z, &yi)| z.max(0.0) + (-z.abs()).exp().ln_1p() - yi * z)
        .sum();
    Ok(total / x.len() as f64)
}

pub fn logistic_gradient(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>, FedError> {
    check_shapes(x, y, w)?;
    let r: Vec<f64> = scores(x, w).iter().zip(y).map(|(&z, yi)| sigmoid(z) - yi).collect();
    Ok(xt_times(x, &r, w.len()))
}

/// Loss whose gradient is the Taylor-sigmoid gradient:
/// `mean(log 2 - (y - 1/2) z + z^2 / 8)`.
pub fn logistic_taylor_loss(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<f64, FedError> {
    check_shapes(x, y, w)?;
    let s = scores(x, w);
    let total: f64 = s
        .iter()
        .zip(y)
        .map(|(&z, &yi)| std::f64::consts::LN_2 - (yi - 0.5) * z + z * z / 8.0)
        .sum();
    Ok(total / x.len() as f64)
}

pub fn logistic_taylor_gradient(x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>, FedError> {
    check_shapes(x, y, w)?;
    let r: Vec<f64> = scores(x, w).iter().zip(y).map(|(&z, yi)| sigmoid_taylor(z) - yi).collect();
    Ok(xt_times(x, &r, w.len()))
}

/// The objective trained under encryption and its gradient.
pub fn objective(kind: ModelKind, x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<f64, FedError> {
    match kind {
        ModelKind::Linear => linear_loss(x, y, w),
        ModelKind::Logistic => logistic_taylor_loss(x, y, w),
    }
}

pub fn objective_gradient(kind: ModelKind, x: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>, FedError> {
    match kind {
        ModelKind::Linear => linear_gradient(x, y, w),
        ModelKind::Logistic => logistic_taylor_gradient(x, y, w),
    }
}
