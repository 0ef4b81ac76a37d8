//! Regression metrics: RMSE, MAE, Pearson R and SD about the regression line.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {predictions} predictions, {labels} labels")]
    Length { predictions: usize, labels: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFew(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    /// `None` when predictions or labels have zero variance.
    pub r: Option<f64>,
    pub sd: Option<f64>,
}

impl MetricsReport {
    pub fn is_defined(&self) -> bool {
        self.r.is_some() && self.sd.is_some()
    }

    /// `key<TAB>value` lines; undefined values print as `undefined`.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
        let mut out = String::new();
        let _ = writeln!(out, "n\t{}", self.n);
        let _ = writeln!(out, "rmse\t{:.6}", self.rmse);
        let _ = writeln!(out, "mae\t{:.6}", self.mae);
        let _ = writeln!(out, "sd\t{}", opt(self.sd));
        let _ = writeln!(out, "r\t{}", opt(self.r));
        let _ = writeln!(out, "defined\t{}", self.is_defined());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn evaluate(predictions: &[f64], labels: &[f64]) -> Result<MetricsReport, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::Length { predictions: predictions.len(), labels: labels.len() });
    }
    let n = labels.len();
    if n < 2 {
        return Err(MetricsError::TooFew(n));
    }
    if let Some(i) = predictions.iter().zip(labels).position(|(p, y)| !p.is_finite() || !y.is_finite()) {
        return Err(MetricsError::NonFinite(i));
    }
    let err = || predictions.iter().zip(labels).map(|(p, y)| p - y);
    let rmse = (err().map(|e| e * e).sum::<f64>() / n as f64).sqrt();
    let mae = err().map(f64::abs).sum::<f64>() / n as f64;

    let (mp, my) = (mean(predictions), mean(labels));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (p, y) in predictions.iter().zip(labels) {
        let (dx, dy) = (p - mp, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (r, sd) = if sxx > 0.0 && syy > 0.0 {
        let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
        let b = sxy / sxx;
        let a = my - b * mp;
        let rss: f64 = predictions.iter().zip(labels).map(|(p, y)| (y - (a + b * p)).powi(2)).sum();
        (Some(r), Some((rss / (n - 1) as f64).sqrt()))
    } else {
        (None, None)
    };
    Ok(MetricsReport { n, rmse, mae, r, sd })
}
