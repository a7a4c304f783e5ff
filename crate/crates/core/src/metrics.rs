//! Evaluation metrics for predicted versus ground-truth scores.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("series lengths differ: {pred} predicted vs {gt} ground truth")]
    LengthMismatch { pred: usize, gt: usize },
    #[error("need at least 2 pairs, got {0}")]
    TooShort(usize),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("a constant series has no rank correlation")]
    DegenerateSeries,
    #[error("score range must satisfy max > min (got {min}..{max})")]
    InvalidRange { min: f64, max: f64 },
}

/// Paired predicted and ground-truth scores on a known scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    predicted: Vec<f64>,
    ground_truth: Vec<f64>,
    range: (f64, f64),
}

impl ScoreSeries {
    pub fn new(predicted: Vec<f64>, ground_truth: Vec<f64>, range: (f64, f64)) -> Result<Self, MetricsError> {
        if predicted.len() != ground_truth.len() {
            return Err(MetricsError::LengthMismatch {
                pred: predicted.len(),
                gt: ground_truth.len(),
            });
        }
        if predicted.len() < 2 {
            return Err(MetricsError::TooShort(predicted.len()));
        }
        if predicted.iter().chain(&ground_truth).any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite);
        }
        let (min, max) = range;
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(MetricsError::InvalidRange { min, max });
        }
        Ok(ScoreSeries {
            predicted,
            ground_truth,
            range,
        })
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn ground_truth(&self) -> &[f64] {
        &self.ground_truth
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn srcc(series: &ScoreSeries) -> Result<f64, MetricsError> {
    let rp = average_ranks(&series.predicted);
    let rg = average_ranks(&series.ground_truth);
    pearson(&rp, &rg).ok_or(MetricsError::DegenerateSeries)
}

/// Relative L2 distance: `100 / N * sum(((gt - pred) / (max - min))^2)`.
pub fn rl2(series: &ScoreSeries) -> f64 {
    let (min, max) = series.range;
    let span = max - min;
    let sum: f64 = series
        .ground_truth
        .iter()
        .zip(&series.predicted)
        .map(|(g, p)| ((g - p) / span).powi(2))
        .sum();
    100.0 * sum / series.len() as f64
}
