//! Monte Carlo summary statistics.

use serde::Serialize;

/// Summary of `T` estimates of a quantity whose true value is known.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateStats {
    pub count: usize,
    pub mean: f64,
    /// Standard deviation with denominator `T − 1`.
    pub sample_std: f64,
    pub sem: f64,
    pub true_value: f64,
    pub bias: f64,
    /// `mean((x − true)²)`.
    pub mse: f64,
    /// `mean((x − mean)²)`.
    pub population_variance: f64,
}

impl AggregateStats {
    /// Requires at least two values.
    pub fn from_values(values: &[f64], true_value: f64) -> Option<Self> {
        let t = values.len();
        if t < 2 {
            return None;
        }
        let tf = t as f64;
        let mean = values.iter().sum::<f64>() / tf;
        let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
        let population_variance = ss / tf;
        let sample_std = (ss / (tf - 1.0)).sqrt();
        let mse = values.iter().map(|x| (x - true_value).powi(2)).sum::<f64>() / tf;
        Some(Self {
            count: t,
            mean,
            sample_std,
            sem: sample_std / tf.sqrt(),
            true_value,
            bias: mean - true_value,
            mse,
            population_variance,
        })
    }

    /// `MSE − (variance + bias²)`, zero up to rounding.
    pub fn decomposition_residual(&self) -> f64 {
        self.mse - (self.population_variance + self.bias * self.bias)
    }

    /// Whether the residual is within rounding. Deviations `x − true` carry
    /// an error of order `ε·|x|`, so the scale is `|x|·|x − true|`.
    pub fn decomposition_holds(&self) -> bool {
        let magnitude = self.true_value.abs() + self.mean.abs() + self.sample_std;
        let spread = self.bias.abs() + self.sample_std;
        let scale = magnitude * spread + self.mse;
        self.decomposition_residual().abs() <= 32.0 * f64::EPSILON * scale
    }
}
