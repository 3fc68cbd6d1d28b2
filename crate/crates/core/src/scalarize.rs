//! Augmented Tchebycheff scalarization.

use serde::{Deserialize, Serialize};

use crate::archive::{normalize, Dataset, NormalizationBounds};
use crate::sampling::WeightVector;
use crate::{Error, Result};

pub const DEFAULT_RHO: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarizationConfig {
    pub rho: f64,
}

impl ScalarizationConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 0.1) {
            return Err(Error::InvalidConfig {
                field: "rho".into(),
                message: format!("must lie in (0, 0.1], got {rho}"),
            });
        }
        Ok(Self { rho })
    }
}

impl Default for ScalarizationConfig {
    fn default() -> Self {
        Self { rho: DEFAULT_RHO }
    }
}

/// `max_i w_i f_i + rho * sum_j w_j f_j`.
pub fn augmented_tchebycheff(w: &WeightVector, f: &[f64], rho: f64) -> Result<f64> {
    if w.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            got: f.len(),
        });
    }
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for (wi, fi) in w.as_slice().iter().zip(f) {
        let t = wi * fi;
        max = max.max(t);
        sum += t;
    }
    Ok(max + rho * sum)
}

/// Normalizes and scalarizes every point, preserving dataset order.
pub fn scalarize_dataset(
    dataset: &Dataset,
    w: &WeightVector,
    bounds: &NormalizationBounds,
    rho: f64,
) -> Result<Vec<(Vec<f64>, f64)>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset
        .points()
        .iter()
        .map(|p| Ok((p.x.clone(), augmented_tchebycheff(w, &normalize(&p.y, bounds), rho)?)))
        .collect()
}

/// Weight that balances the pure Tchebycheff terms of `f`: `w_i ∝ 1 / max(f_i, epsilon)`.
pub fn infer_weight_for_point(f: &[f64], epsilon: f64) -> WeightVector {
    let inv: Vec<f64> = f.iter().map(|&v| 1.0 / v.max(epsilon)).collect();
    WeightVector::normalized(inv).expect("reciprocals of positive values")
}
