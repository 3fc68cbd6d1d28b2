//! Ground-truth preferred solutions and the opportunity-cost metric.
//!
//! For two-objective DTLZ2 the Pareto front is the quarter circle
//! `(cos t, sin t)`, `t in [0, pi/2]`, reached by `x_1 = 2t/pi` with every
//! other input at 0.5. The ground truth is the front point minimizing the
//! hidden utility: the best of a dense uniform grid in `t`, polished by a
//! ternary search between its grid neighbours so the result does not depend
//! on the grid resolution.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::archive::{normalize, NormalizationBounds};
use crate::sampling::WeightVector;
use crate::scalarize::augmented_tchebycheff;
use crate::{Error, Result};

pub const GROUND_TRUTH_SAMPLES: usize = 100_000;

const REFINE_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub weight: WeightVector,
    pub rho: f64,
    /// Front angle of the optimum.
    pub theta: f64,
    pub y_star: Vec<f64>,
    pub u_star: f64,
    pub normalization: NormalizationBounds,
}

impl GroundTruth {
    pub fn utility(&self, y: &[f64]) -> f64 {
        augmented_tchebycheff(&self.weight, &normalize(y, &self.normalization), self.rho)
            .expect("objective count matches the weight")
    }

    /// A Pareto-optimal input producing `y_star`.
    pub fn x_star(&self, d_in: usize) -> Vec<f64> {
        let mut x = vec![0.5; d_in];
        x[0] = self.theta / FRAC_PI_2;
        x
    }
}

/// Ground truth for DTLZ2 with `samples` grid points on the front angle.
pub fn ground_truth_dtlz2(d_out: usize, w_star: &WeightVector, rho: f64, samples: usize) -> Result<GroundTruth> {
    if d_out != 2 {
        return Err(Error::UnsupportedObjectiveCount(d_out));
    }
    if w_star.len() != d_out {
        return Err(Error::DimensionMismatch {
            expected: d_out,
            got: w_star.len(),
        });
    }
    let normalization = NormalizationBounds::identity(d_out);
    let u_of = |t: f64| {
        augmented_tchebycheff(w_star, &[t.cos(), t.sin()], rho).expect("two objectives")
    };
    let n = samples.max(2);
    let step = FRAC_PI_2 / (n - 1) as f64;
    let (mut best_k, mut best_u) = (0, f64::INFINITY);
    for k in 0..n {
        let u = u_of(k as f64 * step);
        if u < best_u {
            best_k = k;
            best_u = u;
        }
    }
    let mut theta = best_k as f64 * step;

    let mut lo = best_k.saturating_sub(1) as f64 * step;
    let mut hi = ((best_k + 1).min(n - 1) as f64 * step).min(FRAC_PI_2);
    for _ in 0..REFINE_ITERATIONS {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if u_of(m1) <= u_of(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let refined = 0.5 * (lo + hi);
    let u_refined = u_of(refined);
    if u_refined < best_u {
        theta = refined;
        best_u = u_refined;
    }
    Ok(GroundTruth {
        weight: w_star.clone(),
        rho,
        theta,
        y_star: vec![theta.cos(), theta.sin()],
        u_star: best_u,
        normalization,
    })
}

/// Regret of `y` against the ground truth: `U(y) - U(y*)`, non-negative up
/// to ground-truth resolution.
pub fn opportunity_cost(y: &[f64], gt: &GroundTruth) -> f64 {
    gt.utility(y) - gt.u_star
}
