//! Expected improvement and its maximization over the input box.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::problem::Bounds;
use crate::surrogate::GaussianProcessModel;
use crate::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    pub n_random_starts: usize,
    pub n_local_refines: usize,
    /// Pattern search stops once the step, as a fraction of each coordinate
    /// range, falls below this.
    pub local_step_tolerance: f64,
    /// Initial pattern-search step as a fraction of each coordinate range.
    pub initial_step: f64,
    /// Nudge applied when the maximizer coincides with a training input.
    pub duplicate_step: f64,
}

impl AcquisitionConfig {
    pub fn for_dim(d_in: usize) -> Self {
        Self {
            n_random_starts: (1000 * d_in).clamp(1, 20_000),
            n_local_refines: 5,
            local_step_tolerance: 1e-6,
            initial_step: 0.1,
            duplicate_step: 1e-3,
        }
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Expected improvement below `f_min` of a normal predictive `N(mu, s^2)`.
pub fn expected_improvement(mu: f64, s: f64, f_min: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::NegativeStddev(s));
    }
    let gap = f_min - mu;
    if s == 0.0 {
        return Ok(gap.max(0.0));
    }
    let z = gap / s;
    Ok((gap * normal_cdf(z) + s * normal_pdf(z)).max(0.0))
}

fn ei_at(model: &GaussianProcessModel, x: &[f64], f_min: f64) -> f64 {
    let (mu, s) = model.predict(x);
    expected_improvement(mu, s, f_min).unwrap_or(0.0)
}

/// Coordinate-wise pattern search with step halving; returns the refined
/// point and its EI.
fn pattern_search(
    model: &GaussianProcessModel,
    start: Vec<f64>,
    start_value: f64,
    f_min: f64,
    bounds: &Bounds,
    cfg: &AcquisitionConfig,
) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut best = start_value;
    let mut step = cfg.initial_step;
    while step >= cfg.local_step_tolerance {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] += dir * step * bounds.range(i);
                bounds.clip(&mut cand);
                if cand[i] == x[i] {
                    continue;
                }
                let v = ei_at(model, &cand, f_min);
                if v > best {
                    best = v;
                    x = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

fn coincides(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-9)
}

/// Moves `x` off any training input by one `duplicate_step` along the first
/// coordinate (and direction) that yields a fresh in-bounds point.
fn separate_from_training(mut x: Vec<f64>, training: &[Vec<f64>], bounds: &Bounds, cfg: &AcquisitionConfig) -> Vec<f64> {
    if !training.iter().any(|t| coincides(t, &x)) {
        return x;
    }
    for i in 0..x.len() {
        for dir in [1.0, -1.0] {
            let mut cand = x.clone();
            cand[i] += dir * cfg.duplicate_step * bounds.range(i);
            bounds.clip(&mut cand);
            if !training.iter().any(|t| coincides(t, &cand)) {
                return cand;
            }
        }
    }
    // every axis neighbour is taken as well; step diagonally inward
    for (i, v) in x.iter_mut().enumerate() {
        let mid = 0.5 * (bounds.lower[i] + bounds.upper[i]);
        *v += (mid - *v).signum() * cfg.duplicate_step * bounds.range(i);
    }
    x
}

/// Maximizes EI under `model` with incumbent `min u` over the scalarized
/// dataset: uniform random scoring followed by pattern-search refinement of
/// the best few. Ties go to the earliest scored point.
pub fn maximize_acquisition<R: Rng + ?Sized>(
    model: &GaussianProcessModel,
    scalarized: &[(Vec<f64>, f64)],
    bounds: &Bounds,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Vec<f64> {
    let f_min = scalarized.iter().map(|(_, u)| *u).fold(f64::INFINITY, f64::min);
    let d = bounds.dim();
    let n = cfg.n_random_starts.max(1);
    let mut scored: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|_| {
            let u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let x = bounds.from_unit(&u);
            let v = ei_at(model, &x, f_min);
            (x, v)
        })
        .collect();
    // stable sort keeps scoring order among equal EI
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scored[b].1.total_cmp(&scored[a].1));

    let mut best: Option<(Vec<f64>, f64)> = None;
    for &i in order.iter().take(cfg.n_local_refines.max(1)) {
        let (x, v) = std::mem::take(&mut scored[i]);
        let refined = pattern_search(model, x, v, f_min, bounds, cfg);
        if best.as_ref().is_none_or(|(_, b)| refined.1 > *b) {
            best = Some(refined);
        }
    }
    let (x, _) = best.expect("at least one start is refined");
    let training: Vec<Vec<f64>> = scalarized.iter().map(|(x, _)| x.clone()).collect();
    separate_from_training(x, &training, bounds, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeededRng;
    use crate::surrogate::{GpConfig, Hyperparameters};
    use rand_distr::{Distribution, Normal};

    #[test]
    fn closed_form_examples() {
        let v = expected_improvement(0.3, 1.0, 0.3).unwrap();
        assert!((v - 0.39894).abs() < 1e-5);
        assert_eq!(expected_improvement(-1.0, 0.0, 1.0).unwrap(), 2.0);
        assert_eq!(expected_improvement(3.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(expected_improvement(0.0, -1.0, 1.0), Err(Error::NegativeStddev(-1.0)));
    }

    #[test]
    fn matches_monte_carlo() {
        let (mu, s, f_min) = (1.0 + 0.5, 0.25, 0.5);
        let analytic = expected_improvement(mu, s, f_min).unwrap();
        let mut rng = SeededRng::new(99);
        let normal = Normal::new(mu, s).unwrap();
        let n = 2_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let v: f64 = (f_min - normal.sample(&mut rng)).max(0.0);
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((analytic - mean).abs() <= 3.0 * se, "{analytic} vs {mean} ± {se}");
    }

    #[test]
    fn non_negative_and_monotone_in_s() {
        let mut prev = 0.0;
        for k in 0..200 {
            let s = k as f64 * 0.05;
            let v = expected_improvement(2.0, s, 2.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        for mu in [-5.0, -0.5, 0.0, 0.5, 5.0, 40.0] {
            for s in [1e-12, 1e-6, 0.1, 1.0, 10.0] {
                assert!(expected_improvement(mu, s, 0.0).unwrap() >= 0.0);
            }
        }
        assert!(expected_improvement(1.0, 1e-12, 0.0).unwrap() < 1e-12);
    }

    fn toy_model() -> (GaussianProcessModel, Vec<(Vec<f64>, f64)>) {
        let data = vec![(vec![0.0], 1.0), (vec![1.0], 0.0)];
        let hyper = Hyperparameters {
            lengthscales: vec![0.1],
            signal_variance: 1.0,
        };
        (GaussianProcessModel::with_hyperparameters(&data, hyper, &GpConfig::default()).unwrap(), data)
    }

    #[test]
    fn beats_dense_grid() {
        let (model, data) = toy_model();
        let bounds = Bounds::unit(1);
        let mut rng = SeededRng::new(3);
        let x = maximize_acquisition(&model, &data, &bounds, &AcquisitionConfig::for_dim(1), &mut rng);
        let best = ei_at(&model, &x, 0.0);
        let grid_max = (0..=10_000)
            .map(|k| ei_at(&model, &[k as f64 / 10_000.0], 0.0))
            .fold(0.0, f64::max);
        assert!(best >= grid_max - 1e-9, "{best} < {grid_max}");
        assert!(bounds.contains(&x));
    }

    #[test]
    fn deterministic_for_seed() {
        let (model, data) = toy_model();
        let cfg = AcquisitionConfig::for_dim(1);
        let a = maximize_acquisition(&model, &data, &Bounds::unit(1), &cfg, &mut SeededRng::new(8));
        let b = maximize_acquisition(&model, &data, &Bounds::unit(1), &cfg, &mut SeededRng::new(8));
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_model_returns_in_bounds_point() {
        let data = vec![(vec![0.2, 0.2], 1.0), (vec![0.8, 0.4], 1.0)];
        let mut rng = SeededRng::new(1);
        let model = crate::surrogate::fit_gp(&data, &Bounds::unit(2), &GpConfig::default(), &mut rng).unwrap();
        assert!(model.is_degenerate());
        let x = maximize_acquisition(&model, &data, &Bounds::unit(2), &AcquisitionConfig::for_dim(2), &mut rng);
        assert!(Bounds::unit(2).contains(&x));
        assert_eq!(ei_at(&model, &x, 1.0), 0.0);
    }

    #[test]
    fn nudges_off_training_inputs() {
        let training = vec![vec![0.5, 1.0], vec![0.501, 1.0]];
        let cfg = AcquisitionConfig::for_dim(2);
        let out = separate_from_training(vec![0.5, 1.0], &training, &Bounds::unit(2), &cfg);
        assert!(training.iter().all(|t| !coincides(t, &out)));
        assert!(Bounds::unit(2).contains(&out));
        assert!((out[0] - 0.499).abs() < 1e-12);
        let free = separate_from_training(vec![0.3, 0.3], &training, &Bounds::unit(2), &cfg);
        assert_eq!(free, vec![0.3, 0.3]);
    }
}
