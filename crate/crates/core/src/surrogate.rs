//! Gaussian-process regression over scalarized objective values.
//!
//! Targets are standardized before fitting and the standardization is undone
//! in [`GaussianProcessModel::predict`]. Hyperparameters (one lengthscale per
//! input dimension plus the signal variance) are fitted by multi-start
//! projected gradient ascent on the log marginal likelihood, working in log
//! space. The observation noise is a fixed numerical jitter because the
//! scalarized targets are noiseless: a larger one keeps the hyperparameter
//! search well conditioned, a much smaller one is used for the final
//! factorization so the posterior mean interpolates the data.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::problem::Bounds;
use crate::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Matern52,
    SquaredExponential,
}

impl Kernel {
    /// Kernel value for scaled squared distance `r2`.
    fn value(self, r2: f64, signal_variance: f64) -> f64 {
        match self {
            Kernel::Matern52 => {
                let r = r2.sqrt();
                signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r2) * (-SQRT5 * r).exp()
            }
            Kernel::SquaredExponential => signal_variance * (-0.5 * r2).exp(),
        }
    }

    /// `dk / dlog(l_i) = factor * (d_i / l_i)^2`; returns `factor`.
    fn lengthscale_factor(self, r2: f64, signal_variance: f64) -> f64 {
        match self {
            Kernel::Matern52 => {
                let r = r2.sqrt();
                signal_variance * 5.0 / 3.0 * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
            }
            Kernel::SquaredExponential => signal_variance * (-0.5 * r2).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
}

impl Hyperparameters {
    /// `[ln l_1, .., ln l_d, ln sigma_f^2]`
    pub fn to_log(&self) -> Vec<f64> {
        self.lengthscales
            .iter()
            .map(|l| l.ln())
            .chain(std::iter::once(self.signal_variance.ln()))
            .collect()
    }

    pub fn from_log(theta: &[f64]) -> Self {
        let (ls, sf) = theta.split_at(theta.len() - 1);
        Self {
            lengthscales: ls.iter().map(|v| v.exp()).collect(),
            signal_variance: sf[0].exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: Kernel,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Diagonal nugget while searching hyperparameters.
    pub fit_jitter: f64,
    /// Nugget for the final factorization; small so that the posterior
    /// mean reproduces the training targets.
    pub jitter: f64,
    pub max_jitter: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Matern52,
            restarts: 10,
            max_iterations: 50,
            fit_jitter: 1e-6,
            jitter: 1e-10,
            max_jitter: 1e-2,
        }
    }
}

fn scaled_sq_dist(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((u, v), l)| {
            let t = (u - v) / l;
            t * t
        })
        .sum()
}

/// Log marginal likelihood of standardized targets as a function of the log
/// hyperparameters.
#[derive(Debug, Clone)]
pub struct MarginalLikelihood {
    x: Vec<Vec<f64>>,
    y: DVector<f64>,
    kernel: Kernel,
    noise: f64,
    /// Squared coordinate differences of every pair `b < a`, row by row.
    sq_diffs: Vec<f64>,
}

impl MarginalLikelihood {
    /// `targets` are used as given (no standardization).
    pub fn new(x: Vec<Vec<f64>>, targets: &[f64], kernel: Kernel, noise: f64) -> Self {
        let mut sq_diffs = Vec::new();
        for a in 0..x.len() {
            for b in 0..a {
                sq_diffs.extend(x[a].iter().zip(&x[b]).map(|(u, v)| (u - v) * (u - v)));
            }
        }
        Self {
            x,
            y: DVector::from_column_slice(targets),
            kernel,
            noise,
            sq_diffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, |p| p.len())
    }

    fn covariance(&self, hyper: &Hyperparameters, noise: f64) -> DMatrix<f64> {
        let n = self.x.len();
        let d = self.dim();
        let inv_l2: Vec<f64> = hyper.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut k = DMatrix::zeros(n, n);
        let mut pair = self.sq_diffs.chunks_exact(d.max(1));
        for a in 0..n {
            for b in 0..a {
                let sq = pair.next().expect("one chunk per pair");
                let r2: f64 = sq.iter().zip(&inv_l2).map(|(s, w)| s * w).sum();
                let v = self.kernel.value(r2, hyper.signal_variance);
                k[(a, b)] = v;
                k[(b, a)] = v;
            }
            k[(a, a)] = hyper.signal_variance + noise;
        }
        k
    }

    fn value_from_cholesky(&self, chol: &Cholesky<f64, Dyn>) -> (f64, DVector<f64>) {
        let alpha = chol.solve(&self.y);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let n = self.y.len() as f64;
        (-0.5 * self.y.dot(&alpha) - log_det - 0.5 * n * LN_2PI, alpha)
    }

    fn factor(&self, log_params: &[f64]) -> Option<Cholesky<f64, Dyn>> {
        self.covariance(&Hyperparameters::from_log(log_params), self.noise).cholesky()
    }

    /// `None` when the covariance is not numerically positive definite.
    pub fn value(&self, log_params: &[f64]) -> Option<f64> {
        Some(self.value_from_cholesky(&self.factor(log_params)?).0)
    }

    /// Value and analytic gradient with respect to the log hyperparameters.
    pub fn value_and_gradient(&self, log_params: &[f64]) -> Option<(f64, Vec<f64>)> {
        let chol = self.factor(log_params)?;
        Some(self.value_and_gradient_from(log_params, &chol))
    }

    fn value_and_gradient_from(&self, log_params: &[f64], chol: &Cholesky<f64, Dyn>) -> (f64, Vec<f64>) {
        let hyper = Hyperparameters::from_log(log_params);
        let d = self.dim();
        let n = self.x.len();
        let (value, alpha) = self.value_from_cholesky(chol);
        let kinv = chol.inverse();
        let inv_l2: Vec<f64> = hyper.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();

        // dL/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
        let mut grad = vec![0.0; d + 1];
        let mut pair = self.sq_diffs.chunks_exact(d.max(1));
        for a in 0..n {
            for b in 0..a {
                let sq = pair.next().expect("one chunk per pair");
                let r2: f64 = sq.iter().zip(&inv_l2).map(|(s, w)| s * w).sum();
                // off-diagonal entries appear twice in the symmetric trace
                let w = 2.0 * (alpha[a] * alpha[b] - kinv[(a, b)]);
                let factor = w * self.kernel.lengthscale_factor(r2, hyper.signal_variance);
                for i in 0..d {
                    grad[i] += factor * sq[i] * inv_l2[i];
                }
                grad[d] += w * self.kernel.value(r2, hyper.signal_variance);
            }
            grad[d] += (alpha[a] * alpha[a] - kinv[(a, a)]) * hyper.signal_variance;
        }
        for g in &mut grad {
            *g *= 0.5;
        }
        (value, grad)
    }
}

/// A fitted GP surrogate. Immutable after fitting.
#[derive(Debug, Clone)]
pub struct GaussianProcessModel {
    kernel: Kernel,
    hyper: Hyperparameters,
    noise_variance: f64,
    mean: f64,
    scale: f64,
    x: Vec<Vec<f64>>,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
    log_likelihood: f64,
    degenerate: bool,
}

impl GaussianProcessModel {
    /// Conditions a GP with fixed hyperparameters on the pairs.
    pub fn with_hyperparameters(pairs: &[(Vec<f64>, f64)], hyper: Hyperparameters, cfg: &GpConfig) -> Result<Self> {
        let (x, targets, mean, scale) = standardize(pairs)?;
        if scale == 0.0 {
            return Ok(Self::constant(x, mean, hyper, cfg));
        }
        Self::condition(x, &targets, mean, scale, hyper, cfg)
    }

    fn constant(x: Vec<Vec<f64>>, mean: f64, hyper: Hyperparameters, cfg: &GpConfig) -> Self {
        let n = x.len();
        Self {
            kernel: cfg.kernel,
            hyper,
            noise_variance: cfg.jitter,
            mean,
            scale: 0.0,
            x,
            chol_l: DMatrix::identity(n, n),
            alpha: DVector::zeros(n),
            log_likelihood: f64::NAN,
            degenerate: true,
        }
    }

    fn condition(
        x: Vec<Vec<f64>>,
        targets: &[f64],
        mean: f64,
        scale: f64,
        hyper: Hyperparameters,
        cfg: &GpConfig,
    ) -> Result<Self> {
        let lik = MarginalLikelihood::new(x, targets, cfg.kernel, cfg.jitter);
        let mut jitter = cfg.jitter;
        loop {
            if let Some(chol) = lik.covariance(&hyper, jitter).cholesky() {
                let (log_likelihood, alpha) = lik.value_from_cholesky(&chol);
                return Ok(Self {
                    kernel: cfg.kernel,
                    hyper,
                    noise_variance: jitter,
                    mean,
                    scale,
                    x: lik.x,
                    chol_l: chol.unpack(),
                    alpha,
                    log_likelihood,
                    degenerate: false,
                });
            }
            jitter *= 10.0;
            if jitter > cfg.max_jitter * (1.0 + 1e-9) {
                return Err(Error::SingularCovariance);
            }
        }
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Log marginal likelihood of the standardized targets; NaN when degenerate.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// All training targets were identical; the model predicts that constant
    /// with zero uncertainty.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn training_inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.hyper.lengthscales.len()
    }

    /// Posterior mean and standard deviation of the latent function.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        if self.degenerate {
            return (self.mean, 0.0);
        }
        let kstar = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| {
                self.kernel
                    .value(scaled_sq_dist(x, xi, &self.hyper.lengthscales), self.hyper.signal_variance)
            }),
        );
        let mu = self.mean + self.scale * kstar.dot(&self.alpha);
        let v = self
            .chol_l
            .solve_lower_triangular(&kstar)
            .expect("cholesky factor has a positive diagonal");
        let var = (self.hyper.signal_variance - v.norm_squared()).max(0.0);
        (mu, self.scale * var.sqrt())
    }
}

type Standardized = (Vec<Vec<f64>>, Vec<f64>, f64, f64);

/// Splits pairs into inputs and standardized targets. `scale == 0` flags
/// identical targets.
fn standardize(pairs: &[(Vec<f64>, f64)]) -> Result<Standardized> {
    let first = pairs.first().ok_or(Error::InsufficientData)?;
    if !pairs.iter().any(|(x, _)| x != &first.0) {
        return Err(Error::InsufficientData);
    }
    let n = pairs.len() as f64;
    let mean = pairs.iter().map(|(_, u)| u).sum::<f64>() / n;
    let var = pairs.iter().map(|(_, u)| (u - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let x: Vec<Vec<f64>> = pairs.iter().map(|(x, _)| x.clone()).collect();
    if sd <= 1e-12 * (1.0 + mean.abs()) {
        return Ok((x, vec![0.0; pairs.len()], mean, 0.0));
    }
    let targets = pairs.iter().map(|(_, u)| (u - mean) / sd).collect();
    Ok((x, targets, mean, sd))
}

/// Box in log-hyperparameter space searched by the optimizer.
fn search_box(bounds: &Bounds) -> (Vec<f64>, Vec<f64>) {
    let d = bounds.dim();
    let mut lo: Vec<f64> = (0..d).map(|i| (1e-3 * bounds.range(i)).ln()).collect();
    let mut hi: Vec<f64> = (0..d).map(|i| (1e2 * bounds.range(i)).ln()).collect();
    lo.push(1e-3f64.ln());
    hi.push(1e3f64.ln());
    (lo, hi)
}

/// Log-uniform draw over the restart region.
pub fn sample_start<R: Rng + ?Sized>(bounds: &Bounds, rng: &mut R) -> Vec<f64> {
    let mut theta: Vec<f64> = (0..bounds.dim())
        .map(|i| {
            let r = bounds.range(i);
            rng.random_range((1e-2 * r).ln()..=(10.0 * r).ln())
        })
        .collect();
    theta.push(rng.random_range(1e-2f64.ln()..=1e2f64.ln()));
    theta
}

fn clamp_into(theta: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((t, l), h) in theta.iter_mut().zip(lo).zip(hi) {
        *t = t.clamp(*l, *h);
    }
}

/// Projected gradient ascent with Armijo backtracking from `start`.
fn ascend(lik: &MarginalLikelihood, start: Vec<f64>, lo: &[f64], hi: &[f64], max_iterations: usize) -> Option<(Vec<f64>, f64)> {
    let mut theta = start;
    clamp_into(&mut theta, lo, hi);
    let (mut value, mut grad) = lik.value_and_gradient(&theta)?;
    let mut step = 1.0;
    'outer: for _ in 0..max_iterations {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-8 {
            break;
        }
        loop {
            let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g / gnorm).collect();
            clamp_into(&mut cand, lo, hi);
            let moved: Vec<f64> = cand.iter().zip(&theta).map(|(c, t)| c - t).collect();
            let predicted: f64 = moved.iter().zip(&grad).map(|(m, g)| m * g).sum();
            if predicted <= 1e-12 {
                // pinned against the box
                break 'outer;
            }
            let accepted = lik.factor(&cand).and_then(|chol| {
                let v = lik.value_from_cholesky(&chol).0;
                (v >= value + 1e-4 * predicted).then(|| lik.value_and_gradient_from(&cand, &chol))
            });
            match accepted {
                Some((v, g)) => {
                    let gain = v - value;
                    theta = cand;
                    value = v;
                    grad = g;
                    if gain < 1e-6 * (1.0 + value.abs()) {
                        break 'outer;
                    }
                    step = (step * 2.0).min(4.0);
                    break;
                }
                _ => {
                    step *= 0.5;
                    if step < 1e-6 {
                        break 'outer;
                    }
                }
            }
        }
    }
    Some((theta, value))
}

/// Fits a GP to `(x, u)` pairs. Hyperparameters maximize the log marginal
/// likelihood over `cfg.restarts` log-uniform starts; the result is
/// deterministic for a given RNG state.
pub fn fit_gp<R: Rng + ?Sized>(
    pairs: &[(Vec<f64>, f64)],
    bounds: &Bounds,
    cfg: &GpConfig,
    rng: &mut R,
) -> Result<GaussianProcessModel> {
    if let Some((x, _)) = pairs.iter().find(|(x, _)| x.len() != bounds.dim()) {
        return Err(Error::DimensionMismatch {
            expected: bounds.dim(),
            got: x.len(),
        });
    }
    let (x, targets, mean, scale) = standardize(pairs)?;
    let starts: Vec<Vec<f64>> = (0..cfg.restarts.max(1)).map(|_| sample_start(bounds, rng)).collect();
    if scale == 0.0 {
        let hyper = Hyperparameters::from_log(&starts[0]);
        return Ok(GaussianProcessModel::constant(x, mean, hyper, cfg));
    }
    let (lo, hi) = search_box(bounds);
    let mut jitter = cfg.fit_jitter;
    loop {
        let lik = MarginalLikelihood::new(x.clone(), &targets, cfg.kernel, jitter);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for start in &starts {
            if let Some((theta, value)) = ascend(&lik, start.clone(), &lo, &hi, cfg.max_iterations) {
                if best.as_ref().is_none_or(|(_, b)| value > *b) {
                    best = Some((theta, value));
                }
            }
        }
        if let Some((theta, _)) = best {
            return GaussianProcessModel::condition(x, &targets, mean, scale, Hyperparameters::from_log(&theta), cfg);
        }
        jitter *= 10.0;
        if jitter > cfg.max_jitter * (1.0 + 1e-9) {
            return Err(Error::SingularCovariance);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeededRng;

    fn linear_pairs() -> Vec<(Vec<f64>, f64)> {
        (0..5).map(|i| {
            let x = i as f64 / 4.0;
            (vec![x], x)
        })
        .collect()
    }

    #[test]
    fn interpolates_noiseless_data() {
        let pairs = linear_pairs();
        let mut rng = SeededRng::new(1);
        let model = fit_gp(&pairs, &Bounds::unit(1), &GpConfig::default(), &mut rng).unwrap();
        for (x, u) in &pairs {
            let (mu, s) = model.predict(x);
            assert!((mu - u).abs() < 1e-6, "mu {mu} vs {u} {:?}", model.hyperparameters());
            assert!(s <= 1e-3, "s {s}");
        }
    }

    #[test]
    fn constant_targets_are_degenerate() {
        let pairs: Vec<_> = (0..4).map(|i| (vec![i as f64 / 3.0, 0.5], 3.0)).collect();
        let mut rng = SeededRng::new(1);
        let model = fit_gp(&pairs, &Bounds::unit(2), &GpConfig::default(), &mut rng).unwrap();
        assert!(model.is_degenerate());
        assert_eq!(model.predict(&[0.2, 0.9]), (3.0, 0.0));
    }

    #[test]
    fn rejects_single_distinct_input() {
        let pairs = vec![(vec![0.5], 1.0), (vec![0.5], 2.0)];
        let mut rng = SeededRng::new(1);
        assert!(matches!(
            fit_gp(&pairs, &Bounds::unit(1), &GpConfig::default(), &mut rng),
            Err(Error::InsufficientData)
        ));
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let pairs = vec![(vec![0.0], 1.0), (vec![0.3], -1.0), (vec![0.6], 0.5)];
        let hyper = Hyperparameters {
            lengthscales: vec![0.2],
            signal_variance: 1.3,
        };
        let model = GaussianProcessModel::with_hyperparameters(&pairs, hyper, &GpConfig::default()).unwrap();
        let mean = 0.5 / 3.0;
        let sd = {
            let v: f64 = [1.0f64, -1.0, 0.5].iter().map(|u| (u - mean).powi(2)).sum::<f64>() / 3.0;
            v.sqrt()
        };
        let (mu, s) = model.predict(&[0.6 + 50.0 * 0.2 + 1.0]);
        assert!((mu - mean).abs() <= 0.01 * mean.abs().max(1e-12) + 1e-12);
        let prior = sd * 1.3f64.sqrt();
        assert!((s - prior).abs() <= 0.01 * prior);
    }

    #[test]
    fn symmetric_midpoint() {
        for kernel in [Kernel::Matern52, Kernel::SquaredExponential] {
            let pairs = vec![(vec![0.2, 0.5], 1.0), (vec![0.8, 0.5], 1.0), (vec![0.5, 0.1], -2.0)];
            let cfg = GpConfig { kernel, ..GpConfig::default() };
            let hyper = Hyperparameters {
                lengthscales: vec![0.3, 0.4],
                signal_variance: 1.0,
            };
            let model = GaussianProcessModel::with_hyperparameters(&pairs, hyper, &cfg).unwrap();
            let left = model.predict(&[0.3, 0.7]).0;
            let right = model.predict(&[0.7, 0.7]).0;
            assert!((left - right).abs() < 1e-9);
        }
        let pairs = vec![(vec![0.2], 1.0), (vec![0.8], 3.0)];
        let hyper = Hyperparameters {
            lengthscales: vec![0.3],
            signal_variance: 1.0,
        };
        let model = GaussianProcessModel::with_hyperparameters(&pairs, hyper, &GpConfig::default()).unwrap();
        assert!((model.predict(&[0.5]).0 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = SeededRng::new(4);
        for kernel in [Kernel::Matern52, Kernel::SquaredExponential] {
            let x: Vec<Vec<f64>> = (0..15).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
            let y: Vec<f64> = x.iter().map(|p| (4.0 * p[0]).sin() + p[1] * p[2]).collect();
            let lik = MarginalLikelihood::new(x, &y, kernel, 1e-6);
            for _ in 0..10 {
                let theta = sample_start(&Bounds::unit(3), &mut rng);
                let (_, grad) = lik.value_and_gradient(&theta).unwrap();
                for i in 0..theta.len() {
                    let h = 1e-5;
                    let mut up = theta.clone();
                    up[i] += h;
                    let mut dn = theta.clone();
                    dn[i] -= h;
                    let fd = (lik.value(&up).unwrap() - lik.value(&dn).unwrap()) / (2.0 * h);
                    let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-3);
                    assert!(rel < 1e-4, "{kernel:?} param {i}: fd {fd} vs {}", grad[i]);
                }
            }
        }
    }

    #[test]
    fn fitted_likelihood_beats_random_probes() {
        let mut rng = SeededRng::new(33);
        let bounds = Bounds::unit(2);
        let pairs: Vec<_> = (0..20)
            .map(|_| {
                let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                let u = (5.0 * x[0]).sin() * x[1] + 0.3 * x[0];
                (x, u)
            })
            .collect();
        let model = fit_gp(&pairs, &bounds, &GpConfig::default(), &mut rng).unwrap();
        let (x, targets, _, _) = standardize(&pairs).unwrap();
        let lik = MarginalLikelihood::new(x, &targets, Kernel::Matern52, model.noise_variance());
        let fitted = lik.value(&model.hyperparameters().to_log()).unwrap();
        assert!((fitted - model.log_likelihood()).abs() < 1e-9);
        for _ in 0..100 {
            let probe = sample_start(&bounds, &mut rng);
            if let Some(v) = lik.value(&probe) {
                assert!(fitted >= v, "probe {probe:?} gives {v} > {fitted}");
            }
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = SeededRng::new(12);
        let pairs: Vec<_> = (0..20)
            .map(|_| {
                let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                let u = x[0].powi(2) - x[1];
                (x, u)
            })
            .collect();
        let a = fit_gp(&pairs, &Bounds::unit(2), &GpConfig::default(), &mut SeededRng::new(5)).unwrap();
        let b = fit_gp(&pairs, &Bounds::unit(2), &GpConfig::default(), &mut SeededRng::new(5)).unwrap();
        assert_eq!(a.hyperparameters(), b.hyperparameters());
        assert_eq!(a.log_likelihood().to_bits(), b.log_likelihood().to_bits());
    }

    #[test]
    fn variance_shrinks_when_data_is_added() {
        let mut rng = SeededRng::new(21);
        let hyper = Hyperparameters {
            lengthscales: vec![0.3, 0.5],
            signal_variance: 1.0,
        };
        let cfg = GpConfig::default();
        let pairs: Vec<_> = (0..12)
            .map(|_| {
                let x: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                let u = (3.0 * x[0]).cos() + x[1];
                (x, u)
            })
            .collect();
        // same standardization in both models so the variances are comparable
        let model_small = GaussianProcessModel::with_hyperparameters(&pairs[..11], hyper.clone(), &cfg).unwrap();
        let model_big = GaussianProcessModel::with_hyperparameters(&pairs, hyper, &cfg).unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
            let s_small = model_small.predict(&q).1 / model_small.scale;
            let s_big = model_big.predict(&q).1 / model_big.scale;
            assert!(s_big * s_big <= s_small * s_small + 1e-8);
        }
    }
}
