//! Space-filling designs, simplex weights and weight perturbation.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::problem::Bounds;
use crate::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeight("empty weight".into()));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeight("components must be finite and non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidWeight(format!("components sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    /// Rescales non-negative values onto the simplex.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeight("components must be finite and non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidWeight("all components are zero".into()));
        }
        Ok(Self(w.into_iter().map(|v| v / sum).collect()))
    }

    pub fn uniform(d: usize) -> Self {
        Self(vec![1.0 / d as f64; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// Seeded ChaCha stream whose position survives serialization, so a session
/// restored from a snapshot continues the exact same sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream for the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.inner.get_stream()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[derive(Serialize, Deserialize)]
struct RngState {
    seed: u64,
    stream: u64,
    // u128 does not survive every JSON reader, keep it textual
    word_pos: String,
}

impl Serialize for SeededRng {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RngState {
            seed: self.seed,
            stream: self.stream(),
            word_pos: self.inner.get_word_pos().to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SeededRng {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let state = RngState::deserialize(d)?;
        let pos: u128 = state.word_pos.parse().map_err(serde::de::Error::custom)?;
        let mut rng = SeededRng::with_stream(state.seed, state.stream);
        rng.inner.set_word_pos(pos);
        Ok(rng)
    }
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

/// First `n` Halton points (bases = first `bounds.dim()` primes, starting at
/// index 1) mapped onto the box.
pub fn halton_design(n: usize, bounds: &Bounds) -> Vec<Vec<f64>> {
    let bases = first_primes(bounds.dim());
    (1..=n as u64)
        .map(|i| {
            let u: Vec<f64> = bases.iter().map(|&b| radical_inverse(i, b)).collect();
            bounds.from_unit(&u)
        })
        .collect()
}

/// Uniform draw from the `d`-dimensional probability simplex via normalized
/// standard exponentials.
pub fn sample_simplex_uniform<R: Rng + ?Sized>(d: usize, rng: &mut R) -> WeightVector {
    assert!(d >= 1, "simplex dimension must be positive");
    if d == 1 {
        return WeightVector(vec![1.0]);
    }
    loop {
        let e: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let sum: f64 = e.iter().sum();
        if sum > 0.0 {
            return WeightVector(e.into_iter().map(|v| v / sum).collect());
        }
    }
}

/// Multiplies `w_p` by `theta ~ U(1 - eta, 1 + eta)^d` and renormalizes.
pub fn perturb_weight<R: Rng + ?Sized>(w_p: &WeightVector, eta: f64, rng: &mut R) -> Result<WeightVector> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidEta(eta));
    }
    if eta == 0.0 {
        return Ok(w_p.clone());
    }
    Ok(apply_theta(w_p, &draw_theta(w_p.len(), eta, rng)?))
}

/// The multiplicative factors used by [`perturb_weight`]. `eta == 0` gives
/// all ones without touching the RNG.
pub fn draw_theta<R: Rng + ?Sized>(d: usize, eta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidEta(eta));
    }
    if eta == 0.0 {
        return Ok(vec![1.0; d]);
    }
    Ok((0..d).map(|_| 1.0 + eta * (2.0 * rng.random::<f64>() - 1.0)).collect())
}

/// Deterministic half of [`perturb_weight`] for a given `theta`.
pub fn apply_theta(w_p: &WeightVector, theta: &[f64]) -> WeightVector {
    let scaled: Vec<f64> = w_p.0.iter().zip(theta).map(|(w, t)| w * t).collect();
    let sum: f64 = scaled.iter().sum();
    WeightVector(scaled.into_iter().map(|v| v / sum).collect())
}
