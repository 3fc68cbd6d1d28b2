//! The evaluated dataset, its Pareto front and objective normalization.

use serde::{Deserialize, Serialize};

use crate::problem::EvaluatedPoint;
use crate::{Error, Result};

const DEGENERATE_RANGE: f64 = 1e-12;

/// All expensive evaluations of a session, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<EvaluatedPoint>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a point. Panics on a repeated `eval_index`.
    pub fn push(&mut self, point: EvaluatedPoint) {
        assert!(
            self.get(point.eval_index).is_none(),
            "duplicate eval_index {}",
            point.eval_index
        );
        self.points.push(point);
    }

    pub fn points(&self) -> &[EvaluatedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, eval_index: usize) -> Option<&EvaluatedPoint> {
        self.points.iter().find(|p| p.eval_index == eval_index)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.x.as_slice())
    }
}

impl FromIterator<EvaluatedPoint> for Dataset {
    fn from_iter<I: IntoIterator<Item = EvaluatedPoint>>(iter: I) -> Self {
        let mut d = Dataset::new();
        for p in iter {
            d.push(p);
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub eval_index: usize,
    pub y: Vec<f64>,
}

/// Mutually non-dominated objective vectors, ordered by `eval_index`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub entries: Vec<FrontEntry>,
}

impl ParetoFront {
    pub fn contains(&self, eval_index: usize) -> bool {
        self.entries.iter().any(|e| e.eval_index == eval_index)
    }

    pub fn eval_indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.eval_index).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `a` dominates `b` (minimization).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Non-dominated subset of the dataset. Identical objective vectors keep only
/// the lowest `eval_index`.
pub fn non_dominated_filter(dataset: &Dataset) -> Result<ParetoFront> {
    non_dominated_entries(dataset.points().iter().map(|p| (p.eval_index, p.y.as_slice())))
}

/// Same as [`non_dominated_filter`] over bare `(eval_index, y)` pairs.
pub fn non_dominated_entries<'a, I>(items: I) -> Result<ParetoFront>
where
    I: IntoIterator<Item = (usize, &'a [f64])>,
{
    let mut items: Vec<(usize, &[f64])> = items.into_iter().collect();
    if items.is_empty() {
        return Err(Error::EmptyDataset);
    }
    items.sort_by_key(|(i, _)| *i);
    let mut front: Vec<(usize, &[f64])> = Vec::new();
    'candidates: for (idx, y) in items {
        for (_, f) in &front {
            // earlier equal vector wins the tie
            if dominates(f, y) || *f == y {
                continue 'candidates;
            }
        }
        front.retain(|(_, f)| !dominates(y, f));
        front.push((idx, y));
    }
    Ok(ParetoFront {
        entries: front
            .into_iter()
            .map(|(eval_index, y)| FrontEntry {
                eval_index,
                y: y.to_vec(),
            })
            .collect(),
    })
}

/// Observed per-objective range used to normalize before scalarizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub y_min: Vec<f64>,
    pub y_max: Vec<f64>,
}

impl NormalizationBounds {
    /// Bounds that leave objectives untouched.
    pub fn identity(d_out: usize) -> Self {
        Self {
            y_min: vec![0.0; d_out],
            y_max: vec![1.0; d_out],
        }
    }

    /// Objectives whose observed range is below `1e-12`; they normalize to 0.
    pub fn degenerate(&self) -> Vec<bool> {
        self.y_min
            .iter()
            .zip(&self.y_max)
            .map(|(lo, hi)| hi - lo < DEGENERATE_RANGE)
            .collect()
    }
}

pub fn normalization_bounds(dataset: &Dataset) -> Result<NormalizationBounds> {
    let first = dataset.points().first().ok_or(Error::EmptyDataset)?;
    let mut y_min = first.y.clone();
    let mut y_max = first.y.clone();
    for p in &dataset.points()[1..] {
        for (j, &v) in p.y.iter().enumerate() {
            y_min[j] = y_min[j].min(v);
            y_max[j] = y_max[j].max(v);
        }
    }
    Ok(NormalizationBounds { y_min, y_max })
}

pub fn normalize(y: &[f64], bounds: &NormalizationBounds) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(j, &v)| {
            let range = bounds.y_max[j] - bounds.y_min[j];
            if range < DEGENERATE_RANGE {
                0.0
            } else {
                (v - bounds.y_min[j]) / range
            }
        })
        .collect()
}
