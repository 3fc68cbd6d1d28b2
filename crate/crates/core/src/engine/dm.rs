use crate::archive::{normalize, NormalizationBounds};
use crate::problem::EvaluatedPoint;
use crate::sampling::WeightVector;
use crate::scalarize::augmented_tchebycheff;

/// Whoever picks the preferred point from a presented front.
pub trait DecisionMaker {
    /// Returns the eval index of the chosen front member. `front` is
    /// non-empty and ordered by eval index.
    fn choose(&mut self, front: &[&EvaluatedPoint]) -> usize;
}

/// A decision maker with a hidden augmented-Tchebycheff utility.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDm {
    pub weight: WeightVector,
    pub rho: f64,
    /// Fixed reference normalization applied before scalarizing.
    pub normalization: NormalizationBounds,
}

impl SimulatedDm {
    /// Utility under identity normalization, which is the analytic
    /// objective range for DTLZ2 fronts.
    pub fn new(weight: WeightVector, rho: f64) -> Self {
        let d = weight.len();
        Self {
            weight,
            rho,
            normalization: NormalizationBounds::identity(d),
        }
    }

    pub fn utility(&self, y: &[f64]) -> f64 {
        augmented_tchebycheff(&self.weight, &normalize(y, &self.normalization), self.rho)
            .expect("front objectives match the weight dimension")
    }
}

/// Argmin of `utility` over `(eval_index, y)` pairs; ties go to the lowest
/// eval index.
pub fn simulated_choice<'a, I, F>(front: I, utility: F) -> Option<usize>
where
    I: IntoIterator<Item = (usize, &'a [f64])>,
    F: Fn(&[f64]) -> f64,
{
    let mut best: Option<(usize, f64)> = None;
    for (idx, y) in front {
        let u = utility(y);
        let better = match best {
            None => true,
            Some((b_idx, b_u)) => u < b_u || (u == b_u && idx < b_idx),
        };
        if better {
            best = Some((idx, u));
        }
    }
    best.map(|(idx, _)| idx)
}

impl DecisionMaker for SimulatedDm {
    fn choose(&mut self, front: &[&EvaluatedPoint]) -> usize {
        simulated_choice(front.iter().map(|p| (p.eval_index, p.y.as_slice())), |y| self.utility(y))
            .expect("front is non-empty")
    }
}
