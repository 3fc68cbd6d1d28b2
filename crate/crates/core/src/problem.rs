//! Box-bounded vector objectives, evaluation budget accounting and the DTLZ2
//! benchmark.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sampling::WeightVector;
use crate::{Error, Result};

/// Axis-aligned input domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::InvalidDimensions("bounds must have at least one dimension".into()));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(Error::InvalidDimensions(format!(
                "lower[{i}] must be strictly below upper[{i}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Index of the first coordinate outside the box, if any.
    pub fn violation(&self, x: &[f64]) -> Option<usize> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .position(|(&v, (&lo, &hi))| !(v >= lo && v <= hi))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.violation(x).is_none()
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, (&lo, &hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(lo, hi);
        }
    }

    /// Maps a point of the unit cube onto this box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &t)| self.lower[i] + t * self.range(i))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.lower[i]) / self.range(i))
            .collect()
    }
}

type Evaluator = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An expensive black-box vector function over a box. All objectives are
/// minimized.
#[derive(Clone)]
pub struct BoundedProblem {
    name: String,
    d_out: usize,
    bounds: Bounds,
    evaluator: Evaluator,
}

impl fmt::Debug for BoundedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedProblem")
            .field("name", &self.name)
            .field("d_in", &self.d_in())
            .field("d_out", &self.d_out)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl BoundedProblem {
    pub fn new<F>(name: impl Into<String>, d_out: usize, bounds: Bounds, evaluator: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if d_out < 2 {
            return Err(Error::InvalidDimensions("need at least two objectives".into()));
        }
        Ok(Self {
            name: name.into(),
            d_out,
            bounds,
            evaluator: Arc::new(evaluator),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d_in(&self) -> usize {
        self.bounds.dim()
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Calls the objective without touching any budget.
    pub fn objectives(&self, x: &[f64]) -> Vec<f64> {
        (self.evaluator)(x)
    }
}

/// Builds a registered problem by name. Only `"dtlz2"` is registered.
pub fn problem_by_name(name: &str, d_in: usize, d_out: usize) -> Result<BoundedProblem> {
    match name.to_ascii_lowercase().as_str() {
        "dtlz2" => make_dtlz2(d_in, d_out),
        _ => Err(Error::UnknownProblem(name.to_string())),
    }
}

/// DTLZ2 on `[0,1]^d_in` with `d_out` objectives. The first `d_out - 1`
/// coordinates are position variables, the rest feed the distance function
/// `g`. The Pareto set is `x_i = 0.5` for every distance variable and the
/// front is the positive orthant of the unit sphere.
pub fn make_dtlz2(d_in: usize, d_out: usize) -> Result<BoundedProblem> {
    if d_out < 2 || d_in < d_out {
        return Err(Error::InvalidDimensions(format!(
            "DTLZ2 needs d_in >= d_out >= 2, got d_in={d_in}, d_out={d_out}"
        )));
    }
    BoundedProblem::new("dtlz2", d_out, Bounds::unit(d_in), move |x: &[f64]| {
        dtlz2(x, d_out)
    })
}

fn dtlz2(x: &[f64], d_out: usize) -> Vec<f64> {
    let g: f64 = x[d_out - 1..].iter().map(|v| (v - 0.5).powi(2)).sum();
    let scale = 1.0 + g;
    (0..d_out)
        .map(|m| {
            // objective m uses cos of the first (d_out - 1 - m) angles and the
            // sin of the next one (none for m = 0)
            let n_cos = d_out - 1 - m;
            let mut f = scale;
            for &v in &x[..n_cos] {
                f *= (v * FRAC_PI_2).cos();
            }
            if m > 0 {
                f *= (x[n_cos] * FRAC_PI_2).sin();
            }
            f
        })
        .collect()
}

/// Evaluation and interaction accounting, in units of one expensive
/// evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub total_budget: usize,
    pub spent_evaluations: usize,
    pub spent_interactions: usize,
    pub cost_dm: usize,
}

impl BudgetLedger {
    pub fn new(total_budget: usize, cost_dm: usize) -> Self {
        Self {
            total_budget,
            spent_evaluations: 0,
            spent_interactions: 0,
            cost_dm,
        }
    }

    pub fn spent(&self) -> usize {
        self.spent_evaluations + self.cost_dm * self.spent_interactions
    }

    pub fn remaining(&self) -> usize {
        self.total_budget.saturating_sub(self.spent())
    }

    /// Charges one DM interaction.
    pub fn charge_interaction(&mut self) -> Result<()> {
        if self.remaining() < self.cost_dm {
            return Err(Error::BudgetExhausted);
        }
        self.spent_interactions += 1;
        Ok(())
    }

    fn charge_evaluation(&mut self) -> Result<usize> {
        if self.remaining() < 1 {
            return Err(Error::BudgetExhausted);
        }
        self.spent_evaluations += 1;
        Ok(self.spent_evaluations)
    }
}

/// One expensive evaluation. `eval_index` is 1-based and equals the number of
/// evaluations spent when the point was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub generating_weight: Option<WeightVector>,
    pub eval_index: usize,
}

/// Evaluates `x` and charges one evaluation to the ledger.
pub fn evaluate(problem: &BoundedProblem, ledger: &mut BudgetLedger, x: &[f64]) -> Result<EvaluatedPoint> {
    if x.len() != problem.d_in() {
        return Err(Error::DimensionMismatch {
            expected: problem.d_in(),
            got: x.len(),
        });
    }
    if let Some(index) = problem.bounds().violation(x) {
        return Err(Error::OutOfBounds { index });
    }
    let eval_index = ledger.charge_evaluation()?;
    Ok(EvaluatedPoint {
        x: x.to_vec(),
        y: problem.objectives(x),
        generating_weight: None,
        eval_index,
    })
}
