//! Session orchestration: the initialization phase, the two exploration
//! strategies, the decision-maker boundary and opportunity-cost bookkeeping.
//!
//! A session alternates between publishing its Pareto front and exploring
//! around the point the decision maker picked:
//!
//! ```text
//! Initializing -> AwaitingPreference <-> Exploring -> Finished
//! ```

mod dm;
mod ground_truth;
mod runlog;
mod session;

use serde::{Deserialize, Serialize};

use crate::problem::problem_by_name;
use crate::sampling::WeightVector;
use crate::scalarize::DEFAULT_RHO;
use crate::tricand::MAX_DIM;
use crate::{Error, Result};

pub use dm::{simulated_choice, DecisionMaker, SimulatedDm};
pub use ground_truth::{ground_truth_dtlz2, opportunity_cost, GroundTruth, GROUND_TRUTH_SAMPLES};
pub use runlog::{run_session, run_session_with, LogRow, RunLog};
pub use session::{Session, SessionState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Tripe,
    Wape,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tripe" => Ok(Method::Tripe),
            "wape" => Ok(Method::Wape),
            _ => Err(invalid("method", format!("unknown method {s:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Tripe => "tripe",
            Method::Wape => "wape",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initializing,
    AwaitingPreference,
    Exploring,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DmMode {
    /// A hidden utility weight stands in for the human.
    Simulated { weight: WeightVector },
    Interactive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub problem: String,
    pub d_in: usize,
    pub d_out: usize,
    pub method: Method,
    pub total_budget: usize,
    pub p_space: usize,
    pub p_init: usize,
    pub rho: f64,
    pub wape_n: usize,
    pub wape_eta: f64,
    pub cost_dm: usize,
    pub seed: u64,
    pub dm_mode: DmMode,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field: field.into(),
        message: message.into(),
    }
}

impl SessionConfig {
    /// Defaults: `p_space = 10 d_in`, `p_init = 10 d_out`, `rho = 0.05`,
    /// `N = 5`, `eta = 0.05`, one evaluation per interaction, interactive DM.
    pub fn new(problem: impl Into<String>, d_in: usize, d_out: usize, method: Method, total_budget: usize) -> Self {
        Self {
            problem: problem.into(),
            d_in,
            d_out,
            method,
            total_budget,
            p_space: 10 * d_in,
            p_init: 10 * d_out,
            rho: DEFAULT_RHO,
            wape_n: 5,
            wape_eta: 0.05,
            cost_dm: 1,
            seed: 0,
            dm_mode: DmMode::Interactive,
        }
    }

    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        match problem_by_name(&self.problem, self.d_in, self.d_out) {
            Ok(_) => {}
            Err(Error::UnknownProblem(name)) => return Err(invalid("problem", format!("unknown problem {name:?}"))),
            Err(Error::InvalidDimensions(msg)) => return Err(invalid("d_in", msg)),
            Err(e) => return Err(e),
        }
        if self.method == Method::Tripe && self.d_in > MAX_DIM {
            return Err(invalid("d_in", "d_in exceeds TRIPE limit"));
        }
        if self.p_space < self.d_in + 1 {
            return Err(invalid("p_space", format!("must be at least d_in + 1 = {}", self.d_in + 1)));
        }
        if self.total_budget < self.p_space + self.p_init {
            return Err(invalid(
                "total_budget",
                format!("must cover p_space + p_init = {}", self.p_space + self.p_init),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 0.1) {
            return Err(invalid("rho", "must lie in (0, 0.1]"));
        }
        if !(0.0..1.0).contains(&self.wape_eta) {
            return Err(invalid("wape_eta", "must lie in [0, 1)"));
        }
        if self.method == Method::Wape && self.wape_n == 0 {
            return Err(invalid("wape_n", "must be positive"));
        }
        if let DmMode::Simulated { weight } = &self.dm_mode {
            if weight.len() != self.d_out {
                return Err(invalid("dm_mode", format!("weight must have {} components", self.d_out)));
            }
        }
        Ok(())
    }
}

/// The point the decision maker last picked, with the weight used to explore
/// around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preferred {
    pub eval_index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub weight: WeightVector,
    /// False when the weight was inferred because the point had none.
    pub weight_from_generation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    /// 1-based.
    pub interaction_index: usize,
    /// Eval indices of the front that was presented.
    pub front: Vec<usize>,
    pub chosen: usize,
    /// Ledger total after charging this interaction.
    pub budget_spent: usize,
    pub preferred_weight: WeightVector,
}

/// One perturbed weight of an exploration step, kept so the perturbation can
/// be replayed: `weight == apply_theta(base, theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDraw {
    pub interaction_index: usize,
    pub base: WeightVector,
    pub theta: Vec<f64>,
    pub weight: WeightVector,
    /// Eval index of the candidate it produced, if any.
    pub eval_index: Option<usize>,
}
