use serde::{Deserialize, Serialize};

use crate::problem::BudgetLedger;
use crate::{Error, Result};

use super::{
    ground_truth_dtlz2, opportunity_cost, DecisionMaker, DmMode, GroundTruth, InteractionRecord, Phase, Session,
    SessionConfig, SessionState, SimulatedDm, WeightDraw, GROUND_TRUTH_SAMPLES,
};

/// One evaluation as it appears in a run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub eval_index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub generating_weight: Option<Vec<f64>>,
    /// Lowest opportunity cost among evaluations so far.
    pub best_oc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: SessionConfig,
    pub ground_truth: Option<GroundTruth>,
    pub evaluations: Vec<LogRow>,
    pub interactions: Vec<InteractionRecord>,
    pub weight_draws: Vec<WeightDraw>,
    pub ledger: BudgetLedger,
    pub phase: Phase,
    pub diagnostics: Vec<String>,
}

impl RunLog {
    pub fn from_state(state: &SessionState, ground_truth: Option<&GroundTruth>) -> Self {
        let mut best = f64::INFINITY;
        let evaluations = state
            .dataset
            .points()
            .iter()
            .map(|p| {
                let best_oc = ground_truth.map(|gt| {
                    best = best.min(opportunity_cost(&p.y, gt));
                    best
                });
                LogRow {
                    eval_index: p.eval_index,
                    x: p.x.clone(),
                    y: p.y.clone(),
                    generating_weight: p.generating_weight.as_ref().map(|w| w.as_slice().to_vec()),
                    best_oc,
                }
            })
            .collect();
        Self {
            config: state.config.clone(),
            ground_truth: ground_truth.cloned(),
            evaluations,
            interactions: state.history.clone(),
            weight_draws: state.weight_draws.clone(),
            ledger: state.ledger,
            phase: state.phase,
            diagnostics: state.diagnostics.clone(),
        }
    }

    /// Best-so-far opportunity cost once initialization is complete.
    pub fn oc_after_initialization(&self) -> Option<f64> {
        let n = self.config.p_space + self.config.p_init;
        self.evaluations.get(n.checked_sub(1)?).and_then(|r| r.best_oc)
    }

    pub fn final_oc(&self) -> Option<f64> {
        self.evaluations.last().and_then(|r| r.best_oc)
    }
}

/// Drives `session` to completion with `dm`. Errors end the run early but
/// are recorded in the log rather than returned.
pub fn run_session_with(mut session: Session, dm: &mut dyn DecisionMaker, ground_truth: Option<&GroundTruth>) -> RunLog {
    loop {
        match session.advance(dm) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let mut state = session.into_state();
                state.diagnostics.push(format!("aborted: {e}"));
                state.phase = Phase::Finished;
                return RunLog::from_state(&state, ground_truth);
            }
        }
    }
    RunLog::from_state(session.state(), ground_truth)
}

/// Runs a simulated-DM session end to end. The ground truth is computed for
/// problems that have an analytic one.
pub fn run_session(config: SessionConfig) -> Result<RunLog> {
    let weight = match &config.dm_mode {
        DmMode::Simulated { weight } => weight.clone(),
        DmMode::Interactive => {
            return Err(Error::InvalidConfig {
                field: "dm_mode".into(),
                message: "batch runs need a simulated decision maker".into(),
            })
        }
    };
    let session = Session::new(config.clone())?;
    let ground_truth = if config.problem.eq_ignore_ascii_case("dtlz2") && config.d_out == 2 {
        Some(ground_truth_dtlz2(config.d_out, &weight, config.rho, GROUND_TRUTH_SAMPLES)?)
    } else {
        None
    };
    let mut dm = SimulatedDm::new(weight, config.rho);
    Ok(run_session_with(session, &mut dm, ground_truth.as_ref()))
}
