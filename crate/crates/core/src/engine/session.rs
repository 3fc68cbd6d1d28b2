use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize_acquisition, AcquisitionConfig};
use crate::archive::{non_dominated_filter, normalization_bounds, normalize, Dataset, ParetoFront};
use crate::problem::{evaluate, problem_by_name, BoundedProblem, BudgetLedger, EvaluatedPoint};
use crate::sampling::{apply_theta, draw_theta, halton_design, sample_simplex_uniform, SeededRng, WeightVector};
use crate::scalarize::{infer_weight_for_point, scalarize_dataset};
use crate::surrogate::{fit_gp, GpConfig};
use crate::tricand::{candidates, delaunay, neighbors_of_preferred};
use crate::{Error, Result};

use super::{DecisionMaker, InteractionRecord, Method, Phase, Preferred, SessionConfig, WeightDraw};

const INFER_EPS: f64 = 1e-6;
const SAME_POINT_EPS: f64 = 1e-9;

/// Everything needed to resume a session; serializable as a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub config: SessionConfig,
    pub phase: Phase,
    pub dataset: Dataset,
    pub front: ParetoFront,
    pub preferred: Option<Preferred>,
    pub ledger: BudgetLedger,
    pub rng: SeededRng,
    pub history: Vec<InteractionRecord>,
    pub weight_draws: Vec<WeightDraw>,
    /// Human-readable notes about skipped work or early termination.
    pub diagnostics: Vec<String>,
}

/// A session bound to its problem. All mutation goes through the methods
/// below, each of which leaves the state consistent even when it errors.
#[derive(Debug, Clone)]
pub struct Session {
    problem: BoundedProblem,
    state: SessionState,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let problem = problem_by_name(&config.problem, config.d_in, config.d_out)?;
        let state = SessionState {
            phase: Phase::Initializing,
            dataset: Dataset::new(),
            front: ParetoFront::default(),
            preferred: None,
            ledger: BudgetLedger::new(config.total_budget, config.cost_dm),
            rng: SeededRng::with_stream(config.seed, 0),
            history: Vec::new(),
            weight_draws: Vec::new(),
            diagnostics: Vec::new(),
            config,
        };
        Ok(Self { problem, state })
    }

    /// Rebinds a snapshot to its problem.
    pub fn restore(state: SessionState) -> Result<Self> {
        state.config.validate()?;
        let problem = problem_by_name(&state.config.problem, state.config.d_in, state.config.d_out)?;
        Ok(Self { problem, state })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn into_state(self) -> SessionState {
        self.state
    }

    pub fn problem(&self) -> &BoundedProblem {
        &self.problem
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn config(&self) -> &SessionConfig {
        &self.state.config
    }

    /// Front members as full dataset points, ordered by eval index.
    pub fn front_points(&self) -> Vec<&EvaluatedPoint> {
        self.state
            .front
            .entries
            .iter()
            .filter_map(|e| self.state.dataset.get(e.eval_index))
            .collect()
    }

    fn expect_phase(&self, phase: Phase) -> Result<()> {
        if self.state.phase != phase {
            return Err(Error::WrongPhase(format!(
                "expected {phase:?}, session is {:?}",
                self.state.phase
            )));
        }
        Ok(())
    }

    fn note(&mut self, msg: String) {
        self.state.diagnostics.push(msg);
    }

    fn finish(&mut self, why: &str) {
        self.state.phase = Phase::Finished;
        self.note(format!("finished: {why}"));
    }

    fn refresh_front(&mut self) {
        if let Ok(front) = non_dominated_filter(&self.state.dataset) {
            self.state.front = front;
        }
    }

    /// Moves to `AwaitingPreference` if an interaction can still be paid for
    /// and followed by at least one evaluation; otherwise finishes.
    fn await_preference(&mut self) {
        self.refresh_front();
        let ledger = &self.state.ledger;
        if self.state.front.is_empty() {
            self.finish("empty front");
        } else if ledger.remaining() <= ledger.cost_dm {
            self.finish("budget exhausted");
        } else {
            self.state.phase = Phase::AwaitingPreference;
        }
    }

    fn evaluate_and_store(&mut self, x: &[f64], weight: Option<WeightVector>) -> Result<usize> {
        let mut point = evaluate(&self.problem, &mut self.state.ledger, x)?;
        point.generating_weight = weight;
        let idx = point.eval_index;
        self.state.dataset.push(point);
        Ok(idx)
    }

    /// One weighted round: scalarize everything with `w`, fit the surrogate,
    /// maximize EI and evaluate the maximizer tagged with `w`. Returns `None`
    /// when the surrogate could not be fitted.
    fn weighted_round(&mut self, w: &WeightVector) -> Result<Option<usize>> {
        let bounds = normalization_bounds(&self.state.dataset)?;
        let pairs = scalarize_dataset(&self.state.dataset, w, &bounds, self.state.config.rho)?;
        let input_bounds = self.problem.bounds().clone();
        let model = match fit_gp(&pairs, &input_bounds, &GpConfig::default(), &mut self.state.rng) {
            Ok(m) => m,
            Err(e) => {
                self.note(format!("skipped weight {:?}: surrogate fit failed ({e})", w.as_slice()));
                return Ok(None);
            }
        };
        let acq = AcquisitionConfig::for_dim(self.problem.d_in());
        let x = maximize_acquisition(&model, &pairs, &input_bounds, &acq, &mut self.state.rng);
        self.evaluate_and_store(&x, Some(w.clone())).map(Some)
    }

    /// Space-filling design followed by `p_init` randomly weighted rounds.
    pub fn run_initialization(&mut self) -> Result<()> {
        self.expect_phase(Phase::Initializing)?;
        let design = halton_design(self.state.config.p_space, self.problem.bounds());
        for x in &design {
            if let Err(e) = self.evaluate_and_store(x, None) {
                self.refresh_front();
                self.finish("budget exhausted during the space-filling design");
                return Err(e);
            }
        }
        for _ in 0..self.state.config.p_init {
            let w = sample_simplex_uniform(self.state.config.d_out, &mut self.state.rng);
            if let Err(e) = self.weighted_round(&w) {
                self.refresh_front();
                self.finish("initialization aborted");
                return Err(e);
            }
        }
        self.await_preference();
        Ok(())
    }

    /// Asks `dm` to pick from the current front and applies the choice.
    pub fn solicit_preference(&mut self, dm: &mut dyn DecisionMaker) -> Result<()> {
        self.expect_phase(Phase::AwaitingPreference)?;
        let choice = dm.choose(&self.front_points());
        self.apply_choice(choice)
    }

    /// Records the decision maker's pick. Invalid picks leave the session
    /// untouched and cost nothing.
    pub fn apply_choice(&mut self, eval_index: usize) -> Result<()> {
        self.expect_phase(Phase::AwaitingPreference)?;
        if !self.state.front.contains(eval_index) {
            return Err(Error::InvalidChoice(eval_index));
        }
        let point = self.state.dataset.get(eval_index).ok_or(Error::InvalidChoice(eval_index))?.clone();
        self.state.ledger.charge_interaction()?;

        let (weight, from_generation) = match point.generating_weight {
            Some(w) => (w, true),
            None => {
                let bounds = normalization_bounds(&self.state.dataset)?;
                (infer_weight_for_point(&normalize(&point.y, &bounds), INFER_EPS), false)
            }
        };
        self.state.history.push(InteractionRecord {
            interaction_index: self.state.history.len() + 1,
            front: self.state.front.eval_indices(),
            chosen: eval_index,
            budget_spent: self.state.ledger.spent(),
            preferred_weight: weight.clone(),
        });
        self.state.preferred = Some(Preferred {
            eval_index,
            x: point.x,
            y: point.y,
            weight,
            weight_from_generation: from_generation,
        });
        if self.state.ledger.remaining() == 0 {
            self.finish("budget exhausted");
        } else {
            self.state.phase = Phase::Exploring;
        }
        Ok(())
    }

    /// Runs the configured exploration step. Returns the number of evaluations.
    pub fn explore(&mut self) -> Result<usize> {
        match self.state.config.method {
            Method::Tripe => self.tripe_step(),
            Method::Wape => self.wape_step(),
        }
    }

    fn preferred(&self) -> Result<Preferred> {
        self.state
            .preferred
            .clone()
            .ok_or_else(|| Error::WrongPhase("no preferred point yet".into()))
    }

    fn end_step(&mut self, evaluations: usize) {
        if evaluations == 0 && self.state.ledger.cost_dm == 0 {
            // nothing would ever change again
            self.refresh_front();
            self.finish("exploration step produced no candidates");
            return;
        }
        self.await_preference();
    }

    /// Evaluates the triangulation candidates around the preferred input,
    /// nearest first.
    pub fn tripe_step(&mut self) -> Result<usize> {
        self.expect_phase(Phase::Exploring)?;
        let pref = self.preferred()?;
        let points: Vec<Vec<f64>> = self.state.dataset.inputs().map(|x| x.to_vec()).collect();
        let tri = match delaunay(&points, self.problem.bounds()) {
            Ok(t) => t,
            Err(e) => {
                self.finish(&format!("triangulation failed: {e}"));
                return Err(e);
            }
        };
        let all = candidates(&tri);
        let near = match neighbors_of_preferred(&tri, &all, &pref.x) {
            Ok(n) => n,
            Err(e) => {
                self.finish(&format!("preferred input not in triangulation: {e}"));
                return Err(e);
            }
        };
        let dist = |x: &[f64]| -> f64 { x.iter().zip(&pref.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() };
        let mut queue: Vec<(f64, u8, usize, &Vec<f64>)> = near
            .interior
            .iter()
            .enumerate()
            .map(|(i, x)| (dist(x), 0u8, i, x))
            .chain(near.fringe.iter().enumerate().map(|(i, x)| (dist(x), 1u8, i, x)))
            .collect();
        queue.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut evaluations = 0;
        for (_, _, _, x) in queue {
            if self.state.ledger.remaining() == 0 {
                break;
            }
            let seen = self
                .state
                .dataset
                .inputs()
                .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= SAME_POINT_EPS));
            if seen {
                continue;
            }
            self.evaluate_and_store(x, None)?;
            evaluations += 1;
        }
        self.end_step(evaluations);
        Ok(evaluations)
    }

    /// Runs one weighted round for each of `N` perturbations of the
    /// preferred weight.
    pub fn wape_step(&mut self) -> Result<usize> {
        self.expect_phase(Phase::Exploring)?;
        let pref = self.preferred()?;
        let cfg = &self.state.config;
        let (n, eta, d_out) = (cfg.wape_n, cfg.wape_eta, cfg.d_out);
        let thetas: Vec<Vec<f64>> = (0..n)
            .map(|_| draw_theta(d_out, eta, &mut self.state.rng))
            .collect::<Result<_>>()?;
        let interaction_index = self.state.history.len();
        let mut evaluations = 0;
        for theta in thetas {
            if self.state.ledger.remaining() == 0 {
                break;
            }
            let weight = apply_theta(&pref.weight, &theta);
            let produced = self.weighted_round(&weight)?;
            if produced.is_some() {
                evaluations += 1;
            }
            self.state.weight_draws.push(WeightDraw {
                interaction_index,
                base: pref.weight.clone(),
                theta,
                weight,
                eval_index: produced,
            });
        }
        self.end_step(evaluations);
        Ok(evaluations)
    }

    /// Runs whatever the current phase calls for, asking `dm` when a
    /// preference is needed. Returns false once finished.
    pub fn advance(&mut self, dm: &mut dyn DecisionMaker) -> Result<bool> {
        match self.state.phase {
            Phase::Initializing => self.run_initialization()?,
            Phase::AwaitingPreference => self.solicit_preference(dm)?,
            Phase::Exploring => {
                self.explore()?;
            }
            Phase::Finished => return Ok(false),
        }
        Ok(self.state.phase != Phase::Finished)
    }
}
