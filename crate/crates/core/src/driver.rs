//! The outer loop: propose, mine candidates, decode and allocate motif
//! instances, refit, repeat until the proposal reproduces the assignment.

use std::collections::HashSet;

use serde::Serialize;

use crate::candidates::{generate_candidates, NullModel};
use crate::error::Result;
use crate::motif_hmm::decode_all;
use crate::scoring::{greedy_assign, motif_score, score_instances};
use crate::state_model::{
    initialize, propose_assignment, propose_from_table, regularization, update_states_model, LikelihoodModel,
    LogLikTable, StateModel,
};
use crate::timeseries::{collapse, Hyperparameters, Motif, MotifSet, StateAssignment, TimeSeries};

/// Objective components and counts recorded after each iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub n_candidates: usize,
    pub n_instances_decoded: usize,
    pub n_instances_locked: usize,
    pub n_motifs: usize,
    /// Labels changed by motif allocation relative to the plain proposal.
    pub n_reassigned: usize,
    /// `sum_t log P(X_t | S_t)` under the refit model.
    pub log_likelihood: f64,
    /// `beta * #switches`.
    pub switch_penalty: f64,
    /// `log gamma * #(measurements outside motif instances)`.
    pub non_motif_term: f64,
    pub motif_score: f64,
    pub regularization: f64,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct MasaResult {
    pub assignment: StateAssignment,
    pub motifs: MotifSet,
    pub model: StateModel,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationDiagnostics>,
}

/// True when re-proposing under `model` reproduces `e_step_assignment`.
pub fn check_convergence<M: LikelihoodModel>(model: &M, ts: &TimeSeries, e_step_assignment: &StateAssignment) -> bool {
    propose_assignment(model, ts) == *e_step_assignment
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Converged,
    /// An assignment seen in an earlier iteration came back.
    Cycled,
}

/// Stepwise form of [`run_masa`], useful for timing single iterations.
pub struct MasaRunner<'a> {
    ts: &'a TimeSeries,
    hp: Hyperparameters,
    model: StateModel,
    assignment: StateAssignment,
    motifs: MotifSet,
    /// Likelihood table of `model`, reused by the next iteration.
    table: LogLikTable,
    seen: HashSet<Vec<usize>>,
    history: Vec<IterationDiagnostics>,
    converged: bool,
}

impl<'a> MasaRunner<'a> {
    pub fn new(ts: &'a TimeSeries, hp: &Hyperparameters) -> Result<Self> {
        hp.validate()?;
        let (model, assignment) = initialize(ts, hp)?;
        Ok(Self::from_parts(ts, hp, model, assignment))
    }

    /// Starts from a given assignment instead of the seeded initialisation.
    pub fn from_assignment(ts: &'a TimeSeries, hp: &Hyperparameters, assignment: StateAssignment) -> Result<Self> {
        hp.validate()?;
        if assignment.len() != ts.t_len() || assignment.k_states() != hp.k_states {
            return Err(crate::error::MasaError::LengthMismatch {
                expected: ts.t_len(),
                found: assignment.len(),
            });
        }
        let model = update_states_model(ts, &assignment, hp.beta, hp.reg_lambda)?;
        Ok(Self::from_parts(ts, hp, model, assignment))
    }

    fn from_parts(ts: &'a TimeSeries, hp: &Hyperparameters, model: StateModel, assignment: StateAssignment) -> Self {
        let table = model.log_likelihood_table(ts);
        Self {
            ts,
            hp: hp.clone(),
            model,
            assignment,
            motifs: MotifSet::default(),
            table,
            seen: HashSet::new(),
            history: Vec::new(),
            converged: false,
        }
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn model(&self) -> &StateModel {
        &self.model
    }

    pub fn assignment(&self) -> &StateAssignment {
        &self.assignment
    }

    pub fn history(&self) -> &[IterationDiagnostics] {
        &self.history
    }

    /// One E-step (candidates, decoding, allocation) and one M-step.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let hp = &self.hp;
        let base = propose_from_table(&self.table, hp.beta);
        let s_prime = collapse(&base);
        let candidates = generate_candidates(&s_prime, hp);
        let null = NullModel::from_collapsed(&s_prime);
        let motifs: Vec<Motif> = candidates.iter().map(|c| c.motif.clone()).collect();
        let decoded = decode_all(&motifs, &self.model, &base, hp.gamma, &self.table)?;

        let mut scored = Vec::new();
        let mut n_decoded = 0;
        for (id, (cand, instances)) in candidates.iter().zip(decoded).enumerate() {
            n_decoded += instances.len();
            if instances.is_empty() {
                continue;
            }
            let upsilon = motif_score(cand.nonoverlap_count, null.expected_count(cand.motif.states()))?;
            scored.extend(score_instances(id, upsilon, instances, &self.table, &base));
        }
        let (e_step, motif_set) = greedy_assign(scored, &base, hp.min_instances);

        let model = update_states_model(self.ts, &e_step, hp.beta, hp.reg_lambda)?;
        let table = model.log_likelihood_table(self.ts);
        let converged = propose_from_table(&table, hp.beta) == e_step;
        let cycled = !converged && !self.seen.insert(e_step.labels().to_vec());

        let covered = motif_set
            .entries
            .iter()
            .flat_map(|e| &e.instances)
            .map(|q| q.len())
            .sum::<usize>();
        let log_likelihood = table.total(e_step.labels());
        let switch_penalty = hp.beta * e_step.switch_count() as f64;
        let non_motif_term = hp.gamma.ln() * (e_step.len() - covered) as f64;
        let reg = regularization(&model, &e_step);
        self.history.push(IterationDiagnostics {
            iteration: self.history.len() + 1,
            n_candidates: candidates.len(),
            n_instances_decoded: n_decoded,
            n_instances_locked: motif_set.instance_count(),
            n_motifs: motif_set.len(),
            n_reassigned: base.labels().iter().zip(e_step.labels()).filter(|(a, b)| a != b).count(),
            log_likelihood,
            switch_penalty,
            non_motif_term,
            motif_score: motif_set.total_score,
            regularization: reg,
            objective: log_likelihood - switch_penalty + non_motif_term + motif_set.total_score - reg,
            converged,
        });

        self.model = model;
        self.table = table;
        self.assignment = e_step;
        self.motifs = motif_set;
        self.converged = converged;
        Ok(if converged {
            StepOutcome::Converged
        } else if cycled {
            StepOutcome::Cycled
        } else {
            StepOutcome::Continue
        })
    }

    pub fn run(mut self) -> Result<MasaResult> {
        while self.iterations() < self.hp.max_iters {
            if self.step()? != StepOutcome::Continue {
                break;
            }
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> MasaResult {
        MasaResult {
            iterations: self.history.len(),
            assignment: self.assignment,
            motifs: self.motifs,
            model: self.model,
            converged: self.converged,
            history: self.history,
        }
    }
}

pub fn run_masa(ts: &TimeSeries, hp: &Hyperparameters) -> Result<MasaResult> {
    MasaRunner::new(ts, hp)?.run()
}

/// The comparison baseline: initialisation followed by one plain proposal,
/// no motif information.
pub fn baseline_assignment(ts: &TimeSeries, hp: &Hyperparameters) -> Result<StateAssignment> {
    hp.validate()?;
    let (model, _) = initialize(ts, hp)?;
    Ok(propose_assignment(&model, ts))
}
