//! Gaussian state model.
//!
//! Each state carries a mean and an inverse covariance. The per-measurement
//! score is `-(x - mu)' Theta (x - mu) + log det Theta` (no normalising
//! constant), refits use ridge-shrunk maximum-likelihood covariances, and the
//! non-motif assignment is a Viterbi pass with a constant switching penalty.
//!
//! The shrinkage `(S + lambda I)^-1` is the exact maximiser of the
//! per-measurement objective with penalty `lambda * tr(Theta_k)` charged on
//! every measurement assigned to state `k`; [`regularization`] reports that
//! quantity.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{MasaError, Result};
use crate::timeseries::{Hyperparameters, StateAssignment, TimeSeries};

const INIT_MAX_ROUNDS: usize = 50;
const INIT_SWAP_FRACTION: f64 = 0.10;
/// Fractions of `beta` used for successive warm-up alternations.
pub const INIT_BETA_SCHEDULE: [f64; 7] = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 1.0];

/// The operations MASA needs from a state model. Anything implementing this
/// can drive candidate decoding and non-motif assignment.
pub trait LikelihoodModel: Sync {
    fn k_states(&self) -> usize;

    fn switch_penalty(&self) -> f64;

    /// Score of `x` under `state`; callers guarantee both are valid.
    fn state_log_likelihood(&self, x: &[f64], state: usize) -> f64;

    fn log_likelihood_table(&self, ts: &TimeSeries) -> LogLikTable {
        let k = self.k_states();
        let mut values = vec![0.0; ts.t_len() * k];
        values
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(t, row)| {
                let x = ts.row(t);
                for (s, v) in row.iter_mut().enumerate() {
                    *v = self.state_log_likelihood(x, s);
                }
            });
        LogLikTable { t_len: ts.t_len(), k_states: k, values }
    }
}

/// Precomputed `log P(X_t | s)` for every measurement and state.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikTable {
    t_len: usize,
    k_states: usize,
    values: Vec<f64>,
}

impl LogLikTable {
    pub fn from_values(t_len: usize, k_states: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != t_len * k_states {
            return Err(MasaError::LengthMismatch {
                expected: t_len * k_states,
                found: values.len(),
            });
        }
        Ok(Self { t_len, k_states, values })
    }

    #[inline]
    pub fn get(&self, t: usize, state: usize) -> f64 {
        self.values[t * self.k_states + state]
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.k_states..(t + 1) * self.k_states]
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn k_states(&self) -> usize {
        self.k_states
    }

    pub fn total(&self, labels: &[usize]) -> f64 {
        labels.iter().enumerate().map(|(t, &s)| self.get(t, s)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    inv_cov: DMatrix<f64>,
    log_det: f64,
}

impl GaussianState {
    pub fn from_precision(mean: DVector<f64>, inv_cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if inv_cov.nrows() != n || inv_cov.ncols() != n {
            return Err(MasaError::LengthMismatch {
                expected: n,
                found: inv_cov.nrows(),
            });
        }
        let sym = inv_cov.clone() + inv_cov.transpose();
        let chol = (sym * 0.5)
            .cholesky()
            .ok_or(MasaError::DegenerateCovariance { state: 0 })?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self { mean, inv_cov, log_det })
    }

    pub fn from_covariance(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or(MasaError::DegenerateCovariance { state: 0 })?;
        let mut inv_cov = chol.inverse();
        // symmetrise away rounding noise
        inv_cov = (&inv_cov + inv_cov.transpose()) * 0.5;
        let log_det = -2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(MasaError::DegenerateCovariance { state: 0 });
        }
        Ok(Self { mean, inv_cov, log_det })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn inv_cov(&self) -> &DMatrix<f64> {
        &self.inv_cov
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    #[inline]
    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let n = self.mean.len();
        let mut quad = 0.0;
        for i in 0..n {
            let di = x[i] - self.mean[i];
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.inv_cov[(i, j)] * (x[j] - self.mean[j]);
            }
            quad += di * acc;
        }
        -quad + self.log_det
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateModel {
    states: Vec<GaussianState>,
    beta: f64,
    reg_lambda: f64,
}

impl StateModel {
    pub fn new(states: Vec<GaussianState>, beta: f64, reg_lambda: f64) -> Result<Self> {
        if states.is_empty() {
            return Err(MasaError::InvalidInput("state model needs K >= 1".into()));
        }
        if !(beta >= 0.0) {
            return Err(MasaError::InvalidHyperparameter(format!(
                "beta must be >= 0, got {beta}"
            )));
        }
        Ok(Self { states, beta, reg_lambda })
    }

    pub fn states(&self) -> &[GaussianState] {
        &self.states
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn reg_lambda(&self) -> f64 {
        self.reg_lambda
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn n_dims(&self) -> usize {
        self.states[0].mean.len()
    }

    pub fn log_likelihood(&self, x: &[f64], state: usize) -> Result<f64> {
        if state >= self.states.len() {
            return Err(MasaError::InvalidState {
                state,
                k_states: self.states.len(),
            });
        }
        if x.len() != self.n_dims() {
            return Err(MasaError::LengthMismatch {
                expected: self.n_dims(),
                found: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(MasaError::NonFinite { row: 0, col });
        }
        Ok(self.states[state].log_likelihood(x))
    }
}

impl LikelihoodModel for StateModel {
    fn k_states(&self) -> usize {
        self.states.len()
    }

    fn switch_penalty(&self) -> f64 {
        self.beta
    }

    #[inline]
    fn state_log_likelihood(&self, x: &[f64], state: usize) -> f64 {
        self.states[state].log_likelihood(x)
    }
}

/// Refits every state from the measurements assigned to it.
///
/// States with no measurements are reseeded from the single measurement that
/// scores worst under its best already-fitted state.
pub fn update_states_model(
    ts: &TimeSeries,
    assignment: &StateAssignment,
    beta: f64,
    reg_lambda: f64,
) -> Result<StateModel> {
    if assignment.len() != ts.t_len() {
        return Err(MasaError::LengthMismatch {
            expected: ts.t_len(),
            found: assignment.len(),
        });
    }
    let k = assignment.k_states();
    let n = ts.n_dims();
    let mut counts = vec![0usize; k];
    let mut sums = vec![DVector::<f64>::zeros(n); k];
    for (x, &s) in ts.rows().zip(assignment.labels()) {
        counts[s] += 1;
        sums[s] += DVector::from_column_slice(x);
    }
    let means: Vec<DVector<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { s.clone() })
        .collect();
    let mut scatter = vec![DMatrix::<f64>::zeros(n, n); k];
    for (x, &s) in ts.rows().zip(assignment.labels()) {
        let d = DVector::from_column_slice(x) - &means[s];
        scatter[s].ger(1.0, &d, &d, 1.0);
    }

    let ridge = DMatrix::<f64>::identity(n, n) * reg_lambda;
    let mut fitted: Vec<Option<GaussianState>> = Vec::with_capacity(k);
    for s in 0..k {
        if counts[s] == 0 {
            fitted.push(None);
            continue;
        }
        let cov = &scatter[s] / counts[s] as f64 + &ridge;
        let state = GaussianState::from_covariance(means[s].clone(), &cov)
            .map_err(|_| MasaError::DegenerateCovariance { state: s })?;
        fitted.push(Some(state));
    }

    let empty: Vec<usize> = (0..k).filter(|&s| counts[s] == 0).collect();
    if !empty.is_empty() {
        let worst = worst_fit_measurements(ts, &fitted, empty.len());
        for (&s, t) in empty.iter().zip(worst) {
            let state = GaussianState::from_covariance(DVector::from_column_slice(ts.row(t)), &ridge)
                .map_err(|_| MasaError::DegenerateCovariance { state: s })?;
            fitted[s] = Some(state);
        }
    }

    let states = fitted
        .into_iter()
        .enumerate()
        .map(|(s, st)| st.ok_or(MasaError::DegenerateCovariance { state: s }))
        .collect::<Result<Vec<_>>>()?;
    StateModel::new(states, beta, reg_lambda)
}

/// Indices of the `count` measurements with the lowest best-state score,
/// worst first, ties by index.
fn worst_fit_measurements(
    ts: &TimeSeries,
    fitted: &[Option<GaussianState>],
    count: usize,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = ts
        .rows()
        .enumerate()
        .map(|(t, x)| {
            let best = fitted
                .iter()
                .flatten()
                .map(|g| g.log_likelihood(x))
                .fold(f64::NEG_INFINITY, f64::max);
            (best, t)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(count).map(|(_, t)| t).collect()
}

/// Viterbi decode of `sum log P(X_t | S_t) - beta * #switches`.
///
/// Ties prefer staying in the same state, then the lower state id.
pub fn viterbi_labels(table: &LogLikTable, beta: f64) -> Vec<usize> {
    let t_len = table.t_len();
    let k = table.k_states();
    if t_len == 0 {
        return Vec::new();
    }
    let mut score: Vec<f64> = table.row(0).to_vec();
    let mut next = vec![0.0; k];
    let mut back = vec![0u32; t_len * k];
    for t in 1..t_len {
        let (best_prev, best_val) = argmax(&score);
        let switch_val = best_val - beta;
        let emit = table.row(t);
        let bp = &mut back[t * k..(t + 1) * k];
        for s in 0..k {
            let (from, val) = if score[s] >= switch_val {
                (s, score[s])
            } else {
                (best_prev, switch_val)
            };
            bp[s] = from as u32;
            next[s] = val + emit[s];
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut labels = vec![0usize; t_len];
    let (mut s, _) = argmax(&score);
    for t in (0..t_len).rev() {
        labels[t] = s;
        if t > 0 {
            s = back[t * k + s] as usize;
        }
    }
    labels
}

#[inline]
fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

pub fn propose_assignment<M: LikelihoodModel>(model: &M, ts: &TimeSeries) -> StateAssignment {
    let table = model.log_likelihood_table(ts);
    propose_from_table(&table, model.switch_penalty())
}

pub fn propose_from_table(table: &LogLikTable, beta: f64) -> StateAssignment {
    StateAssignment::from_parts_unchecked(viterbi_labels(table, beta), table.k_states())
}

/// `sum log P(X_t | S_t) - beta * #switches`.
pub fn nonmotif_objective(table: &LogLikTable, labels: &[usize], beta: f64) -> f64 {
    let switches = labels.windows(2).filter(|w| w[0] != w[1]).count();
    table.total(labels) - beta * switches as f64
}

/// Ridge penalty `lambda * sum_t tr(Theta_{S_t})`.
pub fn regularization(model: &StateModel, assignment: &StateAssignment) -> f64 {
    let traces: Vec<f64> = model.states.iter().map(|g| g.inv_cov.trace()).collect();
    model.reg_lambda * assignment.labels().iter().map(|&s| traces[s]).sum::<f64>()
}

/// Seeded starting point: contiguous blocks of `ceil(T/K)` measurements take
/// states round-robin, 10% of labels are shuffled by pairwise swaps, then
/// refit and re-proposal alternate until a fixed point (at most 50 rounds).
/// The alternation is repeated with the switching penalty ramped up through
/// [`INIT_BETA_SCHEDULE`]; at the full penalty the block start is already a
/// fixed point.
pub fn initialize(ts: &TimeSeries, hp: &Hyperparameters) -> Result<(StateModel, StateAssignment)> {
    let t_len = ts.t_len();
    let k = hp.k_states;
    if t_len < k {
        return Err(MasaError::InvalidInput(format!(
            "need at least K={k} measurements, got {t_len}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let block = t_len.div_ceil(k);
    let mut labels: Vec<usize> = (0..t_len).map(|t| (t / block) % k).collect();
    let n_swaps = ((t_len as f64 * INIT_SWAP_FRACTION) / 2.0).round() as usize;
    for _ in 0..n_swaps {
        let a = rng.random_range(0..t_len);
        let b = rng.random_range(0..t_len);
        labels.swap(a, b);
    }

    let mut assignment = StateAssignment::from_parts_unchecked(labels, k);
    let mut model = None;
    for f in INIT_BETA_SCHEDULE {
        let (m, a) = alternate(ts, assignment, hp.beta * f, hp.reg_lambda)?;
        assignment = a;
        model = Some(m);
    }
    let model = model.expect("schedule is non-empty");
    Ok((model.with_beta(hp.beta), assignment))
}

/// Refit / re-propose until the assignment stops changing.
fn alternate(
    ts: &TimeSeries,
    mut assignment: StateAssignment,
    beta: f64,
    reg_lambda: f64,
) -> Result<(StateModel, StateAssignment)> {
    let mut model = update_states_model(ts, &assignment, beta, reg_lambda)?;
    for _ in 0..INIT_MAX_ROUNDS {
        let proposed = propose_assignment(&model, ts);
        if proposed == assignment {
            break;
        }
        assignment = proposed;
        model = update_states_model(ts, &assignment, beta, reg_lambda)?;
    }
    Ok((model, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn state(mean: &[f64], prec: DMatrix<f64>) -> GaussianState {
        GaussianState::from_precision(DVector::from_column_slice(mean), prec).unwrap()
    }

    fn random_model(rng: &mut ChaCha8Rng, k: usize, n: usize, beta: f64) -> StateModel {
        let states = (0..k)
            .map(|_| {
                let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let prec = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
                let mean: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                state(&mean, prec)
            })
            .collect();
        StateModel::new(states, beta, 0.0).unwrap()
    }

    fn random_series(rng: &mut ChaCha8Rng, t: usize, n: usize) -> TimeSeries {
        let data = (0..t * n).map(|_| rng.random_range(-3.0..3.0)).collect();
        TimeSeries::new(data, t, n).unwrap()
    }

    #[test]
    fn log_likelihood_examples() {
        let m = StateModel::new(vec![state(&[0.0, 0.0], DMatrix::identity(2, 2))], 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(m.log_likelihood(&[0.0, 0.0], 0).unwrap(), 0.0, epsilon = 1e-12);

        let m = StateModel::new(vec![state(&[0.0], DMatrix::from_element(1, 1, 2.0))], 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(m.log_likelihood(&[1.0], 0).unwrap(), -2.0 + 2f64.ln(), epsilon = 1e-12);

        let m = StateModel::new(vec![state(&[1.0, 1.0], DMatrix::identity(2, 2))], 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(m.log_likelihood(&[1.0, 1.0], 0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn log_likelihood_rejects_bad_input() {
        let m = StateModel::new(vec![state(&[0.0], DMatrix::identity(1, 1))], 0.0, 0.0).unwrap();
        assert!(matches!(m.log_likelihood(&[0.0], 1), Err(MasaError::InvalidState { .. })));
        assert!(matches!(m.log_likelihood(&[f64::INFINITY], 0), Err(MasaError::NonFinite { .. })));
    }

    #[test]
    fn log_det_matches_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_model(&mut rng, 3, 4, 0.0);
        for g in m.states() {
            assert_abs_diff_eq!(g.log_det(), g.inv_cov().determinant().ln(), epsilon = 1e-6);
        }
    }

    #[test]
    fn refit_square_corners() {
        let ts = TimeSeries::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]]).unwrap();
        let a = StateAssignment::new(vec![0; 4], 1).unwrap();
        let m = update_states_model(&ts, &a, 0.0, 0.0).unwrap();
        let g = &m.states()[0];
        assert_abs_diff_eq!(g.mean()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.mean()[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.inv_cov().clone(), DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn refit_single_point_per_state() {
        let ts = TimeSeries::from_rows(&[vec![3.0, -1.0], vec![0.5, 4.0]]).unwrap();
        let a = StateAssignment::new(vec![0, 1], 2).unwrap();
        let m = update_states_model(&ts, &a, 0.0, 1.0).unwrap();
        for (t, g) in m.states().iter().enumerate() {
            assert_eq!(g.mean().as_slice(), ts.row(t));
            assert_abs_diff_eq!(g.inv_cov().clone(), DMatrix::identity(2, 2), epsilon = 1e-12);
            assert_abs_diff_eq!(g.log_det(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn refit_degenerate_without_ridge() {
        let ts = TimeSeries::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        let a = StateAssignment::new(vec![0, 0], 1).unwrap();
        assert!(matches!(
            update_states_model(&ts, &a, 0.0, 0.0),
            Err(MasaError::DegenerateCovariance { state: 0 })
        ));
    }

    #[test]
    fn empty_state_reseeded_from_worst_measurement() {
        let rows = vec![vec![0.0], vec![0.1], vec![-0.1], vec![0.05], vec![9.0]];
        let ts = TimeSeries::from_rows(&rows).unwrap();
        let a = StateAssignment::new(vec![0; 5], 2).unwrap();
        let m = update_states_model(&ts, &a, 0.0, 0.5).unwrap();
        assert_eq!(m.states()[1].mean()[0], 9.0);
    }

    #[test]
    fn refit_beats_perturbed_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ts = random_series(&mut rng, 120, 3);
        let labels: Vec<usize> = (0..120).map(|_| rng.random_range(0..3)).collect();
        let a = StateAssignment::new(labels, 3).unwrap();
        let lambda = 0.1;
        let m = update_states_model(&ts, &a, 0.0, lambda).unwrap();
        let objective = |m: &StateModel| m.log_likelihood_table(&ts).total(a.labels()) - regularization(m, &a);
        let best = objective(&m);
        for _ in 0..50 {
            let states = m
                .states()
                .iter()
                .map(|g| {
                    let shift = DVector::from_fn(3, |_, _| rng.random_range(-0.2..0.2));
                    GaussianState::from_precision(g.mean() + shift, g.inv_cov().clone()).unwrap()
                })
                .collect();
            let perturbed = StateModel::new(states, 0.0, lambda).unwrap();
            assert!(objective(&perturbed) <= best);
        }
    }

    #[test]
    fn beta_zero_is_pointwise_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_model(&mut rng, 4, 2, 0.0);
        let ts = random_series(&mut rng, 50, 2);
        let table = m.log_likelihood_table(&ts);
        let labels = propose_assignment(&m, &ts);
        for t in 0..50 {
            assert_eq!(labels.labels()[t], argmax(table.row(t)).0);
        }
    }

    #[test]
    fn single_state_labels_all_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_model(&mut rng, 1, 2, 3.0);
        let ts = random_series(&mut rng, 30, 2);
        assert!(propose_assignment(&m, &ts).labels().iter().all(|&l| l == 0));
    }

    /// Exhaustive maximiser over all K^T label sequences.
    fn brute_force_best(table: &LogLikTable, beta: f64) -> f64 {
        let (t_len, k) = (table.t_len(), table.k_states());
        let mut labels = vec![0usize; t_len];
        let mut best = f64::NEG_INFINITY;
        loop {
            best = best.max(nonmotif_objective(table, &labels, beta));
            let mut i = 0;
            loop {
                if i == t_len {
                    return best;
                }
                labels[i] += 1;
                if labels[i] < k {
                    break;
                }
                labels[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn viterbi_matches_enumeration_t6_k2() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let m = random_model(&mut rng, 2, 2, 1.0);
            let ts = random_series(&mut rng, 6, 2);
            let table = m.log_likelihood_table(&ts);
            let labels = viterbi_labels(&table, 1.0);
            assert_eq!(nonmotif_objective(&table, &labels, 1.0), brute_force_best(&table, 1.0));
        }
    }

    #[test]
    fn viterbi_stays_in_state_on_ties() {
        // paths 00, 11 and 10 all score 1
        let table = LogLikTable::from_values(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(viterbi_labels(&table, 1.0), vec![0, 0]);
        let table = LogLikTable::from_values(2, 2, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(viterbi_labels(&table, 1.0), vec![0, 0]);
    }

    #[test]
    fn no_underflow_in_log_space() {
        let values: Vec<f64> = (0..200).flat_map(|t| [-700.0 + (t % 3) as f64, -699.0]).collect();
        let table = LogLikTable::from_values(200, 2, values).unwrap();
        let labels = viterbi_labels(&table, 5.0);
        assert!(nonmotif_objective(&table, &labels, 5.0).is_finite());
        assert!(labels.iter().all(|&l| l == 1));
    }

    fn two_blobs(seed: u64) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for t in 0..200 {
            let centre = if t < 100 { -5.0 } else { 5.0 };
            let z: f64 = StandardNormal.sample(&mut rng);
            let w: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![centre + z, centre + w]);
        }
        TimeSeries::from_rows(&rows).unwrap()
    }

    #[test]
    fn initialize_separates_blobs() {
        let ts = two_blobs(1);
        let hp = Hyperparameters { k_states: 2, beta: 2.0, reg_lambda: 0.01, ..Default::default() };
        let (_, a) = initialize(&ts, &hp).unwrap();
        let first = a.labels()[0];
        assert!(a.labels()[..100].iter().all(|&l| l == first));
        assert!(a.labels()[100..].iter().all(|&l| l != first));
    }

    #[test]
    fn initialize_single_state_and_determinism() {
        let ts = two_blobs(2);
        let hp = Hyperparameters { k_states: 1, ..Default::default() };
        let (_, a) = initialize(&ts, &hp).unwrap();
        assert!(a.labels().iter().all(|&l| l == 0));

        let hp = Hyperparameters { k_states: 3, beta: 1.0, seed: 9, ..Default::default() };
        let (m1, a1) = initialize(&ts, &hp).unwrap();
        let (m2, a2) = initialize(&ts, &hp).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn initialize_requires_enough_points() {
        let ts = TimeSeries::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let hp = Hyperparameters { k_states: 3, ..Default::default() };
        assert!(initialize(&ts, &hp).is_err());
    }

    #[test]
    fn alternation_steps_are_monotone() {
        let ts = two_blobs(4);
        let beta = 2.0;
        let lambda = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let labels: Vec<usize> = (0..ts.t_len()).map(|_| rng.random_range(0..3)).collect();
        let mut a = StateAssignment::new(labels, 3).unwrap();
        let mut m = update_states_model(&ts, &a, beta, lambda).unwrap();
        for _ in 0..10 {
            let table = m.log_likelihood_table(&ts);
            let before = nonmotif_objective(&table, a.labels(), beta);
            let proposed = propose_from_table(&table, beta);
            assert!(nonmotif_objective(&table, proposed.labels(), beta) >= before - 1e-9);

            let fit_before = table.total(proposed.labels()) - regularization(&m, &proposed);
            let refit = update_states_model(&ts, &proposed, beta, lambda).unwrap();
            let fit_after = refit.log_likelihood_table(&ts).total(proposed.labels()) - regularization(&refit, &proposed);
            assert!(fit_after >= fit_before - 1e-9);
            a = proposed;
            m = refit;
        }
    }

    proptest! {
        #[test]
        fn viterbi_is_optimal(seed in any::<u64>(), t in 1usize..=8, k in 1usize..=3, beta in 0.0f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_model(&mut rng, k, 2, beta);
            let ts = random_series(&mut rng, t, 2);
            let table = m.log_likelihood_table(&ts);
            let labels = viterbi_labels(&table, beta);
            prop_assert_eq!(nonmotif_objective(&table, &labels, beta), brute_force_best(&table, beta));
        }

        #[test]
        fn log_likelihood_permutation_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 4;
            let m = random_model(&mut rng, 1, n, 0.0);
            let g = &m.states()[0];
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            let pmean = DVector::from_fn(n, |i, _| g.mean()[perm[i]]);
            let pprec = DMatrix::from_fn(n, n, |i, j| g.inv_cov()[(perm[i], perm[j])]);
            let pg = GaussianState::from_precision(pmean, pprec).unwrap();
            prop_assert!((g.log_likelihood(&x) - pg.log_likelihood(&px)).abs() < 1e-9);
        }
    }
}
