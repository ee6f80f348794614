//! Core value types shared by every stage of the pipeline: the measurement
//! matrix, per-measurement state labels, their run-length collapsed form, and
//! motifs with their concrete instances.
//!
//! Measurement indices are 0-based and intervals are half-open everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{MasaError, Result};

/// A `T x N` matrix of finite measurements, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: Vec<f64>,
    t_len: usize,
    n_dims: usize,
    column_names: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(data: Vec<f64>, t_len: usize, n_dims: usize) -> Result<Self> {
        if t_len == 0 || n_dims == 0 {
            return Err(MasaError::InvalidInput(format!(
                "time series must have T >= 1 and N >= 1 (got T={t_len}, N={n_dims})"
            )));
        }
        if data.len() != t_len * n_dims {
            return Err(MasaError::LengthMismatch {
                expected: t_len * n_dims,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MasaError::NonFinite {
                row: pos / n_dims,
                col: pos % n_dims,
            });
        }
        Ok(Self {
            data,
            t_len,
            n_dims,
            column_names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_dims);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_dims {
                return Err(MasaError::InvalidInput(format!(
                    "row {t} has {} columns, expected {n_dims}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(data, rows.len(), n_dims)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_dims {
            return Err(MasaError::LengthMismatch {
                expected: self.n_dims,
                found: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_dims..(t + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_dims)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Z-scores every column in place. Constant columns become all zeros.
    pub fn standardize(&mut self) {
        let t = self.t_len as f64;
        for c in 0..self.n_dims {
            let mean = (0..self.t_len).map(|r| self.data[r * self.n_dims + c]).sum::<f64>() / t;
            let var = (0..self.t_len)
                .map(|r| (self.data[r * self.n_dims + c] - mean).powi(2))
                .sum::<f64>()
                / t;
            let sd = var.sqrt();
            for r in 0..self.t_len {
                let v = &mut self.data[r * self.n_dims + c];
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }
}

/// One state id in `[0, K)` per measurement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateAssignment {
    labels: Vec<usize>,
    k_states: usize,
}

impl StateAssignment {
    pub fn new(labels: Vec<usize>, k_states: usize) -> Result<Self> {
        if k_states == 0 {
            return Err(MasaError::InvalidInput("K must be at least 1".into()));
        }
        if let Some(&state) = labels.iter().find(|&&l| l >= k_states) {
            return Err(MasaError::InvalidState { state, k_states });
        }
        Ok(Self { labels, k_states })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn k_states(&self) -> usize {
        self.k_states
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn switch_count(&self) -> usize {
        self.labels.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<usize>, k_states: usize) -> Self {
        debug_assert!(labels.iter().all(|&l| l < k_states));
        Self { labels, k_states }
    }
}

/// Run-length encoding of a [`StateAssignment`]; the symbol stream motifs are
/// mined from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollapsedSequence {
    symbols: Vec<usize>,
    run_starts: Vec<usize>,
    run_lengths: Vec<usize>,
    k_states: usize,
}

impl CollapsedSequence {
    pub fn new(symbols: Vec<usize>, run_lengths: Vec<usize>, k_states: usize) -> Result<Self> {
        if symbols.len() != run_lengths.len() {
            return Err(MasaError::LengthMismatch {
                expected: symbols.len(),
                found: run_lengths.len(),
            });
        }
        if run_lengths.iter().any(|&l| l == 0) {
            return Err(MasaError::InvalidInput("run lengths must be positive".into()));
        }
        if symbols.windows(2).any(|w| w[0] == w[1]) {
            return Err(MasaError::InvalidInput(
                "collapsed sequence has equal adjacent symbols".into(),
            ));
        }
        if let Some(&state) = symbols.iter().find(|&&s| s >= k_states) {
            return Err(MasaError::InvalidState { state, k_states });
        }
        let run_starts = run_lengths
            .iter()
            .scan(0usize, |acc, &l| {
                let start = *acc;
                *acc += l;
                Some(start)
            })
            .collect();
        Ok(Self {
            symbols,
            run_starts,
            run_lengths,
            k_states,
        })
    }

    /// Builds a bare symbol stream (every run of length 1), mainly for
    /// candidate mining on hand-made sequences.
    pub fn from_symbols(symbols: Vec<usize>, k_states: usize) -> Result<Self> {
        let lens = vec![1; symbols.len()];
        Self::new(symbols, lens, k_states)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn run_starts(&self) -> &[usize] {
        &self.run_starts
    }

    pub fn run_lengths(&self) -> &[usize] {
        &self.run_lengths
    }

    pub fn k_states(&self) -> usize {
        self.k_states
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

pub fn collapse(assignment: &StateAssignment) -> CollapsedSequence {
    let mut symbols = Vec::new();
    let mut run_starts = Vec::new();
    let mut run_lengths: Vec<usize> = Vec::new();
    for (t, &label) in assignment.labels().iter().enumerate() {
        match symbols.last() {
            Some(&prev) if prev == label => *run_lengths.last_mut().unwrap() += 1,
            _ => {
                symbols.push(label);
                run_starts.push(t);
                run_lengths.push(1);
            }
        }
    }
    CollapsedSequence {
        symbols,
        run_starts,
        run_lengths,
        k_states: assignment.k_states(),
    }
}

pub fn expand(collapsed: &CollapsedSequence) -> Result<StateAssignment> {
    if collapsed.run_lengths.iter().any(|&l| l == 0) {
        return Err(MasaError::InvalidInput("run lengths must be positive".into()));
    }
    let labels = collapsed
        .symbols
        .iter()
        .zip(&collapsed.run_lengths)
        .flat_map(|(&s, &l)| std::iter::repeat_n(s, l))
        .collect();
    StateAssignment::new(labels, collapsed.k_states)
}

/// An ordered state sequence of length at least 3 with no two adjacent ids
/// equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Motif(Vec<usize>);

pub const MIN_MOTIF_LEN: usize = 3;

impl Motif {
    pub fn new(states: Vec<usize>) -> Result<Self> {
        if states.len() < MIN_MOTIF_LEN {
            return Err(MasaError::InvalidInput(format!(
                "motif needs at least {MIN_MOTIF_LEN} states, got {}",
                states.len()
            )));
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(MasaError::InvalidInput(
                "motif has equal adjacent states".into(),
            ));
        }
        Ok(Self(states))
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Measurement-level labels for the given per-state durations.
    pub fn expand_durations(&self, durations: &[usize]) -> Vec<usize> {
        self.0
            .iter()
            .zip(durations)
            .flat_map(|(&s, &d)| std::iter::repeat_n(s, d))
            .collect()
    }

    pub fn letters(&self) -> String {
        self.0.iter().map(|&s| state_letter(s)).collect::<Vec<_>>().join("")
    }
}

impl TryFrom<Vec<usize>> for Motif {
    type Error = MasaError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Motif::new(v)
    }
}

impl From<Motif> for Vec<usize> {
    fn from(m: Motif) -> Self {
        m.0
    }
}

/// Presentation mapping: 0 -> "A", 25 -> "Z", 26 -> "S26".
pub fn state_letter(state: usize) -> String {
    if state < 26 {
        char::from(b'A' + state as u8).to_string()
    } else {
        format!("S{state}")
    }
}

/// One occurrence of a motif over `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifInstance {
    pub motif: Motif,
    pub start: usize,
    pub end: usize,
    pub durations: Vec<usize>,
    pub score: f64,
}

impl MotifInstance {
    pub fn new(motif: Motif, start: usize, durations: Vec<usize>) -> Result<Self> {
        if durations.len() != motif.len() {
            return Err(MasaError::LengthMismatch {
                expected: motif.len(),
                found: durations.len(),
            });
        }
        if durations.iter().any(|&d| d == 0) {
            return Err(MasaError::InvalidInput(
                "every motif state needs a positive duration".into(),
            ));
        }
        let end = start + durations.iter().sum::<usize>();
        Ok(Self {
            motif,
            start,
            end,
            durations,
            score: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn labels(&self) -> Vec<usize> {
        self.motif.expand_durations(&self.durations)
    }

    pub fn overlaps(&self, other: &MotifInstance) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A complete motif together with its locked instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifEntry {
    /// Position of the motif in the candidate list it came from.
    pub motif_id: usize,
    pub motif: Motif,
    /// G-score of the motif.
    pub motif_score: f64,
    pub instances: Vec<MotifInstance>,
    /// Per-instance likelihood-ratio scores, parallel to `instances`.
    pub instance_scores: Vec<f64>,
}

impl MotifEntry {
    pub fn score(&self) -> f64 {
        self.motif_score + self.instance_scores.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MotifSet {
    pub entries: Vec<MotifEntry>,
    pub total_score: f64,
}

impl MotifSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn instance_count(&self) -> usize {
        self.entries.iter().map(|e| e.instances.len()).sum()
    }

    pub fn contains_motif(&self, states: &[usize]) -> bool {
        self.entries.iter().any(|e| e.motif.states() == states)
    }

    /// True when no measurement index is covered twice across all entries.
    pub fn is_non_overlapping(&self) -> bool {
        let mut spans: Vec<(usize, usize)> = self
            .entries
            .iter()
            .flat_map(|e| e.instances.iter().map(|q| (q.start, q.end)))
            .collect();
        spans.sort_unstable();
        spans.windows(2).all(|w| w[0].1 <= w[1].0)
    }
}

/// Order in which candidate patterns are evaluated against the null model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthSort {
    #[default]
    Increasing,
    Decreasing,
}

impl std::str::FromStr for LengthSort {
    type Err = MasaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increasing" => Ok(LengthSort::Increasing),
            "decreasing" => Ok(LengthSort::Decreasing),
            other => Err(MasaError::InvalidHyperparameter(format!(
                "length sort must be 'increasing' or 'decreasing', got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Number of states K.
    pub k_states: usize,
    /// Switching penalty.
    pub beta: f64,
    /// Non-motif discount in (0, 1]; lower values force motifs harder.
    pub gamma: f64,
    /// Minimum instances per motif (L).
    pub min_instances: usize,
    /// Significance threshold before Bonferroni correction.
    pub alpha: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Ridge added to every empirical covariance before inversion.
    pub reg_lambda: f64,
    /// Keep at most this many candidates (lowest p-value first).
    pub candidate_cap: Option<usize>,
    pub length_sort: LengthSort,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            k_states: 10,
            beta: 25.0,
            gamma: 0.8,
            min_instances: 10,
            alpha: 0.001,
            max_iters: 20,
            seed: 0,
            reg_lambda: 0.01,
            candidate_cap: Some(25),
            length_sort: LengthSort::Increasing,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MasaError::InvalidHyperparameter(msg));
        if self.k_states == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.min_instances < 2 {
            return bad(format!("L must be at least 2, got {}", self.min_instances));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.reg_lambda >= 0.0 && self.reg_lambda.is_finite()) {
            return bad(format!("reg_lambda must be >= 0, got {}", self.reg_lambda));
        }
        if self.candidate_cap == Some(0) {
            return bad("candidate cap must be positive".into());
        }
        Ok(())
    }
}
