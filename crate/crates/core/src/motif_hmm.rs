//! Per-motif chain HMM used to find noisy motif instances.
//!
//! Hidden state `z_0` means "not in this motif" and re-emits the base
//! assignment discounted by `ln gamma`; `z_1..z_r` walk the motif states in
//! order. Transition costs:
//!
//! ```text
//! z_0 -> z_0   beta if the base assignment switches at t, else 0
//! z_0 -> z_1   beta
//! z_j -> z_j   0
//! z_j -> z_j+1 beta
//! z_r -> z_0   beta
//! z_r -> z_1   beta
//! ```
//!
//! Paths start in `z_0` or `z_1` and end in `z_0` or `z_r`.

use rayon::prelude::*;

use crate::error::{MasaError, Result};
use crate::state_model::{LikelihoodModel, LogLikTable};
use crate::timeseries::{Motif, MotifInstance, StateAssignment, TimeSeries};

pub const NON_MOTIF: usize = 0;

#[derive(Debug, Clone)]
pub struct MotifHmm<'a> {
    motif: Motif,
    base: &'a [usize],
    beta: f64,
    log_gamma: f64,
}

pub fn build_motif_hmm<'a, M: LikelihoodModel>(
    motif: &Motif,
    model: &M,
    base: &'a StateAssignment,
    gamma: f64,
) -> Result<MotifHmm<'a>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(MasaError::InvalidHyperparameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if let Some(&state) = motif.states().iter().find(|&&s| s >= model.k_states()) {
        return Err(MasaError::InvalidState {
            state,
            k_states: model.k_states(),
        });
    }
    Ok(MotifHmm {
        motif: motif.clone(),
        base: base.labels(),
        beta: model.switch_penalty(),
        log_gamma: gamma.ln(),
    })
}

impl MotifHmm<'_> {
    pub fn motif(&self) -> &Motif {
        &self.motif
    }

    /// `|motif| + 1`.
    pub fn n_hidden(&self) -> usize {
        self.motif.len() + 1
    }

    fn last(&self) -> usize {
        self.motif.len()
    }

    /// Cost of staying in `z_0` when stepping into measurement `t`.
    pub fn non_motif_loop_cost(&self, t: usize) -> f64 {
        if t > 0 && self.base[t - 1] != self.base[t] {
            self.beta
        } else {
            0.0
        }
    }

    /// Cost of `from -> to` when stepping into measurement `t`, or `None`
    /// for forbidden transitions.
    pub fn transition_cost(&self, from: usize, to: usize, t: usize) -> Option<f64> {
        let r = self.last();
        match (from, to) {
            (0, 0) => Some(self.non_motif_loop_cost(t)),
            (0, 1) => Some(self.beta),
            (f, 0) if f == r => Some(self.beta),
            (f, 1) if f == r => Some(self.beta),
            (f, g) if f >= 1 && f == g => Some(0.0),
            (f, g) if f >= 1 && g == f + 1 && g <= r => Some(self.beta),
            _ => None,
        }
    }

    /// All `(from, to)` pairs with a defined transition.
    pub fn allowed_transitions(&self) -> Vec<(usize, usize)> {
        let n = self.n_hidden();
        (0..n)
            .flat_map(|f| (0..n).map(move |g| (f, g)))
            .filter(|&(f, g)| self.transition_cost(f, g, 1).is_some())
            .collect()
    }

    pub fn is_valid_start(&self, z: usize) -> bool {
        z == NON_MOTIF || z == 1
    }

    pub fn is_valid_end(&self, z: usize) -> bool {
        z == NON_MOTIF || z == self.last()
    }

    #[inline]
    pub fn emission(&self, table: &LogLikTable, t: usize, z: usize) -> f64 {
        if z == NON_MOTIF {
            table.get(t, self.base[t]) + self.log_gamma
        } else {
            table.get(t, self.motif.states()[z - 1])
        }
    }

    /// Total score of a hidden path, `None` if it breaks the chain rules.
    pub fn path_score(&self, table: &LogLikTable, path: &[usize]) -> Option<f64> {
        let (&first, &last) = (path.first()?, path.last()?);
        if !self.is_valid_start(first) || !self.is_valid_end(last) {
            return None;
        }
        let mut score = self.emission(table, 0, first);
        for t in 1..path.len() {
            score += self.emission(table, t, path[t]) - self.transition_cost(path[t - 1], path[t], t)?;
        }
        Some(score)
    }

    /// Viterbi decode. Ties prefer `z_0`, then lower-indexed motif states.
    pub fn decode_path(&self, table: &LogLikTable) -> (Vec<usize>, f64) {
        let t_len = table.t_len();
        let n = self.n_hidden();
        let r = self.last();
        if t_len == 0 {
            return (Vec::new(), 0.0);
        }
        // predecessor codes
        const SELF: u8 = 0;
        const PREV: u8 = 1; // z_{j-1}, or z_0 for z_1
        const FROM_LAST: u8 = 2;

        let mut score = vec![f64::NEG_INFINITY; n];
        score[0] = self.emission(table, 0, 0);
        score[1] = self.emission(table, 0, 1);
        let mut next = vec![f64::NEG_INFINITY; n];
        let mut back = vec![SELF; t_len * n];

        for t in 1..t_len {
            let bp = &mut back[t * n..(t + 1) * n];
            let from_last = score[r] - self.beta;

            let stay = score[0] - self.non_motif_loop_cost(t);
            let (code, best) = if stay >= from_last { (SELF, stay) } else { (FROM_LAST, from_last) };
            bp[0] = code;
            next[0] = best + self.emission(table, t, 0);

            let enter = score[0] - self.beta;
            let stay = score[1];
            let (mut code, mut best) = (PREV, enter);
            if stay > best {
                (code, best) = (SELF, stay);
            }
            if from_last > best {
                (code, best) = (FROM_LAST, from_last);
            }
            bp[1] = code;
            next[1] = best + self.emission(table, t, 1);

            for j in 2..=r {
                let advance = score[j - 1] - self.beta;
                let stay = score[j];
                let (code, best) = if advance >= stay { (PREV, advance) } else { (SELF, stay) };
                bp[j] = code;
                next[j] = best + self.emission(table, t, j);
            }
            std::mem::swap(&mut score, &mut next);
        }

        let (mut z, total) = if score[0] >= score[r] { (0, score[0]) } else { (r, score[r]) };
        let mut path = vec![0usize; t_len];
        for t in (0..t_len).rev() {
            path[t] = z;
            if t == 0 {
                break;
            }
            z = match back[t * n + z] {
                SELF => z,
                PREV => z - 1,
                _ => r,
            };
        }
        (path, total)
    }
}

/// Splits a decoded path into motif instances; back-to-back instances
/// (`z_r -> z_1`) become separate instances.
pub fn instances_from_path(motif: &Motif, path: &[usize]) -> Vec<MotifInstance> {
    let r = motif.len();
    let starts_instance = |t: usize| path[t] == 1 && (t == 0 || path[t - 1] == NON_MOTIF || path[t - 1] == r);
    let mut out = Vec::new();
    let mut t = 0;
    while t < path.len() {
        if !starts_instance(t) {
            t += 1;
            continue;
        }
        let start = t;
        let mut durations = vec![0usize; r];
        durations[0] = 1;
        t += 1;
        while t < path.len() && path[t] != NON_MOTIF && !starts_instance(t) {
            durations[path[t] - 1] += 1;
            t += 1;
        }
        // a valid path only leaves the chain from z_r
        if durations.iter().all(|&d| d > 0) {
            out.push(MotifInstance::new(motif.clone(), start, durations).expect("durations are positive"));
        }
    }
    out
}

pub fn decode_instances(hmm: &MotifHmm<'_>, table: &LogLikTable) -> Vec<MotifInstance> {
    let (path, _) = hmm.decode_path(table);
    instances_from_path(hmm.motif(), &path)
}

/// Convenience wrapper computing the likelihood table first.
pub fn decode_series<M: LikelihoodModel>(
    hmm: &MotifHmm<'_>,
    model: &M,
    ts: &TimeSeries,
) -> Result<Vec<MotifInstance>> {
    if ts.t_len() != hmm.base.len() {
        return Err(MasaError::LengthMismatch {
            expected: hmm.base.len(),
            found: ts.t_len(),
        });
    }
    Ok(decode_instances(hmm, &model.log_likelihood_table(ts)))
}

/// Decodes every motif independently (in parallel); output order follows
/// `motifs`.
pub fn decode_all<M: LikelihoodModel>(
    motifs: &[Motif],
    model: &M,
    base: &StateAssignment,
    gamma: f64,
    table: &LogLikTable,
) -> Result<Vec<Vec<MotifInstance>>> {
    let hmms = motifs
        .iter()
        .map(|m| build_motif_hmm(m, model, base, gamma))
        .collect::<Result<Vec<_>>>()?;
    Ok(hmms.par_iter().map(|h| decode_instances(h, table)).collect())
}
