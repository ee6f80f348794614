//! Instance scoring and the greedy lock/bid allocation of measurements to
//! motifs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MasaError, Result};
use crate::state_model::LogLikTable;
use crate::timeseries::{Motif, MotifEntry, MotifInstance, MotifSet, StateAssignment};

/// G-score `2 n (ln n - ln E)`.
pub fn motif_score(n_m: usize, expected_n: f64) -> Result<f64> {
    if n_m == 0 {
        return Err(MasaError::InvalidInput("motif score needs at least one occurrence".into()));
    }
    if !(expected_n > 0.0) {
        return Err(MasaError::InvalidInput(format!(
            "expected count must be positive, got {expected_n}"
        )));
    }
    let n = n_m as f64;
    Ok(2.0 * n * (n.ln() - expected_n.ln()))
}

/// `sum_t 2 (ll(t, new_t) - ll(t, old_t))` over the interval starting at
/// `start`.
pub fn instance_score(table: &LogLikTable, old: &StateAssignment, start: usize, new_labels: &[usize]) -> f64 {
    new_labels
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let t = start + i;
            2.0 * (table.get(t, s) - table.get(t, old.labels()[t]))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredInstance {
    pub motif_id: usize,
    pub instance: MotifInstance,
    pub motif_score: f64,
    pub instance_score: f64,
    pub total: f64,
}

impl ScoredInstance {
    pub fn new(motif_id: usize, mut instance: MotifInstance, motif_score: f64, instance_score: f64) -> Self {
        let total = motif_score + instance_score;
        instance.score = total;
        Self {
            motif_id,
            instance,
            motif_score,
            instance_score,
            total,
        }
    }

    fn span(&self) -> std::ops::Range<usize> {
        self.instance.start..self.instance.end
    }
}

/// Scores every decoded instance of one motif.
pub fn score_instances(
    motif_id: usize,
    upsilon: f64,
    instances: Vec<MotifInstance>,
    table: &LogLikTable,
    base: &StateAssignment,
) -> Vec<ScoredInstance> {
    instances
        .into_par_iter()
        .map(|q| {
            let delta = instance_score(table, base, q.start, &q.labels());
            ScoredInstance::new(motif_id, q, upsilon, delta)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasurementStatus {
    Open,
    Bid(BTreeSet<usize>),
    Locked { motif_id: usize, instance: usize },
}

/// Lock/bid bookkeeping for the greedy allocation.
#[derive(Debug, Clone)]
pub struct BidLedger {
    status: Vec<MeasurementStatus>,
    complete: BTreeSet<usize>,
    pending: BTreeMap<usize, Vec<ScoredInstance>>,
    locked: BTreeMap<usize, Vec<ScoredInstance>>,
}

impl BidLedger {
    pub fn new(t_len: usize) -> Self {
        Self {
            status: vec![MeasurementStatus::Open; t_len],
            complete: BTreeSet::new(),
            pending: BTreeMap::new(),
            locked: BTreeMap::new(),
        }
    }

    pub fn status(&self, t: usize) -> &MeasurementStatus {
        &self.status[t]
    }

    pub fn is_complete(&self, motif_id: usize) -> bool {
        self.complete.contains(&motif_id)
    }

    pub fn pending_bids(&self, motif_id: usize) -> &[ScoredInstance] {
        self.pending.get(&motif_id).map_or(&[], Vec::as_slice)
    }

    pub fn locked_instances(&self, motif_id: usize) -> &[ScoredInstance] {
        self.locked.get(&motif_id).map_or(&[], Vec::as_slice)
    }

    fn touches_lock(&self, q: &ScoredInstance) -> bool {
        self.status[q.span()]
            .iter()
            .any(|s| matches!(s, MeasurementStatus::Locked { .. }))
    }

    fn overlaps_own_bid(&self, q: &ScoredInstance) -> bool {
        self.status[q.span()]
            .iter()
            .any(|s| matches!(s, MeasurementStatus::Bid(ids) if ids.contains(&q.motif_id)))
    }

    fn place_bid(&mut self, q: ScoredInstance) {
        for s in &mut self.status[q.span()] {
            match s {
                MeasurementStatus::Open => *s = MeasurementStatus::Bid(BTreeSet::from([q.motif_id])),
                MeasurementStatus::Bid(ids) => {
                    ids.insert(q.motif_id);
                }
                MeasurementStatus::Locked { .. } => unreachable!("bids never cover locked measurements"),
            }
        }
        self.pending.entry(q.motif_id).or_default().push(q);
    }

    /// Locks `q` and evicts every other pending bid touching it.
    fn lock(&mut self, q: ScoredInstance) {
        let span = q.span();
        let mut rivals = BTreeSet::new();
        for s in &self.status[span.clone()] {
            if let MeasurementStatus::Bid(ids) = s {
                rivals.extend(ids.iter().copied().filter(|&id| id != q.motif_id));
            }
        }
        for id in rivals {
            let bids = self.pending.get_mut(&id).expect("bidder has pending bids");
            let (evicted, kept): (Vec<_>, Vec<_>) = std::mem::take(bids)
                .into_iter()
                .partition(|b| b.instance.start < span.end && span.start < b.instance.end);
            *bids = kept;
            for b in evicted {
                for s in &mut self.status[b.span()] {
                    if let MeasurementStatus::Bid(ids) = s {
                        ids.remove(&id);
                        if ids.is_empty() {
                            *s = MeasurementStatus::Open;
                        }
                    }
                }
            }
        }
        let owned = self.locked.entry(q.motif_id).or_default();
        let slot = owned.len();
        for s in &mut self.status[span] {
            *s = MeasurementStatus::Locked {
                motif_id: q.motif_id,
                instance: slot,
            };
        }
        owned.push(q);
    }

    fn complete_motif(&mut self, motif_id: usize) {
        self.complete.insert(motif_id);
        for q in self.pending.remove(&motif_id).unwrap_or_default() {
            self.lock(q);
        }
    }

    /// Offers one instance; returns whether it was kept (as bid or lock).
    pub fn offer(&mut self, q: ScoredInstance, min_instances: usize) -> bool {
        if self.touches_lock(&q) {
            return false;
        }
        let id = q.motif_id;
        if self.is_complete(id) {
            self.lock(q);
            return true;
        }
        if self.overlaps_own_bid(&q) {
            return false;
        }
        self.place_bid(q);
        if self.pending_bids(id).len() >= min_instances {
            self.complete_motif(id);
        }
        true
    }
}

/// Greedy allocation over instances sorted by `total` descending (ties by
/// motif id, then start). Returns the updated assignment and the complete
/// motifs ranked by their score.
pub fn greedy_assign(
    mut scored: Vec<ScoredInstance>,
    base: &StateAssignment,
    min_instances: usize,
) -> (StateAssignment, MotifSet) {
    scored.sort_by(|a, b| {
        b.total
            .total_cmp(&a.total)
            .then(a.motif_id.cmp(&b.motif_id))
            .then(a.instance.start.cmp(&b.instance.start))
            .then_with(|| a.instance.durations.cmp(&b.instance.durations))
    });
    let mut ledger = BidLedger::new(base.len());
    for q in scored {
        ledger.offer(q, min_instances);
    }

    let mut labels = base.labels().to_vec();
    let mut entries = Vec::new();
    for (&motif_id, owned) in &ledger.locked {
        let mut owned = owned.clone();
        owned.sort_by_key(|q| q.instance.start);
        for q in &owned {
            labels[q.span()].copy_from_slice(&q.instance.labels());
        }
        let motif: Motif = owned[0].instance.motif.clone();
        entries.push(MotifEntry {
            motif_id,
            motif,
            motif_score: owned[0].motif_score,
            instance_scores: owned.iter().map(|q| q.instance_score).collect(),
            instances: owned.into_iter().map(|q| q.instance).collect(),
        });
    }
    entries.sort_by(|a, b| b.score().total_cmp(&a.score()).then(a.motif_id.cmp(&b.motif_id)));
    let mut set = MotifSet {
        entries,
        total_score: 0.0,
    };
    set.total_score = total_motif_score(&set);
    let assignment = StateAssignment::new(labels, base.k_states()).expect("motif states are valid labels");
    (assignment, set)
}

/// Motif score counted once per motif plus every locked instance score.
pub fn total_motif_score(set: &MotifSet) -> f64 {
    set.entries.iter().map(MotifEntry::score).sum()
}
