//! Candidate motif generation.
//!
//! Maximal repeats are mined from the collapsed assignment, then filtered one
//! at a time against an independence null model that learns every accepted
//! pattern as a single "dummy" symbol. A longer pattern that is explained by
//! an already accepted sub-pattern therefore does not look surprising.

pub mod binomial;
pub mod suffix;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::timeseries::{CollapsedSequence, Hyperparameters, LengthSort, Motif, MIN_MOTIF_LEN};

pub use binomial::{binomial_ln_sf, binomial_sf};
pub use suffix::{RepeatedPattern, lcp_array, suffix_array};

/// Maximal repeats of length at least 3 with at least `min_count` disjoint
/// occurrences in the collapsed sequence.
pub fn find_maximal_repeats(s_prime: &CollapsedSequence, min_count: usize) -> Vec<RepeatedPattern> {
    suffix::maximal_repeats(s_prime.symbols(), MIN_MOTIF_LEN, min_count)
}

/// Greedy left-to-right count of disjoint exact matches of `pattern`.
pub fn nonoverlap_count(symbols: &[usize], pattern: &[usize]) -> usize {
    let m = pattern.len();
    if m == 0 {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i + m <= symbols.len() {
        if &symbols[i..i + m] == pattern {
            count += 1;
            i += m;
        } else {
            i += 1;
        }
    }
    count
}

/// A pattern the null model treats as one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownPattern {
    pub states: Vec<usize>,
    pub probability: f64,
}

/// A symbol of a pattern after known sub-patterns have been substituted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullSymbol {
    State(usize),
    /// Index into [`NullModel::known`].
    Known(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullModel {
    state_probs: Vec<f64>,
    /// Sorted by decreasing length, then decreasing probability.
    known: Vec<KnownPattern>,
    s_prime_len: usize,
}

impl NullModel {
    /// Empirical state frequencies of `s_prime`, nothing known yet.
    pub fn from_collapsed(s_prime: &CollapsedSequence) -> Self {
        let mut counts = vec![0usize; s_prime.k_states()];
        for &s in s_prime.symbols() {
            counts[s] += 1;
        }
        let len = s_prime.len().max(1) as f64;
        Self {
            state_probs: counts.iter().map(|&c| c as f64 / len).collect(),
            known: Vec::new(),
            s_prime_len: s_prime.len(),
        }
    }

    /// Learns every length-2 substring with at least two disjoint occurrences.
    pub fn seed_pairs(&mut self, s_prime: &CollapsedSequence) {
        let symbols = s_prime.symbols();
        let mut seen: BTreeMap<[usize; 2], ()> = BTreeMap::new();
        for w in symbols.windows(2) {
            seen.insert([w[0], w[1]], ());
        }
        for pair in seen.keys() {
            let n_d = nonoverlap_count(symbols, pair);
            if n_d >= 2 {
                self.add_known(pair.to_vec(), n_d);
            }
        }
    }

    /// Registers `states` with dummy probability `n_d / |S'|`.
    pub fn add_known(&mut self, states: Vec<usize>, n_d: usize) {
        let probability = (n_d as f64 / self.s_prime_len.max(1) as f64).min(1.0);
        let entry = KnownPattern { states, probability };
        let pos = self
            .known
            .iter()
            .position(|k| known_order(&entry, k).is_lt())
            .unwrap_or(self.known.len());
        self.known.insert(pos, entry);
    }

    pub fn state_probs(&self) -> &[f64] {
        &self.state_probs
    }

    pub fn known(&self) -> &[KnownPattern] {
        &self.known
    }

    pub fn s_prime_len(&self) -> usize {
        self.s_prime_len
    }

    pub fn symbol_probability(&self, sym: NullSymbol) -> f64 {
        match sym {
            NullSymbol::State(s) => self.state_probs.get(s).copied().unwrap_or(0.0),
            NullSymbol::Known(i) => self.known[i].probability,
        }
    }

    /// `|S'| * prod P(m_i)` under plain state independence.
    pub fn expected_count(&self, states: &[usize]) -> f64 {
        self.s_prime_len as f64
            * states
                .iter()
                .map(|&s| self.symbol_probability(NullSymbol::State(s)))
                .product::<f64>()
    }
}

fn known_order(a: &KnownPattern, b: &KnownPattern) -> std::cmp::Ordering {
    b.states
        .len()
        .cmp(&a.states.len())
        .then(b.probability.total_cmp(&a.probability))
        .then_with(|| a.states.cmp(&b.states))
}

/// Replaces disjoint occurrences of every known pattern (longest first) in
/// `pattern`, scanning left to right.
pub fn replace_known_cands(pattern: &[usize], null: &NullModel) -> Vec<NullSymbol> {
    let mut out: Vec<NullSymbol> = pattern.iter().map(|&s| NullSymbol::State(s)).collect();
    for (idx, known) in null.known.iter().enumerate() {
        let d = &known.states;
        if d.len() > out.len() {
            continue;
        }
        let mut next = Vec::with_capacity(out.len());
        let mut i = 0;
        while i < out.len() {
            let matches = i + d.len() <= out.len()
                && d
                    .iter()
                    .zip(&out[i..i + d.len()])
                    .all(|(&s, sym)| *sym == NullSymbol::State(s));
            if matches {
                next.push(NullSymbol::Known(idx));
                i += d.len();
            } else {
                next.push(out[i]);
                i += 1;
            }
        }
        out = next;
    }
    out
}

/// Null-model probability of one occurrence of `pattern` given what the null
/// model already knows.
pub fn null_probability(pattern: &[usize], null: &NullModel) -> f64 {
    replace_known_cands(pattern, null)
        .into_iter()
        .map(|sym| null.symbol_probability(sym))
        .product()
}

pub fn pattern_ln_p_value(pattern: &[usize], n_m: usize, null: &NullModel) -> f64 {
    if n_m == 0 {
        return 0.0;
    }
    binomial_ln_sf(null.s_prime_len as u64, null_probability(pattern, null), n_m as u64)
}

/// `P(B(|S'|, p) >= n_m)` with `p` from [`null_probability`].
pub fn pattern_p_value(pattern: &[usize], n_m: usize, null: &NullModel) -> f64 {
    pattern_ln_p_value(pattern, n_m, null).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub motif: Motif,
    pub nonoverlap_count: usize,
    /// p-value against the null model as it stood when the motif was accepted.
    pub p_value: f64,
    pub ln_p_value: f64,
}

/// Significant, non-redundant candidates, ordered by ascending p-value and
/// truncated to `hp.candidate_cap`.
pub fn generate_candidates(s_prime: &CollapsedSequence, hp: &Hyperparameters) -> Vec<Candidate> {
    let mut repeats = find_maximal_repeats(s_prime, hp.min_instances);
    if repeats.is_empty() {
        return Vec::new();
    }
    match hp.length_sort {
        LengthSort::Increasing => repeats.sort_by(|a, b| {
            a.states.len().cmp(&b.states.len()).then_with(|| a.states.cmp(&b.states))
        }),
        LengthSort::Decreasing => repeats.sort_by(|a, b| {
            b.states.len().cmp(&a.states.len()).then_with(|| a.states.cmp(&b.states))
        }),
    }

    let mut null = NullModel::from_collapsed(s_prime);
    null.seed_pairs(s_prime);
    let ln_threshold = (hp.alpha / repeats.len() as f64).ln();

    let mut accepted = Vec::new();
    for rep in repeats {
        let ln_p = pattern_ln_p_value(&rep.states, rep.nonoverlap_count, &null);
        if ln_p <= ln_threshold {
            null.add_known(rep.states.clone(), rep.nonoverlap_count);
            let motif = Motif::new(rep.states).expect("maximal repeats have length >= 3 and no equal neighbours");
            accepted.push(Candidate {
                motif,
                nonoverlap_count: rep.nonoverlap_count,
                p_value: ln_p.exp(),
                ln_p_value: ln_p,
            });
        }
    }
    accepted.sort_by(|a, b| a.ln_p_value.total_cmp(&b.ln_p_value));
    if let Some(cap) = hp.candidate_cap {
        accepted.truncate(cap);
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;

    fn seq(symbols: &[usize], k: usize) -> CollapsedSequence {
        CollapsedSequence::from_symbols(symbols.to_vec(), k).unwrap()
    }

    /// Random symbol stream with no equal neighbours.
    fn random_stream(rng: &mut ChaCha8Rng, len: usize, alphabet: std::ops::Range<usize>) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::with_capacity(len);
        while out.len() < len {
            let s = rng.random_range(alphabet.clone());
            if out.last() != Some(&s) {
                out.push(s);
            }
        }
        out
    }

    /// Maximum number of disjoint matches by dynamic programming.
    fn dp_disjoint(symbols: &[usize], pattern: &[usize]) -> usize {
        let (n, m) = (symbols.len(), pattern.len());
        let mut best = vec![0usize; n + 1];
        for i in 1..=n {
            best[i] = best[i - 1];
            if i >= m && &symbols[i - m..i] == pattern {
                best[i] = best[i].max(best[i - m] + 1);
            }
        }
        best[n]
    }

    #[test]
    fn nonoverlap_examples() {
        assert_eq!(nonoverlap_count(&[A, A, A, A], &[A, A]), 2);
        assert_eq!(nonoverlap_count(&[A, B, C, A, B, C], &[A, B, C]), 2);
        assert_eq!(nonoverlap_count(&[A, B, A, B, A], &[A, B, A]), 1);
    }

    #[test]
    fn nonoverlap_matches_dp_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let len = rng.random_range(1..60);
            let s: Vec<usize> = (0..len).map(|_| rng.random_range(0..3)).collect();
            let plen = rng.random_range(1..4);
            let p: Vec<usize> = (0..plen).map(|_| rng.random_range(0..3)).collect();
            assert_eq!(nonoverlap_count(&s, &p), dp_disjoint(&s, &p));
        }
    }

    #[test]
    fn abc_maximal_repeat() {
        let s = seq(&[A, B, C, A, B, C, A, B, C], 3);
        let reps = find_maximal_repeats(&s, 2);
        assert_eq!(reps.len(), 1);
        assert_eq!(reps[0].states, vec![A, B, C]);
        assert_eq!(reps[0].nonoverlap_count, 3);
    }

    fn null_with(len: usize, known: &[(&[usize], usize)]) -> NullModel {
        let symbols: Vec<usize> = (0..len).map(|i| i % 4).collect();
        let mut null = NullModel::from_collapsed(&seq(&symbols, 4));
        for (states, n) in known {
            null.add_known(states.to_vec(), *n);
        }
        null
    }

    #[test]
    fn replace_prefix_with_known() {
        let null = null_with(40, &[(&[A, B, C], 5)]);
        assert_eq!(
            replace_known_cands(&[A, B, C, D], &null),
            vec![NullSymbol::Known(0), NullSymbol::State(D)]
        );
    }

    #[test]
    fn replace_with_empty_known_set() {
        let null = null_with(40, &[]);
        assert_eq!(
            replace_known_cands(&[A, B], &null),
            vec![NullSymbol::State(A), NullSymbol::State(B)]
        );
    }

    #[test]
    fn replace_repeated_pair() {
        let null = null_with(40, &[(&[A, B], 5)]);
        assert_eq!(
            replace_known_cands(&[A, B, A, B], &null),
            vec![NullSymbol::Known(0), NullSymbol::Known(0)]
        );
    }

    #[test]
    fn replace_prefers_longer_known() {
        let null = null_with(40, &[(&[A, B], 9), (&[A, B, C], 3), (&[C, D], 4)]);
        assert_eq!(null.known()[0].states, vec![A, B, C]);
        // ABC consumes the C, so CD cannot match afterwards
        assert_eq!(
            replace_known_cands(&[A, B, C, D], &null),
            vec![NullSymbol::Known(0), NullSymbol::State(D)]
        );
    }

    #[test]
    fn p_value_examples() {
        let null = null_with(40, &[]);
        assert_eq!(pattern_p_value(&[A, B, C], 0, &null), 1.0);

        // |S'| = 10 with every state probability 1/2 -> p = (1/2)^1 for a
        // one-symbol pattern; use a two-state alternating stream
        let s = seq(&[A, B, A, B, A, B, A, B, A, B], 2);
        let null = NullModel::from_collapsed(&s);
        assert_abs_diff_eq!(pattern_p_value(&[A], 10, &null), 0.5f64.powi(10), epsilon = 1e-15);
    }

    #[test]
    fn planted_pattern_is_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut symbols = Vec::new();
        for _ in 0..20 {
            let noise = random_stream(&mut rng, 6, 4..10);
            symbols.extend(noise);
            symbols.extend([A, B, C, D]);
        }
        let s = seq(&symbols, 10);
        let hp = Hyperparameters { min_instances: 10, ..Default::default() };
        let cands = generate_candidates(&s, &hp);
        assert!(cands.iter().any(|c| c.motif.states() == [A, B, C, D]), "{cands:?}");
        for c in &cands {
            assert!(c.motif.len() >= 3 && c.nonoverlap_count >= 10);
        }
    }

    #[test]
    fn uniform_noise_yields_no_candidates() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = seq(&random_stream(&mut rng, 200, 0..10), 10);
            let hp = Hyperparameters { min_instances: 10, ..Default::default() };
            assert!(generate_candidates(&s, &hp).is_empty(), "seed {seed}");
        }
    }

    /// `A B C` recurs 30 times and is followed by `D` no more often than the
    /// base rate, so `A B C D` is explained by the accepted `A B C`.
    #[test]
    fn redundant_extension_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut symbols = Vec::new();
        let mut abcd_runs = 0;
        for i in 0..30 {
            symbols.extend([A, B, C]);
            // every fourth ABC continues with D
            if i % 4 == 0 {
                symbols.push(D);
                abcd_runs += 1;
            }
            let mut noise = random_stream(&mut rng, 8, 3..9);
            while noise[0] == *symbols.last().unwrap() || noise[0] == D {
                noise = random_stream(&mut rng, 8, 3..9);
            }
            symbols.extend(noise);
        }
        let s = seq(&symbols, 9);
        assert_eq!(nonoverlap_count(s.symbols(), &[A, B, C, D]), abcd_runs);

        let hp = Hyperparameters { min_instances: 5, alpha: 0.001, ..Default::default() };
        let cands = generate_candidates(&s, &hp);
        assert!(cands.iter().any(|c| c.motif.states() == [A, B, C]));
        assert!(!cands.iter().any(|c| c.motif.states() == [A, B, C, D]));

        // plain independence would have accepted it
        let plain = NullModel::from_collapsed(&s);
        let n_reps = find_maximal_repeats(&s, 5).len() as f64;
        assert!(pattern_p_value(&[A, B, C, D], abcd_runs, &plain) <= 0.001 / n_reps);
    }

    #[test]
    fn decreasing_sort_flag_changes_evaluation_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut symbols = Vec::new();
        for _ in 0..25 {
            symbols.extend(random_stream(&mut rng, 5, 4..10));
            symbols.extend([A, B, C, D]);
        }
        let s = seq(&symbols, 10);
        let inc = Hyperparameters { min_instances: 10, ..Default::default() };
        let dec = Hyperparameters { length_sort: LengthSort::Decreasing, ..inc.clone() };
        assert!(generate_candidates(&s, &inc).iter().any(|c| c.motif.states() == [A, B, C, D]));
        assert!(generate_candidates(&s, &dec).iter().any(|c| c.motif.states() == [A, B, C, D]));
    }

    #[test]
    fn candidate_cap_keeps_smallest_p_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut symbols = Vec::new();
        for i in 0..60 {
            symbols.extend(random_stream(&mut rng, 4, 6..12));
            if i % 2 == 0 {
                symbols.extend([A, B, C, D]);
            } else {
                symbols.extend([D, C, B, A, 4]);
            }
        }
        let s = seq(&symbols, 12);
        let all = generate_candidates(&s, &Hyperparameters { candidate_cap: None, min_instances: 10, ..Default::default() });
        assert!(all.len() >= 2);
        let capped = generate_candidates(&s, &Hyperparameters { candidate_cap: Some(1), min_instances: 10, ..Default::default() });
        assert_eq!(capped.len(), 1);
        assert_eq!(capped[0], all[0]);
        assert!(all.windows(2).all(|w| w[0].ln_p_value <= w[1].ln_p_value));
    }

    proptest! {
        #[test]
        fn accepted_candidates_meet_constraints(seed in any::<u64>(), l in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut symbols = Vec::new();
            for _ in 0..15 {
                symbols.extend(random_stream(&mut rng, 4, 0..6));
                if symbols.last() != Some(&6) { symbols.extend([6, 7, 8]); }
            }
            let s = seq(&symbols, 9);
            let hp = Hyperparameters { min_instances: l, candidate_cap: None, ..Default::default() };
            let first = generate_candidates(&s, &hp);
            let n_reps = find_maximal_repeats(&s, l).len() as f64;
            for c in &first {
                prop_assert!(c.motif.len() >= 3);
                prop_assert!(c.nonoverlap_count >= l);
                prop_assert!(c.p_value <= hp.alpha / n_reps * (1.0 + 1e-12));
            }
            prop_assert_eq!(first, generate_candidates(&s, &hp));
        }
    }
}
