//! Suffix array, LCP array and maximal-repeat enumeration over a collapsed
//! symbol stream.

/// Prefix-doubling suffix array with counting-sort passes, `O(n log n)`.
pub fn suffix_array(s: &[usize]) -> Vec<usize> {
    let n = s.len();
    if n == 0 {
        return Vec::new();
    }
    let mut sa: Vec<usize> = (0..n).collect();
    sa.sort_by_key(|&i| s[i]);
    let mut rank = vec![0usize; n];
    for w in 1..n {
        rank[sa[w]] = rank[sa[w - 1]] + usize::from(s[sa[w]] != s[sa[w - 1]]);
    }

    let mut k = 1;
    let mut by_second = vec![0usize; n];
    let mut next_rank = vec![0usize; n];
    let mut counts = vec![0usize; n + 1];
    while rank[sa[n - 1]] < n - 1 && k < n {
        // order by the second half: suffixes without one come first
        let mut p = 0;
        for i in n - k..n {
            by_second[p] = i;
            p += 1;
        }
        for &i in &sa {
            if i >= k {
                by_second[p] = i - k;
                p += 1;
            }
        }
        // stable counting sort by first-half rank
        counts.iter_mut().for_each(|c| *c = 0);
        for &r in &rank {
            counts[r + 1] += 1;
        }
        for r in 1..=n {
            counts[r] += counts[r - 1];
        }
        for &i in &by_second {
            sa[counts[rank[i]]] = i;
            counts[rank[i]] += 1;
        }
        let key = |i: usize| (rank[i], if i + k < n { rank[i + k] + 1 } else { 0 });
        next_rank[sa[0]] = 0;
        for w in 1..n {
            next_rank[sa[w]] = next_rank[sa[w - 1]] + usize::from(key(sa[w]) != key(sa[w - 1]));
        }
        std::mem::swap(&mut rank, &mut next_rank);
        k *= 2;
    }
    sa
}

/// Kasai's algorithm. `lcp[i]` is the common prefix length of the suffixes
/// at `sa[i - 1]` and `sa[i]`; `lcp[0] = 0`.
pub fn lcp_array(s: &[usize], sa: &[usize]) -> Vec<usize> {
    let n = s.len();
    let mut rank = vec![0usize; n];
    for (i, &p) in sa.iter().enumerate() {
        rank[p] = i;
    }
    let mut lcp = vec![0usize; n];
    let mut h = 0usize;
    for i in 0..n {
        if rank[i] > 0 {
            let j = sa[rank[i] - 1];
            while i + h < n && j + h < n && s[i + h] == s[j + h] {
                h += 1;
            }
            lcp[rank[i]] = h;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    lcp
}

/// A repeated pattern and where it occurs in the symbol stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepeatedPattern {
    pub states: Vec<usize>,
    /// Start positions of every (possibly overlapping) occurrence, ascending.
    pub occurrences: Vec<usize>,
    /// Greedy left-to-right count of disjoint occurrences.
    pub nonoverlap_count: usize,
}

/// Greedy disjoint count given sorted occurrence starts.
pub fn nonoverlap_from_positions(positions: &[usize], len: usize) -> usize {
    let mut count = 0;
    let mut free_from = 0;
    for &p in positions {
        if p >= free_from {
            count += 1;
            free_from = p + len;
        }
    }
    count
}

/// All maximal repeats of length `>= min_len` with at least `min_count`
/// disjoint occurrences, ordered by length then lexicographically.
///
/// A repeat is maximal when it cannot be extended on either side without
/// changing its occurrence set. Right-maximal repeats are exactly the
/// lcp-intervals of the suffix array; left-maximality is checked on the
/// preceding symbols.
pub fn maximal_repeats(s: &[usize], min_len: usize, min_count: usize) -> Vec<RepeatedPattern> {
    let n = s.len();
    if n < 2 {
        return Vec::new();
    }
    let sa = suffix_array(s);
    let lcp = lcp_array(s, &sa);

    let mut out = Vec::new();
    // (lcp value, left bound)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    for i in 1..=n {
        let cur = if i < n { lcp[i] } else { 0 };
        let mut lb = i - 1;
        while cur < stack.last().unwrap().0 {
            let (len, left) = stack.pop().unwrap();
            let rb = i - 1;
            lb = left;
            if len >= min_len && rb + 1 - left >= min_count.max(2) {
                if let Some(p) = interval_repeat(s, &sa[left..=rb], len, min_count) {
                    out.push(p);
                }
            }
        }
        if cur > stack.last().unwrap().0 {
            stack.push((cur, lb));
        }
    }
    out.sort_by(|a, b| a.states.len().cmp(&b.states.len()).then_with(|| a.states.cmp(&b.states)));
    out
}

fn interval_repeat(s: &[usize], starts: &[usize], len: usize, min_count: usize) -> Option<RepeatedPattern> {
    let first = starts[0];
    let left_maximal = starts.contains(&0) || {
        let before = s[first - 1];
        starts.iter().any(|&p| s[p - 1] != before)
    };
    if !left_maximal {
        return None;
    }
    let mut occurrences = starts.to_vec();
    occurrences.sort_unstable();
    let nonoverlap_count = nonoverlap_from_positions(&occurrences, len);
    if nonoverlap_count < min_count {
        return None;
    }
    Some(RepeatedPattern {
        states: s[first..first + len].to_vec(),
        occurrences,
        nonoverlap_count,
    })
}
