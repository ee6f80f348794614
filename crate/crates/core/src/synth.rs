//! Synthetic benchmark: macro-segments of random segments followed by a
//! planted `A B C D` motif, with optional per-segment covariance
//! perturbation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MasaError, Result};
use crate::timeseries::TimeSeries;

/// Planted motif state ids (`A B C D`).
pub const MOTIF_STATES: [usize; 4] = [0, 1, 2, 3];
const COV_RIDGE: f64 = 0.1;
const ENTRY_DENSITY: f64 = 0.7;
const PERTURB_WEIGHT: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_macro: usize,
    pub seg_len: usize,
    /// Random segments at the start of every macro-segment.
    pub n_random_segs: usize,
    pub k_states: usize,
    pub n_dims: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_macro: 1000,
            seg_len: 15,
            n_random_segs: 6,
            k_states: 10,
            n_dims: 5,
            epsilon: 0.2,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn segs_per_macro(&self) -> usize {
        self.n_random_segs + MOTIF_STATES.len()
    }

    pub fn n_segments(&self) -> usize {
        self.n_macro * self.segs_per_macro()
    }

    pub fn t_len(&self) -> usize {
        self.n_segments() * self.seg_len
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(MasaError::InvalidHyperparameter(format!(
                "epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        if self.n_macro == 0 || self.seg_len == 0 || self.n_dims == 0 {
            return Err(MasaError::InvalidInput(
                "macro-segment count, segment length and dimension must be positive".into(),
            ));
        }
        if self.k_states <= MOTIF_STATES.len() {
            return Err(MasaError::InvalidHyperparameter(format!(
                "need more than {} states so perturbing states exist, got {}",
                MOTIF_STATES.len(),
                self.k_states
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<usize>,
    pub motif_mask: Vec<bool>,
    /// One flag per segment.
    pub perturbed_segments: Vec<bool>,
    pub seg_len: usize,
    pub k_states: usize,
}

impl GroundTruth {
    /// Per-measurement view of `perturbed_segments`.
    pub fn perturbed_mask(&self) -> Vec<bool> {
        self.perturbed_segments
            .iter()
            .flat_map(|&p| std::iter::repeat_n(p, self.seg_len))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `K` random SPD covariances `A A' + 0.1 I`, where every entry of `A` is
/// non-zero with probability 0.7 and then uniform in `[-1, 1]`.
pub fn gen_covariances(k: usize, n: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            let a = DMatrix::from_fn(n, n, |_, _| {
                if rng.random_bool(ENTRY_DENSITY) {
                    rng.random_range(-1.0..=1.0)
                } else {
                    0.0
                }
            });
            &a * a.transpose() + DMatrix::identity(n, n) * COV_RIDGE
        })
        .collect()
}

struct Segment {
    state: usize,
    perturbed: bool,
    values: Vec<f64>,
}

/// Generates data and ground truth. Every segment draws from its own
/// ChaCha stream, so the result does not depend on generation order.
pub fn gen_synthetic(cfg: &SynthConfig) -> Result<(TimeSeries, GroundTruth)> {
    cfg.validate()?;
    let (k, n) = (cfg.k_states, cfg.n_dims);
    let covs = gen_covariances(k, n, cfg.seed);
    let chol = |m: &DMatrix<f64>| {
        m.clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or(MasaError::DegenerateCovariance { state: 0 })
    };
    let factors = covs.iter().map(chol).collect::<Result<Vec<_>>>()?;
    // blended[i][j - 4] factors 0.7 S_j + 0.3 S_i
    let n_motif = MOTIF_STATES.len();
    let blended = (0..k)
        .map(|i| {
            (n_motif..k)
                .map(|j| chol(&(&covs[j] * PERTURB_WEIGHT + &covs[i] * (1.0 - PERTURB_WEIGHT))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let per_macro = cfg.segs_per_macro();
    let segments: Vec<Segment> = (0..cfg.n_segments())
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64 + 1);
            let pos = idx % per_macro;
            let state = if pos < cfg.n_random_segs {
                rng.random_range(0..k)
            } else {
                MOTIF_STATES[pos - cfg.n_random_segs]
            };
            let perturbed = rng.random_bool(cfg.epsilon);
            let factor = if perturbed {
                let j = rng.random_range(n_motif..k);
                &blended[state][j - n_motif]
            } else {
                &factors[state]
            };
            let mut values = Vec::with_capacity(cfg.seg_len * n);
            for _ in 0..cfg.seg_len {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                values.extend((factor * z).iter());
            }
            Segment {
                state,
                perturbed,
                values,
            }
        })
        .collect();

    let t_len = cfg.t_len();
    let mut data = Vec::with_capacity(t_len * n);
    let mut labels = Vec::with_capacity(t_len);
    let mut motif_mask = Vec::with_capacity(t_len);
    let mut perturbed_segments = Vec::with_capacity(segments.len());
    for (idx, seg) in segments.into_iter().enumerate() {
        let in_motif = idx % per_macro >= cfg.n_random_segs;
        data.extend(seg.values);
        labels.extend(std::iter::repeat_n(seg.state, cfg.seg_len));
        motif_mask.extend(std::iter::repeat_n(in_motif, cfg.seg_len));
        perturbed_segments.push(seg.perturbed);
    }
    let ts = TimeSeries::new(data, t_len, n)?;
    let truth = GroundTruth {
        labels,
        motif_mask,
        perturbed_segments,
        seg_len: cfg.seg_len,
        k_states: k,
    };
    Ok((ts, truth))
}
