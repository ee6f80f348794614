//! Binomial upper tail `P(B(n, p) >= k)` in log space.
//!
//! Point masses use the saddle-point form (Stirling remainder plus deviance)
//! so each term carries near machine-precision relative error even for large
//! `n`. Above [`NORMAL_APPROX_TRIALS`] trials a continuity-corrected normal
//! tail is used instead.

use statrs::function::erf::erfc;

pub const NORMAL_APPROX_TRIALS: u64 = 1_000_000;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi))`.
fn stirling_remainder(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        let mut fact = 1.0f64;
        for i in 2..=n {
            fact *= i as f64;
        }
        let nf = n as f64;
        return fact.ln() - ((nf + 0.5) * nf.ln() - nf + LN_SQRT_2PI);
    }
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        (S0 - S1 / nn) / nf
    } else if n > 80 {
        (S0 - (S1 - S2 / nn) / nn) / nf
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
    }
}

/// `x ln(x / np) + np - x`, evaluated without cancellation near `x = np`.
fn deviance(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P(B(n, p) = x)` for `0 < p < 1`.
pub fn ln_pmf(x: u64, n: u64, p: f64) -> f64 {
    debug_assert!(x <= n && p > 0.0 && p < 1.0);
    let q = 1.0 - p;
    if x == 0 {
        return n as f64 * (-p).ln_1p();
    }
    if x == n {
        return n as f64 * p.ln();
    }
    let (xf, nf) = (x as f64, n as f64);
    let lc = stirling_remainder(n)
        - stirling_remainder(x)
        - stirling_remainder(n - x)
        - deviance(xf, nf * p)
        - deviance(nf - xf, nf * q);
    let lf = (2.0 * std::f64::consts::PI).ln() + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

fn log_sum_exp_terms(terms: impl Iterator<Item = f64>, anchor: f64) -> f64 {
    let mut sum = 0.0;
    for t in terms {
        sum += (t - anchor).exp();
    }
    anchor + sum.ln()
}

/// `ln P(B(n, p) >= k)`.
pub fn binomial_ln_sf(n: u64, p: f64, k: u64) -> f64 {
    if k == 0 || p >= 1.0 {
        return 0.0;
    }
    if k > n || p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if n > NORMAL_APPROX_TRIALS {
        let nf = n as f64;
        let z = (k as f64 - 0.5 - nf * p) / (nf * p * (1.0 - p)).sqrt();
        return (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln();
    }
    let mode = (((n + 1) as f64) * p).floor() as u64;
    let mode = mode.min(n);
    // Terms decay geometrically away from the mode; stop once they are
    // negligible relative to the running sum.
    const NEGLIGIBLE: f64 = -40.0;
    if k > mode {
        let anchor = ln_pmf(k, n, p);
        let terms = (k..=n)
            .map(|j| ln_pmf(j, n, p))
            .take_while(|&t| t - anchor > NEGLIGIBLE);
        log_sum_exp_terms(terms, anchor)
    } else {
        // 1 - P(X <= k - 1); the lower tail is at most about one half here
        let anchor = ln_pmf(k - 1, n, p);
        let terms = (0..k)
            .rev()
            .map(|j| ln_pmf(j, n, p))
            .take_while(|&t| t - anchor > NEGLIGIBLE);
        let lower = log_sum_exp_terms(terms, anchor).exp();
        (-lower).ln_1p()
    }
}

pub fn binomial_sf(n: u64, p: f64, k: u64) -> f64 {
    binomial_ln_sf(n, p, k).exp().clamp(0.0, 1.0)
}
