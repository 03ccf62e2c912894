//! Max-shifted log-sum-exp; every exp/log reduction in the crate goes through here.

use alloc::vec::Vec;

/// `log Σ exp(t_i)`, stable for arbitrary magnitudes.
///
/// `-inf` entries are ignored; an empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = terms.iter().map(|&t| libm::exp(t - max)).sum();
    max + libm::log(s)
}

/// `log Σ_i w_i exp(h_i)` where `log_w` holds `log w_i` (`-inf` for zero weights).
pub(crate) fn weighted_lse(log_w: &[f64], h: impl Fn(usize) -> f64, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(log_w.iter().enumerate().map(|(i, &lw)| {
        if lw == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            lw + h(i)
        }
    }));
    log_sum_exp(scratch)
}

/// Elementwise `log w`, with `-inf` for zero weights.
pub fn log_weights(w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|&x| if x > 0.0 { libm::log(x) } else { f64::NEG_INFINITY })
        .collect()
}
