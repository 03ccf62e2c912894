//! Translation-invariant solvers for unbalanced optimal transport (UOT).
//!
//! The crate is `no_std` (it needs `alloc`) and contains only numerics:
//!
//! - [`measures`]: 1-D discrete measures, ground costs and dense cost matrices.
//! - [`entropies`]: Csiszár entropies (KL, Berg, balanced), conjugates, `aprox`, softmin.
//! - [`duality`]: the dual functionals `F`, `G`, `H`, the optimal translation and primal evaluation.
//! - [`sinkhorn`]: F-, G- and H-Sinkhorn, Anderson extrapolation and rate estimation.
//! - [`ot1d`]: exact linear-time balanced 1-D transport with dual certificates.
//! - [`fw`]: Frank-Wolfe and pairwise Frank-Wolfe on the translation-invariant dual.
//! - [`barycenter`]: 1-D multimarginal transport and unbalanced barycenters.
//! - [`certify`]: Hilbert norms, scalar oracles and duality-gap certificates.
//!
//! IO, file formats and the command line live in the `uotkit` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod lse;

pub mod barycenter;
pub mod certify;
pub mod duality;
pub mod entropies;
pub mod fw;
pub mod measures;
pub mod ot1d;
pub mod sinkhorn;

pub use error::{Error, Result};
pub use lse::{log_sum_exp, log_weights};

pub use duality::{DualPair, UotProblem};
pub use entropies::Entropy;
pub use measures::{CostMatrix, CostSpec, DiscreteMeasure};
pub use ot1d::SparsePlan;

/// Supplies timestamps for convergence traces.
///
/// The core has no access to a clock; the std companion crate plugs in a
/// monotonic one. [`NoClock`] records zeros.
pub trait Clock {
    /// Nanoseconds elapsed since an arbitrary fixed origin.
    fn now_ns(&mut self) -> u64;
}

/// A clock that always reads zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&mut self) -> u64 {
        0
    }
}

impl<F: FnMut() -> u64> Clock for F {
    fn now_ns(&mut self) -> u64 {
        self()
    }
}

/// Sup-norm of `a - b`.
pub(crate) fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| libm::fabs(x - y))
        .fold(0.0, f64::max)
}
