//! Files, synthetic data and the `uotkit` command line on top of `uot-core`.

use std::time::Instant;

pub mod cli;
pub mod gen;
pub mod io;

/// Monotonic nanoseconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct StdClock(Instant);

impl StdClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl uot_core::Clock for StdClock {
    fn now_ns(&mut self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}
