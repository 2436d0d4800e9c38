use std::time::Instant;

use gnnlab_core::trainer::{Clock, StepWork};

/// Measures host time since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self {
            start: Instant::now(),
        }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn advance(&mut self, _work: &StepWork) -> f64 {
        // Keep elapsed strictly positive so throughput stays defined.
        self.start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE)
    }
}
