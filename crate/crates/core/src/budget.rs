use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;
pub const DEFAULT_WORK_LIMIT: u64 = 1 << 26;

/// Per-evaluation step limit plus a shared pool of work units.
///
/// A work unit is one functional evaluation or one enumerated grid point.
/// Searches charge their whole cost before starting so that exhaustion is
/// deterministic regardless of how the work is scheduled.
#[derive(Debug)]
pub struct Budget {
    step_limit: u64,
    work_limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(step_limit: u64, work_limit: u64) -> Self {
        Self {
            step_limit,
            work_limit,
            used: AtomicU64::new(0),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(DEFAULT_STEP_LIMIT, u64::MAX)
    }

    pub fn step_limit(&self) -> u64 {
        self.step_limit
    }

    pub fn work_limit(&self) -> u64 {
        self.work_limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    pub fn remaining(&self) -> u64 {
        self.work_limit.saturating_sub(self.used())
    }

    pub fn charge(&self, units: u64) -> Result<()> {
        self.used
            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |used| {
                used.checked_add(units).filter(|&u| u <= self.work_limit)
            })
            .map(|_| ())
            .map_err(|used| Error::WorkBudget {
                needed: units,
                remaining: self.work_limit.saturating_sub(used),
            })
    }

    /// Charges `2^n` units, failing if that count does not fit.
    pub fn charge_pow2(&self, n: usize) -> Result<()> {
        match crate::seq::word_count(n) {
            Some(count) => self.charge(count),
            None => Err(Error::WorkBudget {
                needed: u64::MAX,
                remaining: self.remaining(),
            }),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(DEFAULT_STEP_LIMIT, DEFAULT_WORK_LIMIT)
    }
}
