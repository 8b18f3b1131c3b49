use std::fmt;

/// Raised when a counted computation exceeds its step allowance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BudgetExceeded;

impl fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("step budget exceeded")
    }
}

impl std::error::Error for BudgetExceeded {}

/// Counts basic operations; the proxy for running time in every budget assertion.
#[derive(Clone, Debug)]
pub struct StepCounter {
    used: u64,
    limit: u64,
}

impl StepCounter {
    pub fn unlimited() -> Self {
        StepCounter { used: 0, limit: u64::MAX }
    }

    pub fn with_limit(limit: u64) -> Self {
        StepCounter { used: 0, limit }
    }

    #[inline]
    pub fn tick(&mut self, k: u64) -> Result<(), BudgetExceeded> {
        self.used = self.used.saturating_add(k);
        if self.used > self.limit {
            Err(BudgetExceeded)
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used)
    }

    /// Child counter limited by what is left here; merge it back with `absorb`.
    pub fn child(&self, limit: u64) -> StepCounter {
        StepCounter { used: 0, limit: limit.min(self.remaining()) }
    }

    pub fn absorb(&mut self, child: &StepCounter) -> Result<(), BudgetExceeded> {
        self.tick(child.used)
    }
}
