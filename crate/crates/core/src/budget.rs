use std::time::{Duration, Instant};

use crate::error::{Result, VceError};

/// Wall-clock cap for exact searches. Exceeding it is an error, never a
/// silently truncated answer.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self { deadline: None }
    }

    pub fn millis(ms: u64) -> Self {
        Self {
            deadline: Some(Instant::now() + Duration::from_millis(ms)),
        }
    }

    pub fn from_option(ms: Option<u64>) -> Self {
        ms.map_or_else(Self::unlimited, Self::millis)
    }

    #[inline]
    pub fn check(&self, what: &str) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(VceError::BudgetExceeded(what.to_string())),
            _ => Ok(()),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::unlimited()
    }
}
