//! Sliding-window rate limiter shared by all workers of a run.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Admits at most `limit` acquisitions within any window of the configured
/// duration. `acquire` blocks until a slot frees; safe under concurrent use.
#[derive(Debug)]
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    admitted: Mutex<VecDeque<Instant>>,
    freed: Condvar,
}

impl RateLimiter {
    /// Per-minute limiter matching the backend config field.
    pub fn per_minute(limit: u32) -> Self {
        Self::new(limit as usize, Duration::from_secs(60))
    }

    /// Panics if `limit` is zero.
    pub fn new(limit: usize, window: Duration) -> Self {
        assert!(limit >= 1, "rate limit must be >= 1");
        RateLimiter { limit, window, admitted: Mutex::new(VecDeque::new()), freed: Condvar::new() }
    }

    /// Blocks until this acquisition fits into the window, then records it.
    pub fn acquire(&self) {
        let mut admitted = self.admitted.lock().unwrap();
        loop {
            let now = Instant::now();
            while let Some(front) = admitted.front() {
                if now.duration_since(*front) >= self.window {
                    admitted.pop_front();
                } else {
                    break;
                }
            }
            if admitted.len() < self.limit {
                admitted.push_back(now);
                self.freed.notify_one();
                return;
            }
            let oldest = *admitted.front().expect("queue is full, so non-empty");
            let wait = self.window.saturating_sub(now.duration_since(oldest));
            let (guard, _) = self.freed.wait_timeout(admitted, wait).unwrap();
            admitted = guard;
        }
    }
}
