//! Sliding-window rate limiter for live dispatches.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Allows at most `limit` acquisitions inside any window of `window` length.
///
/// `acquire` blocks until a slot frees up; the window length is a config
/// value (60 s for a requests-per-minute limit) so tests can shrink it.
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    dispatches: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(limit: usize, window: Duration) -> Self {
        assert!(limit > 0, "rate limit must be positive");
        Self {
            limit,
            window,
            dispatches: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until a dispatch is allowed, then records it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut dispatches = self.dispatches.lock().unwrap();
                let now = Instant::now();
                while let Some(&front) = dispatches.front() {
                    if now.duration_since(front) >= self.window {
                        dispatches.pop_front();
                    } else {
                        break;
                    }
                }
                if dispatches.len() < self.limit {
                    dispatches.push_back(now);
                    return;
                }
                let oldest = *dispatches.front().expect("queue is full, so nonempty");
                self.window
                    .checked_sub(now.duration_since(oldest))
                    .unwrap_or(Duration::ZERO)
            };
            std::thread::sleep(wait.max(Duration::from_millis(1)));
        }
    }
}

/// Counting semaphore bounding in-flight live requests.
pub struct InFlightGate {
    capacity: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlightGate {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "in-flight capacity must be positive");
        Self {
            capacity,
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InFlightPermit<'_> {
        let mut active = self.active.lock().unwrap();
        while *active >= self.capacity {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        InFlightPermit { gate: self }
    }
}

pub struct InFlightPermit<'a> {
    gate: &'a InFlightGate,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut active = self.gate.active.lock().unwrap();
        *active -= 1;
        self.gate.freed.notify_one();
    }
}
