//! Clocks and sleep primitives.
//!
//! Everything that records a timestamp in this crate does so against a
//! [`SessionClock`], a monotonic clock anchored at session start, so that
//! timestamps taken on different threads (client, capture loop, injectors)
//! are directly comparable.

use std::time::{Duration, Instant};

/// How long before a deadline the precise sleep switches from the OS sleep
/// to spinning. Non-realtime kernels overshoot `thread::sleep` by up to a
/// millisecond or so; spinning the final stretch keeps releases inside the
/// ±2 ms contract.
const SPIN_SLACK: Duration = Duration::from_millis(2);

/// Monotonic clock anchored at an origin instant.
///
/// Cloning is cheap; clones share the same origin and therefore the same
/// timeline.
#[derive(Debug, Clone, Copy)]
pub struct SessionClock {
    origin: Instant,
}

impl SessionClock {
    /// Starts a new clock anchored at the current instant.
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }

    /// Microseconds elapsed since the clock origin.
    pub fn now_us(&self) -> u64 {
        self.origin.elapsed().as_micros() as u64
    }

    /// The instant this clock is anchored at.
    pub fn origin(&self) -> Instant {
        self.origin
    }

    /// Converts a clock timestamp back into an instant.
    pub fn instant_at(&self, timestamp_us: u64) -> Instant {
        self.origin + Duration::from_micros(timestamp_us)
    }
}

impl Default for SessionClock {
    fn default() -> Self {
        Self::new()
    }
}

/// Sleeps until `deadline` using plain OS sleeps. May overshoot by the
/// scheduler granularity; never wakes early.
pub fn sleep_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        std::thread::sleep(deadline - now);
    }
}

/// Sleeps until `deadline` with sub-millisecond accuracy: OS sleep for the
/// bulk, then a spin-wait for the final [`SPIN_SLACK`].
pub fn precise_sleep_until(deadline: Instant) {
    let coarse_deadline = deadline.checked_sub(SPIN_SLACK);
    if let Some(coarse) = coarse_deadline {
        let now = Instant::now();
        if coarse > now {
            std::thread::sleep(coarse - now);
        }
    }
    while Instant::now() < deadline {
        std::hint::spin_loop();
    }
}

/// Sleeps for `duration` with sub-millisecond accuracy.
pub fn precise_sleep(duration: Duration) {
    precise_sleep_until(Instant::now() + duration);
}

/// Fixed-period tick scheduler that does not compensate for overruns: a tick
/// that finishes late pushes the schedule forward instead of firing a burst
/// of catch-up ticks.
#[derive(Debug)]
pub struct Ticker {
    next: Instant,
    period: Duration,
}

impl Ticker {
    pub fn new(period: Duration) -> Self {
        Self {
            next: Instant::now() + period,
            period,
        }
    }

    /// Blocks until the next tick and returns the instant it fired.
    pub fn wait(&mut self) -> Instant {
        sleep_until(self.next);
        let now = Instant::now();
        self.next += self.period;
        if self.next < now {
            // Overran a whole period; realign rather than burst.
            self.next = now + self.period;
        }
        now
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_is_monotonic_and_shared_between_clones() {
        let clock = SessionClock::new();
        let other = clock;
        let a = clock.now_us();
        let b = other.now_us();
        assert!(b >= a);
    }

    #[test]
    fn precise_sleep_never_wakes_early() {
        for ms in [0u64, 1, 5, 20] {
            let d = Duration::from_millis(ms);
            let start = Instant::now();
            precise_sleep(d);
            assert!(start.elapsed() >= d);
        }
    }

    #[test]
    fn precise_sleep_overshoot_is_small() {
        let d = Duration::from_millis(25);
        let start = Instant::now();
        precise_sleep(d);
        let overshoot = start.elapsed() - d;
        // Generous bound; the acceptance suite checks the tight contract.
        assert!(overshoot < Duration::from_millis(10), "overshoot {overshoot:?}");
    }

    #[test]
    fn ticker_does_not_burst_after_overrun() {
        let mut ticker = Ticker::new(Duration::from_millis(5));
        ticker.wait();
        std::thread::sleep(Duration::from_millis(20));
        let a = ticker.wait();
        let b = ticker.wait();
        assert!(b - a >= Duration::from_millis(4));
    }
}
