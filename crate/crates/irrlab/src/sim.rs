//! Order-preserving latency injection.
//!
//! Delaying a message stream naively — one message at a time — lets a
//! backlog form whenever messages arrive faster than the delay drains them,
//! so later messages wait longer than earlier ones. The asynchronous
//! simulator here delays every message concurrently instead, and restores
//! ordering at release time with a sequence-number gate: a message is
//! released only once every lower-numbered message has been released.
//! Inter-arrival spacing is preserved and the added delay stays constant.
//!
//! The synchronous variant is also provided for contrast; its per-message
//! delay grows linearly with the backlog.

use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::timing::{precise_sleep_until, sleep_until};

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("simulator is shut down; message rejected")]
    ShutDown,
}

/// Whether delayed messages are processed concurrently (order restored at a
/// release gate) or strictly one at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulatorMode {
    Asynchronous,
    Synchronous,
}

impl SimulatorMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "async" | "asynchronous" => Some(SimulatorMode::Asynchronous),
            "sync" | "synchronous" => Some(SimulatorMode::Synchronous),
            _ => None,
        }
    }
}

/// A released message together with the sequence number it was assigned at
/// admission. Numbers are dense and 1-based: the n-th admitted message
/// carries number n.
#[derive(Debug)]
pub struct LatencySimulatorResult<T> {
    pub message: T,
    pub message_number: u64,
}

type Handler<T> = Arc<dyn Fn(&LatencySimulatorResult<T>) + Send + Sync>;

/// Opaque receipt for a registered ready-handler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subscription(usize);

struct Counters {
    /// Messages admitted so far.
    received: u64,
    /// Messages released so far; never exceeds `received`.
    processed: u64,
    shutdown: bool,
}

struct Inner<T> {
    counters: Mutex<Counters>,
    /// Signalled whenever `processed` advances or shutdown begins; release
    /// tasks block here instead of polling.
    gate: Condvar,
    handlers: Mutex<Vec<Handler<T>>>,
}

impl<T> Inner<T> {
    fn fire(&self, result: &LatencySimulatorResult<T>) {
        let handlers: Vec<Handler<T>> = self.handlers.lock().unwrap().clone();
        for h in &handlers {
            h(result);
        }
    }

    /// Marks one message processed and wakes waiters.
    fn complete_one(&self) {
        let mut c = self.counters.lock().unwrap();
        c.processed += 1;
        drop(c);
        self.gate.notify_all();
    }
}

/// Asynchronous ordered delay stage.
///
/// [`delay`](Self::delay) admits a message and schedules its release after
/// the given duration. Releases always occur in admission order: a release
/// may be held back by an earlier message still in flight (its delay runs
/// long, never short), but with a constant duration the inter-release
/// spacing mirrors the inter-admission spacing.
///
/// Safe to call from any number of threads; ready-handlers are invoked one
/// at a time, in admission order.
pub struct LatencySimulator<T: Send + 'static> {
    inner: Arc<Inner<T>>,
}

impl<T: Send + 'static> LatencySimulator<T> {
    pub fn new() -> Self {
        Self {
            inner: Arc::new(Inner {
                counters: Mutex::new(Counters {
                    received: 0,
                    processed: 0,
                    shutdown: false,
                }),
                gate: Condvar::new(),
                handlers: Mutex::new(Vec::new()),
            }),
        }
    }

    /// Registers a handler invoked once per released message.
    pub fn on_message_ready<F>(&self, handler: F) -> Subscription
    where
        F: Fn(&LatencySimulatorResult<T>) + Send + Sync + 'static,
    {
        let mut handlers = self.inner.handlers.lock().unwrap();
        handlers.push(Arc::new(handler));
        Subscription(handlers.len() - 1)
    }

    /// Admits a message and schedules its release after `duration`.
    /// Returns the assigned sequence number.
    ///
    /// A zero-duration message whose turn has already come is released
    /// synchronously in the caller's context; otherwise it queues behind the
    /// ordering gate like any other message, so a short delay can never
    /// overtake a longer one admitted earlier.
    pub fn delay(&self, message: T, duration: Duration) -> Result<u64, SimulatorError> {
        let deadline = Instant::now() + duration;
        let number;
        let release_now;
        {
            let mut c = self.inner.counters.lock().unwrap();
            if c.shutdown {
                return Err(SimulatorError::ShutDown);
            }
            c.received += 1;
            number = c.received;
            release_now = duration.is_zero() && c.processed + 1 == number;
        }

        if release_now {
            let result = LatencySimulatorResult {
                message,
                message_number: number,
            };
            self.inner.fire(&result);
            self.inner.complete_one();
            return Ok(number);
        }

        let inner = Arc::clone(&self.inner);
        std::thread::spawn(move || {
            precise_sleep_until(deadline);
            {
                let mut c = inner.counters.lock().unwrap();
                while c.processed + 1 != number {
                    c = inner.gate.wait(c).unwrap();
                }
                // This task is now the unique next-in-line release; nothing
                // else can advance `processed` until it does.
            }
            let result = LatencySimulatorResult {
                message,
                message_number: number,
            };
            inner.fire(&result);
            inner.complete_one();
        });
        Ok(number)
    }

    /// Stops admissions and blocks until every in-flight message has been
    /// released (in order). Idempotent.
    pub fn shutdown(&self) {
        let mut c = self.inner.counters.lock().unwrap();
        c.shutdown = true;
        while c.processed != c.received {
            c = self.inner.gate.wait(c).unwrap();
        }
    }

    /// Current (received, processed) counters.
    pub fn counters(&self) -> (u64, u64) {
        let c = self.inner.counters.lock().unwrap();
        (c.received, c.processed)
    }
}

impl<T: Send + 'static> Default for LatencySimulator<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// A message released by [`delay_synchronous`] with its observed total
/// delay, admission to release.
#[derive(Debug)]
pub struct SyncRelease<T> {
    pub message: T,
    pub observed_delay: Duration,
}

/// Synchronous (naive) delay stage: messages are generated at fixed spacing
/// `sd` and processed strictly one at a time, each holding the next back.
///
/// When `sd < nl` a backlog forms and the observed delay of message `i`
/// grows as `nl + i * (nl - sd)`; when `sd >= nl` every message simply
/// waits `nl`.
pub fn delay_synchronous<T: Send>(
    messages: Vec<T>,
    nl: Duration,
    sd: Duration,
) -> Vec<SyncRelease<T>> {
    if messages.is_empty() {
        return Vec::new();
    }
    let count = messages.len();
    let start = Instant::now();

    std::thread::scope(|scope| {
        let (tx, rx) = std::sync::mpsc::channel::<(T, Instant)>();
        scope.spawn(move || {
            for (i, message) in messages.into_iter().enumerate() {
                sleep_until(start + sd * i as u32);
                let admitted = Instant::now();
                if tx.send((message, admitted)).is_err() {
                    return;
                }
            }
        });

        let mut released = Vec::with_capacity(count);
        while let Ok((message, admitted)) = rx.recv() {
            // One at a time: the whole queue waits while this one sleeps.
            precise_sleep_until(Instant::now() + nl);
            released.push(SyncRelease {
                message,
                observed_delay: admitted.elapsed(),
            });
        }
        released
    })
}
