//! The testbed client: submits interactions tagged with fresh GUIDs and a
//! running stopwatch, and drains arrived results one per tick, stopping the
//! matching stopwatch to produce an interaction-latency measurement.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::frame::SharedSurface;
use crate::testbed::codec::FrameCodec;
use crate::testbed::protocol::{write_message, Guid, Interaction, NetworkMessage};
use crate::testbed::TestbedError;
use crate::timing::SessionClock;

/// The client frame buffer: arrived server messages awaiting the tick loop.
/// One producer (the network receive thread), one consumer (the tick loop).
pub type FrameQueue = Arc<Mutex<VecDeque<NetworkMessage>>>;

/// An interaction whose result has not yet arrived: the GUID it travels
/// under, the stopwatch started at submission, and a slot for the returned
/// image bytes.
#[derive(Debug)]
struct PendingInteraction {
    index: usize,
    interaction: Interaction,
    started: Instant,
    submit_us: u64,
}

/// A finished measurement. `frame` holds the encoded result image when the
/// client is configured to retain frames (useful for post-hoc debugging; it
/// plays no part in the measurement itself).
#[derive(Debug, Clone)]
pub struct CompletedInteraction {
    pub index: usize,
    pub id: Guid,
    pub interaction: Interaction,
    pub submit_us: u64,
    pub complete_us: u64,
    pub il_ms: f64,
    pub frame: Vec<u8>,
}

/// Client-side state: the interaction buffer (GUID → pending record), the
/// frame buffer shared with the receive thread, completed results, and the
/// display surface the latest decoded frame is published to.
pub struct Client<W: Write> {
    writer: W,
    clock: SessionClock,
    codec: FrameCodec,
    display: SharedSurface,
    cfb: FrameQueue,
    cib: HashMap<Guid, PendingInteraction>,
    results: Vec<CompletedInteraction>,
    protocol_errors: u64,
    submitted: usize,
    retain_frames: bool,
}

impl<W: Write> Client<W> {
    pub fn new(
        writer: W,
        clock: SessionClock,
        codec: FrameCodec,
        display: SharedSurface,
        cfb: FrameQueue,
        retain_frames: bool,
    ) -> Self {
        Self {
            writer,
            clock,
            codec,
            display,
            cfb,
            cib: HashMap::new(),
            results: Vec::new(),
            protocol_errors: 0,
            submitted: 0,
            retain_frames,
        }
    }

    /// Submits one interaction: creates a pending record with a fresh GUID
    /// and a started stopwatch, stores it in the interaction buffer, and
    /// sends the request. Only 'a' and 'd' are valid; anything else is
    /// rejected before any state change or send.
    pub fn submit_interaction(&mut self, c: char) -> Result<Guid, TestbedError> {
        let interaction = match Interaction::from_char(c) {
            Some(i @ (Interaction::RotateLeft | Interaction::RotateRight)) => i,
            _ => return Err(TestbedError::InvalidInteraction(c)),
        };
        let id = Guid::random();
        let pending = PendingInteraction {
            index: self.submitted,
            interaction,
            started: Instant::now(),
            submit_us: self.clock.now_us(),
        };
        write_message(&mut self.writer, &NetworkMessage::request(interaction, id))?;
        self.cib.insert(id, pending);
        self.submitted += 1;
        Ok(id)
    }

    /// Sends the final shutdown request.
    pub fn send_shutdown(&mut self) -> Result<(), TestbedError> {
        write_message(&mut self.writer, &NetworkMessage::shutdown(Guid::random()))?;
        Ok(())
    }

    /// One tick of the client update loop: dequeues at most one arrived
    /// message, stops its stopwatch, records the measurement and publishes
    /// the decoded frame. Returns true when a measurement completed.
    ///
    /// A message whose GUID has no pending record is a protocol error; it is
    /// counted and dropped without touching the results.
    pub fn fixed_update(&mut self) -> bool {
        let Some(message) = self.cfb.lock().unwrap().pop_front() else {
            return false;
        };
        let Some(pending) = self.cib.remove(&message.id) else {
            self.protocol_errors += 1;
            return false;
        };
        let elapsed = pending.started.elapsed();
        let complete_us = self.clock.now_us();
        self.results.push(CompletedInteraction {
            index: pending.index,
            id: message.id,
            interaction: pending.interaction,
            submit_us: pending.submit_us,
            complete_us,
            il_ms: elapsed.as_secs_f64() * 1000.0,
            frame: if self.retain_frames {
                message.frame.clone()
            } else {
                Vec::new()
            },
        });
        match self.codec.decode(&message.frame) {
            Ok(frame) => self.display.publish(frame),
            Err(_) => self.protocol_errors += 1,
        }
        true
    }

    pub fn submitted(&self) -> usize {
        self.submitted
    }

    pub fn pending(&self) -> usize {
        self.cib.len()
    }

    pub fn protocol_errors(&self) -> u64 {
        self.protocol_errors
    }

    pub fn results(&self) -> &[CompletedInteraction] {
        &self.results
    }

    pub fn into_results(self) -> Vec<CompletedInteraction> {
        self.results
    }
}
