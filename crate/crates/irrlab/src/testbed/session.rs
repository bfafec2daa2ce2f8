//! A full measurement session: connect, submit interactions at a fixed
//! rate, drain results on a millisecond tick, and shut the server down once
//! every pending interaction has been accounted for.

use std::collections::VecDeque;
use std::net::TcpStream;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::frame::SharedSurface;
use crate::testbed::client::{Client, CompletedInteraction, FrameQueue};
use crate::testbed::codec::FrameCodec;
use crate::testbed::protocol::{read_message, MessageKind, ProtocolError};
use crate::testbed::TestbedError;
use crate::timing::{SessionClock, Ticker};

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub host: String,
    pub port: u16,
    /// Interaction submissions per second.
    pub rate_hz: f64,
    /// Validated interaction characters, submission order.
    pub template: Vec<char>,
    /// Abort when no submission or completion happens for this long.
    pub timeout: Duration,
    /// Client update tick period.
    pub tick: Duration,
    pub codec: FrameCodec,
    pub clock: SessionClock,
    /// Where decoded frames are published (shared with any observer).
    pub display: SharedSurface,
    /// Keep each result's encoded frame bytes on the measurement record.
    pub retain_frames: bool,
}

impl SessionConfig {
    pub fn new(host: impl Into<String>, port: u16, template: Vec<char>) -> Self {
        Self {
            host: host.into(),
            port,
            rate_hz: 10.0,
            template,
            timeout: Duration::from_secs(30),
            tick: Duration::from_millis(1),
            codec: FrameCodec::Raw,
            clock: SessionClock::new(),
            display: SharedSurface::new(256, 256),
            retain_frames: true,
        }
    }
}

#[derive(Debug)]
pub struct SessionReport {
    /// One measurement per submitted interaction, in submission order.
    pub measurements: Vec<CompletedInteraction>,
    pub protocol_errors: u64,
    /// Set when the session aborted on the progress timeout and the
    /// measurements are incomplete.
    pub partial: bool,
}

enum ReaderExit {
    ShutdownEcho,
    Closed,
}

/// Runs one session against a reachable server and returns the
/// measurements in submission order.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport, TestbedError> {
    let stream = TcpStream::connect((config.host.as_str(), config.port))?;
    stream.set_nodelay(true)?;

    let cfb: FrameQueue = Arc::new(Mutex::new(VecDeque::new()));
    let (reader_tx, reader_rx) = mpsc::channel::<ReaderExit>();

    // Receive thread: decode arriving messages into the frame buffer; the
    // tick loop below is the only consumer.
    let reader_stream = stream.try_clone()?;
    let reader_cfb = Arc::clone(&cfb);
    let reader = std::thread::spawn(move || {
        let mut stream = reader_stream;
        loop {
            match read_message(&mut stream) {
                Ok(message) => match message.kind {
                    MessageKind::Shutdown => {
                        let _ = reader_tx.send(ReaderExit::ShutdownEcho);
                        return;
                    }
                    _ => reader_cfb.lock().unwrap().push_back(message),
                },
                Err(ProtocolError::ConnectionClosed) | Err(ProtocolError::Io(_)) => {
                    let _ = reader_tx.send(ReaderExit::Closed);
                    return;
                }
                Err(_) => {
                    let _ = reader_tx.send(ReaderExit::Closed);
                    return;
                }
            }
        }
    });

    let mut client = Client::new(
        stream.try_clone()?,
        config.clock,
        config.codec,
        config.display.clone(),
        Arc::clone(&cfb),
        config.retain_frames,
    );

    let total = config.template.len();
    let spacing = Duration::from_secs_f64(1.0 / config.rate_hz.max(1e-6));
    let start = Instant::now();
    let mut ticker = Ticker::new(config.tick);
    let mut next_submit = 0usize;
    let mut last_progress = Instant::now();
    let mut partial = false;

    loop {
        ticker.wait();

        if next_submit < total && Instant::now() >= start + spacing.mul_f64(next_submit as f64) {
            client.submit_interaction(config.template[next_submit])?;
            next_submit += 1;
            last_progress = Instant::now();
        }

        if client.fixed_update() {
            last_progress = Instant::now();
        }

        let accounted = client.results().len() as u64 + client.protocol_errors();
        if next_submit == total && accounted >= total as u64 && client.pending() == 0 {
            break;
        }
        // An unknown-GUID drop leaves its pending record behind forever;
        // treat that as no further progress and let the timeout fire.
        if last_progress.elapsed() > config.timeout {
            partial = true;
            break;
        }
    }

    client.send_shutdown()?;
    let echo_wait = config.timeout.min(Duration::from_secs(10));
    match reader_rx.recv_timeout(echo_wait) {
        Ok(ReaderExit::ShutdownEcho) | Ok(ReaderExit::Closed) => {}
        Err(_) => {
            // The echo never came; force the socket closed so the reader
            // thread can exit.
            let _ = stream.shutdown(std::net::Shutdown::Both);
        }
    }
    let _ = reader.join();

    let protocol_errors = client.protocol_errors();
    let mut measurements = client.into_results();
    measurements.sort_by_key(|m| m.index);
    Ok(SessionReport {
        measurements,
        protocol_errors,
        partial,
    })
}
