//! Arithmetic over the end-to-end interaction latency decomposition.
//!
//! An interaction's life is described by eight timeline points (physical
//! input through pixels visible) and, equivalently, by seven component
//! latencies: input device, client pre-send, network up, server, network
//! down, client post-receive and display. The operations here compose,
//! invert and estimate interaction latency from either representation.
//!
//! Timestamps are integer microseconds from a monotonic clock; durations are
//! fractional milliseconds. Storing timestamps in microseconds avoids
//! rounding drift while matching the two-decimal millisecond precision the
//! rest of the crate reports.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("timestamp {0} is unmeasured")]
    Unmeasured(&'static str),
    #[error("timestamps must be monotone nondecreasing: {point} = {value} breaks ordering")]
    NotMonotone { point: &'static str, value: u64 },
    #[error("negative residual {residual_ms} ms: component sum exceeds total interaction latency")]
    NegativeResidual { residual_ms: f64 },
    #[error("{name} must be a nonnegative finite duration, got {value}")]
    InvalidDuration { name: &'static str, value: f64 },
}

/// The eight measurement points of one interaction's life, in timeline
/// order: physical input, input event raised, interaction leaves client,
/// server receives, server response transmission starts, response arrives
/// at client, pixels handed to display, pixels visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimelinePoint {
    T0 = 0,
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
}

impl TimelinePoint {
    pub const ALL: [TimelinePoint; 8] = [
        TimelinePoint::T0,
        TimelinePoint::T1,
        TimelinePoint::T2,
        TimelinePoint::T3,
        TimelinePoint::T4,
        TimelinePoint::T5,
        TimelinePoint::T6,
        TimelinePoint::T7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TimelinePoint::T0 => "t0",
            TimelinePoint::T1 => "t1",
            TimelinePoint::T2 => "t2",
            TimelinePoint::T3 => "t3",
            TimelinePoint::T4 => "t4",
            TimelinePoint::T5 => "t5",
            TimelinePoint::T6 => "t6",
            TimelinePoint::T7 => "t7",
        }
    }
}

/// Timestamps (microseconds since session start) for one interaction.
///
/// Points that pure software cannot observe — the physical input, the
/// device event, the final pixel flip — stay unmeasured rather than zero;
/// operations that need them fail naming the missing point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionTimeline {
    stamps: [Option<u64>; 8],
}

impl InteractionTimeline {
    /// A timeline with every point unmeasured.
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a timestamp, enforcing monotone nondecreasing order against
    /// the points already measured.
    pub fn with(mut self, point: TimelinePoint, micros: u64) -> Result<Self, ModelError> {
        let idx = point as usize;
        for (i, stamp) in self.stamps.iter().enumerate() {
            if let Some(v) = stamp {
                if i < idx && *v > micros {
                    return Err(ModelError::NotMonotone {
                        point: point.name(),
                        value: micros,
                    });
                }
                if i > idx && *v < micros {
                    return Err(ModelError::NotMonotone {
                        point: point.name(),
                        value: micros,
                    });
                }
            }
        }
        self.stamps[idx] = Some(micros);
        Ok(self)
    }

    pub fn get(&self, point: TimelinePoint) -> Option<u64> {
        self.stamps[point as usize]
    }

    fn require(&self, point: TimelinePoint) -> Result<u64, ModelError> {
        self.get(point).ok_or(ModelError::Unmeasured(point.name()))
    }
}

/// The seven component latencies, each a nonnegative duration in
/// milliseconds. Client latency splits into a pre-send and a post-receive
/// leg, network latency into an up and a down leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub idl: f64,
    pub cl1: f64,
    pub nl_up: f64,
    pub sl: f64,
    pub nl_down: f64,
    pub cl2: f64,
    pub dl: f64,
}

impl LatencyBreakdown {
    pub fn new(
        idl: f64,
        cl1: f64,
        nl_up: f64,
        sl: f64,
        nl_down: f64,
        cl2: f64,
        dl: f64,
    ) -> Result<Self, ModelError> {
        let b = Self {
            idl,
            cl1,
            nl_up,
            sl,
            nl_down,
            cl2,
            dl,
        };
        for (name, value) in [
            ("idl", idl),
            ("cl1", cl1),
            ("nl_up", nl_up),
            ("sl", sl),
            ("nl_down", nl_down),
            ("cl2", cl2),
            ("dl", dl),
        ] {
            check_duration(name, value)?;
        }
        Ok(b)
    }

    /// Total client latency, both legs.
    pub fn cl(&self) -> f64 {
        self.cl1 + self.cl2
    }

    /// Total network latency, both legs.
    pub fn nl(&self) -> f64 {
        self.nl_up + self.nl_down
    }

    /// Splits a round-trip network latency evenly into the up and down legs,
    /// for when only the round-trip figure (e.g. a ping) is known.
    pub fn with_round_trip_nl(mut self, nl_ms: f64) -> Result<Self, ModelError> {
        check_duration("nl", nl_ms)?;
        self.nl_up = 0.5 * nl_ms;
        self.nl_down = 0.5 * nl_ms;
        Ok(self)
    }
}

/// Inputs for the back-of-envelope latency estimate: round-trip network
/// time plus mean server render time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughEstimateInputs {
    pub rtt_ms: f64,
    pub mean_render_ms: f64,
}

impl RoughEstimateInputs {
    pub fn new(rtt_ms: f64, mean_render_ms: f64) -> Result<Self, ModelError> {
        check_duration("rtt_ms", rtt_ms)?;
        check_duration("mean_render_ms", mean_render_ms)?;
        Ok(Self {
            rtt_ms,
            mean_render_ms,
        })
    }
}

/// A server-latency estimate derived from timestamps; `noisy` flags a
/// negative value, which measurement noise can produce since the network
/// term is itself an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlEstimate {
    pub sl_ms: f64,
    pub noisy: bool,
}

fn check_duration(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() || value < 0.0 {
        return Err(ModelError::InvalidDuration { name, value });
    }
    Ok(())
}

/// Total interaction latency as the sum of the seven components.
pub fn total_il(b: &LatencyBreakdown) -> f64 {
    b.idl + b.cl1 + b.nl_up + b.sl + b.nl_down + b.cl2 + b.dl
}

/// Interaction latency straight from the timeline: the span from physical
/// input to pixels visible, in milliseconds.
pub fn il_from_timeline(tl: &InteractionTimeline) -> Result<f64, ModelError> {
    let t0 = tl.require(TimelinePoint::T0)?;
    let t7 = tl.require(TimelinePoint::T7)?;
    Ok((t7 - t0) as f64 / 1000.0)
}

/// Server latency as the residual after removing every other component
/// from the total.
pub fn sl_residual(il: f64, idl: f64, cl: f64, nl: f64, dl: f64) -> Result<f64, ModelError> {
    residual(il, idl + cl + nl + dl)
}

/// Display latency as the residual after removing every other component
/// from the total.
pub fn dl_residual(il: f64, idl: f64, cl: f64, nl: f64, sl: f64) -> Result<f64, ModelError> {
    residual(il, idl + cl + nl + sl)
}

fn residual(il: f64, others: f64) -> Result<f64, ModelError> {
    let r = il - others;
    if r < 0.0 {
        return Err(ModelError::NegativeResidual { residual_ms: r });
    }
    Ok(r)
}

/// Server latency from the client-side send/receive timestamps when display
/// latency is unknown: the span t2→t5 minus the round-trip network time,
/// half attributed to each leg.
///
/// The physical-input timestamp appears on both sides of the subtraction
/// and cancels, so it may stay unmeasured. A negative value is flagged as
/// noisy rather than rejected; the network term is only an estimate.
pub fn sl_from_timestamps(tl: &InteractionTimeline, nl_ms: f64) -> Result<SlEstimate, ModelError> {
    check_duration("nl", nl_ms)?;
    let t2 = tl.require(TimelinePoint::T2)?;
    let t5 = tl.require(TimelinePoint::T5)?;
    let sl_ms = (t5 - t2) as f64 / 1000.0 - nl_ms;
    Ok(SlEstimate {
        sl_ms,
        noisy: sl_ms < 0.0,
    })
}

/// Expected delay of interaction `i` (0-based) through a synchronous,
/// one-at-a-time delay stage: the base delay plus the backlog accumulated
/// by earlier interactions.
///
/// When the send spacing is at least the delay, no backlog ever forms and
/// the growth term is clamped at zero.
pub fn synchronous_backlog_delay(nl_ms: f64, sd_ms: f64, i: u64) -> f64 {
    let growth = (i as f64) * (nl_ms - sd_ms);
    nl_ms + growth.max(0.0)
}

/// Rough expected interaction latency: round-trip network time plus mean
/// render time.
pub fn rough_il_estimate(inputs: &RoughEstimateInputs) -> f64 {
    inputs.rtt_ms + inputs.mean_render_ms
}
