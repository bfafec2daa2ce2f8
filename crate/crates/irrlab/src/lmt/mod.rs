//! The observer-side latency measurement tool: watch a region of pixels,
//! compute PSNR between consecutive captures, detect interaction-caused
//! changes as sharp PSNR drops, and match them back to interaction
//! timestamps — without touching the system being measured.

pub mod detect;
pub mod metrics;
pub mod runner;
pub mod source;

pub use detect::{detect_changes, match_interactions, DetectionMode, MatchOutcome};
pub use metrics::{capture_psnr, mse, psnr};
pub use runner::{calibrate_capture, calibrate_threshold, run_lmt, LmtConfig, LmtOutcome, LmtReport};
pub use source::{ColorFlipSource, FrameSample, FrameSource, InteractiveSource, NoisySource, SurfaceSource};

use thiserror::Error;

use crate::frame::PixelBuffer;

#[derive(Debug, Error, PartialEq)]
pub enum LmtError {
    #[error("pixel grids have different dimensions: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("capture {0} has no PSNR assigned")]
    UnassignedPsnr(usize),
    #[error("calibration needs at least {needed} captures, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("threshold {0} dB outside the open interval (0, 100)")]
    InvalidTheta(f64),
    #[error("frame source failed: {0}")]
    SourceFailed(String),
}

/// One region-of-interest grab: the pixels, when they were sampled (global
/// monotonic clock, microseconds) and the PSNR relative to the previous
/// capture. The first capture of a run carries the sentinel PSNR of 100.
#[derive(Debug, Clone)]
pub struct Capture {
    pub pixels: PixelBuffer,
    pub timestamp_us: u64,
    pub psnr_db: Option<f64>,
}

/// One scripted interaction: when it was injected and a label for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    pub timestamp_us: u64,
    pub label: String,
}

/// How the threshold is chosen: calibrated from rest captures or pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaConfig {
    /// Mean rest PSNR minus the guard margin.
    Auto,
    Fixed(f64),
}
