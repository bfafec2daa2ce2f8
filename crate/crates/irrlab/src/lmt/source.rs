//! Frame sources the measurement tool can watch.
//!
//! A source models a display surface refreshing at a fixed rate: reading
//! blocks until the next refresh boundary (never longer than one period)
//! and returns the region pixels as of that instant. Shipped sources:
//!
//! - [`ColorFlipSource`] — a solid window that toggles color a programmed
//!   latency after each injected interaction; the classic observer-tool
//!   calibration scene.
//! - [`NoisySource`] — per-frame Gaussian noise over a base level, with
//!   injectable large shifts; exercises detection when no two frames are
//!   ever identical.
//! - [`SurfaceSource`] — reads a [`SharedSurface`] published by the testbed
//!   client, in-process.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::{PixelBuffer, Region, SharedSurface};
use crate::lmt::LmtError;
use crate::timing::{precise_sleep_until, SessionClock};

/// One paced read: the region pixels and the clock timestamp at which they
/// were sampled.
#[derive(Debug, Clone)]
pub struct FrameSample {
    pub pixels: PixelBuffer,
    pub timestamp_us: u64,
}

/// A readable region of a refreshing display.
pub trait FrameSource: Send + Sync {
    /// Blocks until the next refresh boundary, then samples the region.
    /// Never blocks longer than one refresh period.
    fn next_frame(&self) -> Result<FrameSample, LmtError>;

    fn region(&self) -> Region;

    fn refresh_hz(&self) -> f64;
}

/// A source whose scene reacts to injected interactions.
pub trait InteractiveSource: FrameSource {
    /// Injects one interaction into the scene. The visible change appears
    /// after the source's programmed latency.
    fn trigger(&self);
}

/// Paces reads to refresh boundaries on a fixed grid.
struct Pacer {
    clock: SessionClock,
    period: Duration,
    state: Mutex<Instant>,
}

impl Pacer {
    fn new(clock: SessionClock, refresh_hz: f64) -> Self {
        let period = Duration::from_secs_f64(1.0 / refresh_hz);
        Self {
            clock,
            period,
            state: Mutex::new(Instant::now() + period),
        }
    }

    /// Waits for the next boundary and returns its clock timestamp.
    fn wait_refresh(&self) -> u64 {
        let deadline = {
            let mut next = self.state.lock().unwrap();
            let now = Instant::now();
            if *next <= now {
                // Reads lagged behind the refresh rate; realign to the next
                // future boundary instead of bursting.
                *next = now + self.period;
            }
            let deadline = *next;
            *next += self.period;
            deadline
        };
        precise_sleep_until(deadline);
        self.clock.now_us()
    }
}

/// Solid-color window that toggles between two colors a programmed latency
/// after every injected interaction.
pub struct ColorFlipSource {
    pacer: Pacer,
    region: Region,
    refresh_hz: f64,
    latency: Duration,
    colors: [[u8; 3]; 2],
    /// Clock timestamps at which injected flips become visible.
    flips_visible_at: Mutex<Vec<u64>>,
}

impl ColorFlipSource {
    pub fn new(clock: SessionClock, region: Region, refresh_hz: f64, latency: Duration) -> Self {
        Self {
            pacer: Pacer::new(clock, refresh_hz),
            region,
            refresh_hz,
            latency,
            colors: [[0, 200, 0], [0, 0, 220]],
            flips_visible_at: Mutex::new(Vec::new()),
        }
    }

    fn color_at(&self, timestamp_us: u64) -> [u8; 3] {
        let visible = self
            .flips_visible_at
            .lock()
            .unwrap()
            .iter()
            .filter(|&&t| t <= timestamp_us)
            .count();
        self.colors[visible % 2]
    }
}

impl FrameSource for ColorFlipSource {
    fn next_frame(&self) -> Result<FrameSample, LmtError> {
        let timestamp_us = self.pacer.wait_refresh();
        Ok(FrameSample {
            pixels: PixelBuffer::filled(
                self.region.width,
                self.region.height,
                self.color_at(timestamp_us),
            ),
            timestamp_us,
        })
    }

    fn region(&self) -> Region {
        self.region
    }

    fn refresh_hz(&self) -> f64 {
        self.refresh_hz
    }
}

impl InteractiveSource for ColorFlipSource {
    fn trigger(&self) {
        let visible_at = self.pacer.clock.now_us() + self.latency.as_micros() as u64;
        self.flips_visible_at.lock().unwrap().push(visible_at);
    }
}

/// Gaussian noise over a base level that never repeats a frame, with
/// injected interactions shifting the base — the "swaying grass" scene
/// where per-pixel comparison is useless but a PSNR drop stands out.
pub struct NoisySource {
    pacer: Pacer,
    region: Region,
    refresh_hz: f64,
    sigma: f64,
    base: u8,
    shift: u8,
    state: Mutex<NoisyState>,
}

struct NoisyState {
    rng: ChaCha8Rng,
    shifts_visible_at: Vec<u64>,
}

impl NoisySource {
    /// `sigma` is the per-channel noise standard deviation (≈1.0 puts the
    /// rest PSNR near 45 dB); `shift` is the base offset applied by each
    /// injected interaction (≈26 puts the event PSNR near 20 dB).
    pub fn new(
        clock: SessionClock,
        region: Region,
        refresh_hz: f64,
        sigma: f64,
        shift: u8,
        seed: u64,
    ) -> Self {
        Self {
            pacer: Pacer::new(clock, refresh_hz),
            region,
            refresh_hz,
            sigma,
            base: 128,
            shift,
            state: Mutex::new(NoisyState {
                rng: ChaCha8Rng::seed_from_u64(seed),
                shifts_visible_at: Vec::new(),
            }),
        }
    }
}

impl FrameSource for NoisySource {
    fn next_frame(&self) -> Result<FrameSample, LmtError> {
        let timestamp_us = self.pacer.wait_refresh();
        let mut state = self.state.lock().unwrap();
        let shifted = state
            .shifts_visible_at
            .iter()
            .filter(|&&t| t <= timestamp_us)
            .count()
            % 2
            == 1;
        let level = if shifted {
            self.base + self.shift
        } else {
            self.base
        };

        let n = (self.region.width * self.region.height * 3) as usize;
        let mut data = Vec::with_capacity(n);
        // Box-Muller, two samples per draw.
        let mut spare: Option<f64> = None;
        for _ in 0..n {
            let g = match spare.take() {
                Some(g) => g,
                None => {
                    let u1: f64 = state.rng.gen_range(f64::MIN_POSITIVE..1.0);
                    let u2: f64 = state.rng.gen_range(0.0..std::f64::consts::TAU);
                    let r = (-2.0 * u1.ln()).sqrt();
                    spare = Some(r * u2.sin());
                    r * u2.cos()
                }
            };
            data.push((f64::from(level) + self.sigma * g).round().clamp(0.0, 255.0) as u8);
        }
        drop(state);
        Ok(FrameSample {
            pixels: PixelBuffer::from_raw(self.region.width, self.region.height, data)
                .expect("length computed from region"),
            timestamp_us,
        })
    }

    fn region(&self) -> Region {
        self.region
    }

    fn refresh_hz(&self) -> f64 {
        self.refresh_hz
    }
}

impl InteractiveSource for NoisySource {
    fn trigger(&self) {
        let now = self.pacer.clock.now_us();
        self.state.lock().unwrap().shifts_visible_at.push(now);
    }
}

/// Reads the testbed client's published display surface, cropped to the
/// region of interest.
pub struct SurfaceSource {
    pacer: Pacer,
    surface: SharedSurface,
    region: Region,
    refresh_hz: f64,
}

impl SurfaceSource {
    pub fn new(clock: SessionClock, surface: SharedSurface, region: Region, refresh_hz: f64) -> Self {
        Self {
            pacer: Pacer::new(clock, refresh_hz),
            surface,
            region,
            refresh_hz,
        }
    }
}

impl FrameSource for SurfaceSource {
    fn next_frame(&self) -> Result<FrameSample, LmtError> {
        let timestamp_us = self.pacer.wait_refresh();
        let pixels = self.surface.snapshot_region(self.region).ok_or_else(|| {
            LmtError::SourceFailed(format!(
                "region {:?} does not fit the published frame",
                self.region
            ))
        })?;
        Ok(FrameSample {
            pixels,
            timestamp_us,
        })
    }

    fn region(&self) -> Region {
        self.region
    }

    fn refresh_hz(&self) -> f64 {
        self.refresh_hz
    }
}
