//! Capture-loop orchestration: calibrate the capture period and threshold,
//! run the capture loop while scripted interactions are injected, then
//! detect changes and match them to the interaction timestamps.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::lmt::detect::{detect_changes, match_interactions, DetectionMode, MatchOutcome};
use crate::lmt::metrics::capture_psnr;
use crate::lmt::source::{FrameSource, InteractiveSource};
use crate::lmt::{Capture, InteractionEvent, LmtError, ThetaConfig};
use crate::timing::{precise_sleep_until, SessionClock};

#[derive(Debug, Clone)]
pub struct LmtConfig {
    pub mode: DetectionMode,
    pub theta: ThetaConfig,
    /// Back-to-back captures used to estimate the capture period and the
    /// rest PSNR level.
    pub calibration_samples: usize,
    /// Margin subtracted from the mean rest PSNR when the threshold is
    /// auto-calibrated, so rest noise sits above it.
    pub guard_db: f64,
    /// How far after an event a detection may sit and still be matched.
    pub match_window_ms: f64,
    /// How long the capture loop keeps running after the last injection.
    pub tail_ms: f64,
}

impl Default for LmtConfig {
    fn default() -> Self {
        Self {
            mode: DetectionMode::PsnrThreshold,
            theta: ThetaConfig::Auto,
            calibration_samples: 1000,
            guard_db: 3.0,
            match_window_ms: 2000.0,
            tail_ms: 500.0,
        }
    }
}

/// Everything one run produces: calibration figures, per-event outcomes and
/// their summary statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmtReport {
    pub mean_capture_ms: f64,
    pub theta_db: f64,
    pub capture_count: usize,
    pub events: Vec<LmtEventRow>,
    pub misses: usize,
    pub mean_il_ms: Option<f64>,
    pub stddev_ms: Option<f64>,
    pub variance: Option<f64>,
    /// Set when the source failed mid-run and the capture log is cut short.
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmtEventRow {
    pub label: String,
    pub event_us: u64,
    pub detection_us: Option<u64>,
    pub il_ms: Option<f64>,
}

/// Performs `n` back-to-back captures and returns the mean inter-capture
/// time in milliseconds. Needs at least two captures to measure a gap.
pub fn calibrate_capture<S: FrameSource + ?Sized>(
    source: &S,
    n: usize,
) -> Result<(f64, Vec<Capture>), LmtError> {
    if n < 2 {
        return Err(LmtError::InsufficientSamples { needed: 2, got: n });
    }
    let mut captures: Vec<Capture> = Vec::with_capacity(n);
    for _ in 0..n {
        let sample = source.next_frame()?;
        let psnr = capture_psnr(&sample.pixels, captures.last().map(|c| &c.pixels))?;
        captures.push(Capture {
            pixels: sample.pixels,
            timestamp_us: sample.timestamp_us,
            psnr_db: Some(psnr),
        });
    }
    let span_us = captures[n - 1].timestamp_us - captures[0].timestamp_us;
    let mean_ms = span_us as f64 / 1000.0 / (n - 1) as f64;
    Ok((mean_ms, captures))
}

/// Derives the detection threshold from captures taken at rest: their mean
/// PSNR minus the guard margin.
pub fn calibrate_threshold(rest_captures: &[Capture], guard_db: f64) -> Result<f64, LmtError> {
    if rest_captures.is_empty() {
        return Err(LmtError::InsufficientSamples {
            needed: 1,
            got: 0,
        });
    }
    let mut sum = 0.0;
    for (i, c) in rest_captures.iter().enumerate() {
        sum += c.psnr_db.ok_or(LmtError::UnassignedPsnr(i))?;
    }
    let theta = sum / rest_captures.len() as f64 - guard_db;
    if theta <= 0.0 || theta >= 100.0 {
        return Err(LmtError::InvalidTheta(theta));
    }
    Ok(theta)
}

/// Runs the capture loop on its own thread until `stop` is raised,
/// assigning each capture its timestamp and PSNR against the predecessor.
/// Returns the capture log and whether it was truncated by a source error.
pub fn capture_until<S: FrameSource + ?Sized>(source: &S, stop: &AtomicBool) -> (Vec<Capture>, bool) {
    let mut captures: Vec<Capture> = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        let sample = match source.next_frame() {
            Ok(s) => s,
            Err(_) => return (captures, true),
        };
        let psnr = match capture_psnr(&sample.pixels, captures.last().map(|c| &c.pixels)) {
            Ok(p) => p,
            Err(_) => return (captures, true),
        };
        captures.push(Capture {
            pixels: sample.pixels,
            timestamp_us: sample.timestamp_us,
            psnr_db: Some(psnr),
        });
    }
    (captures, false)
}

/// A finished observer run: the report plus the raw capture log and event
/// list it was computed from.
#[derive(Debug)]
pub struct LmtOutcome {
    pub report: LmtReport,
    pub captures: Vec<Capture>,
    pub events: Vec<InteractionEvent>,
}

/// Full observer run against a self-contained interactive source: calibrate,
/// capture while injecting one interaction per schedule entry, then detect
/// and match. Offsets are measured from the start of the main capture loop.
pub fn run_lmt<S>(
    source: Arc<S>,
    schedule: &[Duration],
    config: &LmtConfig,
    clock: &SessionClock,
) -> Result<LmtOutcome, LmtError>
where
    S: InteractiveSource + 'static,
{
    let (mean_capture_ms, rest_captures) =
        calibrate_capture(source.as_ref(), config.calibration_samples)?;
    let theta_db = match config.theta {
        ThetaConfig::Fixed(t) => {
            if t <= 0.0 || t >= 100.0 {
                return Err(LmtError::InvalidTheta(t));
            }
            t
        }
        ThetaConfig::Auto => calibrate_threshold(&rest_captures, config.guard_db)?,
    };

    let stop = Arc::new(AtomicBool::new(false));
    let capture_thread = {
        let source = Arc::clone(&source);
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || capture_until(source.as_ref(), &stop))
    };

    let start = std::time::Instant::now();
    let mut events: Vec<InteractionEvent> = Vec::with_capacity(schedule.len());
    for (i, offset) in schedule.iter().enumerate() {
        precise_sleep_until(start + *offset);
        source.trigger();
        events.push(InteractionEvent {
            timestamp_us: clock.now_us(),
            label: format!("event-{i}"),
        });
    }
    std::thread::sleep(Duration::from_secs_f64(config.tail_ms / 1000.0));
    stop.store(true, Ordering::Relaxed);
    let (captures, truncated) = capture_thread.join().expect("capture thread panicked");

    let report = analyze(&captures, &events, config, mean_capture_ms, theta_db)?;
    Ok(LmtOutcome {
        report: LmtReport {
            truncated,
            ..report
        },
        captures,
        events,
    })
}

/// Pure analysis half of a run: detection, matching and summary statistics
/// over an existing capture log and event list.
pub fn analyze(
    captures: &[Capture],
    events: &[InteractionEvent],
    config: &LmtConfig,
    mean_capture_ms: f64,
    theta_db: f64,
) -> Result<LmtReport, LmtError> {
    let detections = detect_changes(captures, config.mode, theta_db)?;
    let outcomes = match_interactions(events, &detections, config.match_window_ms);
    let ils: Vec<f64> = outcomes.iter().filter_map(|o| o.il_ms).collect();
    let misses = outcomes.iter().filter(|o| o.is_miss()).count();

    let (mean, stddev, variance) = if ils.len() >= 2 {
        let mean = ils.iter().sum::<f64>() / ils.len() as f64;
        let var = ils.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ils.len() - 1) as f64;
        (Some(mean), Some(var.sqrt()), Some(var))
    } else if ils.len() == 1 {
        (Some(ils[0]), None, None)
    } else {
        (None, None, None)
    };

    Ok(LmtReport {
        mean_capture_ms,
        theta_db,
        capture_count: captures.len(),
        events: outcomes.iter().map(row_of).collect(),
        misses,
        mean_il_ms: mean,
        stddev_ms: stddev,
        variance,
        truncated: false,
    })
}

fn row_of(outcome: &MatchOutcome) -> LmtEventRow {
    LmtEventRow {
        label: outcome.event.label.clone(),
        event_us: outcome.event.timestamp_us,
        detection_us: outcome.detection_us,
        il_ms: outcome.il_ms,
    }
}

/// Writes a capture log as CSV: `index,timestamp_us,psnr_db`.
pub fn write_capture_log<W: std::io::Write>(
    w: &mut W,
    captures: &[Capture],
) -> std::io::Result<()> {
    writeln!(w, "index,timestamp_us,psnr_db")?;
    for (i, c) in captures.iter().enumerate() {
        writeln!(
            w,
            "{},{},{}",
            i,
            c.timestamp_us,
            c.psnr_db.map_or_else(|| "".to_string(), |p| format!("{p:.4}"))
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{PixelBuffer, Region};
    use crate::lmt::source::ColorFlipSource;

    #[test]
    fn calibration_measures_the_refresh_period() {
        let clock = SessionClock::new();
        // 120 Hz: expect roughly 8.33 ms between captures.
        let src = ColorFlipSource::new(clock, Region::new(0, 0, 4, 4), 120.0, Duration::ZERO);
        let (mean_ms, captures) = calibrate_capture(&src, 30).unwrap();
        assert!((mean_ms - 1000.0 / 120.0).abs() < 1.0, "mean {mean_ms}");
        assert_eq!(captures.len(), 30);
        assert_eq!(captures[0].psnr_db, Some(100.0));
    }

    #[test]
    fn calibration_needs_at_least_two_captures() {
        let clock = SessionClock::new();
        let src = ColorFlipSource::new(clock, Region::new(0, 0, 4, 4), 120.0, Duration::ZERO);
        assert!(matches!(
            calibrate_capture(&src, 1),
            Err(LmtError::InsufficientSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn threshold_from_a_static_scene_is_100_minus_guard() {
        let captures: Vec<Capture> = (0..10)
            .map(|i| Capture {
                pixels: PixelBuffer::new(1, 1),
                timestamp_us: i,
                psnr_db: Some(100.0),
            })
            .collect();
        assert_eq!(calibrate_threshold(&captures, 3.0).unwrap(), 97.0);
    }

    #[test]
    fn threshold_from_a_noisy_scene_tracks_the_rest_mean() {
        let captures: Vec<Capture> = (0..100)
            .map(|i| Capture {
                pixels: PixelBuffer::new(1, 1),
                timestamp_us: i,
                psnr_db: Some(45.0 + if i % 2 == 0 { 0.5 } else { -0.5 }),
            })
            .collect();
        let theta = calibrate_threshold(&captures, 3.0).unwrap();
        assert!((theta - 42.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_rejects_empty_input() {
        assert!(matches!(
            calibrate_threshold(&[], 3.0),
            Err(LmtError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn zero_events_still_yields_calibration_figures() {
        let clock = SessionClock::new();
        let src = Arc::new(ColorFlipSource::new(
            clock,
            Region::new(0, 0, 4, 4),
            240.0,
            Duration::ZERO,
        ));
        let config = LmtConfig {
            calibration_samples: 10,
            tail_ms: 50.0,
            ..LmtConfig::default()
        };
        let outcome = run_lmt(src, &[], &config, &clock).unwrap();
        assert!(outcome.report.events.is_empty());
        assert!(outcome.report.mean_il_ms.is_none());
        assert!(outcome.report.mean_capture_ms > 0.0);
        assert_eq!(outcome.report.theta_db, 97.0);
        assert!(!outcome.report.truncated);
        assert!(outcome.events.is_empty());
    }

    #[test]
    fn a_flip_is_measured_within_one_capture_period() {
        let clock = SessionClock::new();
        let src = Arc::new(ColorFlipSource::new(
            clock,
            Region::new(0, 0, 8, 8),
            100.0,
            Duration::from_millis(20),
        ));
        let config = LmtConfig {
            calibration_samples: 20,
            tail_ms: 200.0,
            ..LmtConfig::default()
        };
        let outcome = run_lmt(src, &[Duration::from_millis(30)], &config, &clock).unwrap();
        let report = outcome.report;
        assert_eq!(report.events.len(), 1);
        assert_eq!(report.misses, 0);
        let il = report.events[0].il_ms.unwrap();
        // Programmed latency 20 ms, capture period 10 ms, plus timer slack.
        assert!(il >= 20.0, "il {il}");
        assert!(il < 20.0 + 10.0 + 5.0, "il {il}");
        assert!(!outcome.captures.is_empty());
    }

    /// Source that dies after a fixed number of reads.
    struct FailingSource {
        inner: ColorFlipSource,
        reads_left: std::sync::atomic::AtomicUsize,
    }

    impl crate::lmt::source::FrameSource for FailingSource {
        fn next_frame(&self) -> Result<crate::lmt::source::FrameSample, LmtError> {
            use std::sync::atomic::Ordering;
            if self.reads_left.fetch_sub(1, Ordering::SeqCst) == 0 {
                return Err(LmtError::SourceFailed("screen grab failed".into()));
            }
            self.inner.next_frame()
        }
        fn region(&self) -> Region {
            self.inner.region()
        }
        fn refresh_hz(&self) -> f64 {
            self.inner.refresh_hz()
        }
    }

    impl crate::lmt::source::InteractiveSource for FailingSource {
        fn trigger(&self) {
            self.inner.trigger()
        }
    }

    #[test]
    fn a_source_failure_mid_run_flags_a_truncated_report() {
        let clock = SessionClock::new();
        let src = Arc::new(FailingSource {
            inner: ColorFlipSource::new(clock, Region::new(0, 0, 4, 4), 240.0, Duration::ZERO),
            reads_left: std::sync::atomic::AtomicUsize::new(15),
        });
        let config = LmtConfig {
            calibration_samples: 10,
            tail_ms: 100.0,
            ..LmtConfig::default()
        };
        let outcome = run_lmt(src, &[Duration::from_millis(10)], &config, &clock).unwrap();
        assert!(outcome.report.truncated);
        // Calibration ate 10 reads; the main loop got the remaining 5.
        assert_eq!(outcome.captures.len(), 5);
    }

    #[test]
    fn a_source_failure_during_calibration_is_an_error() {
        let clock = SessionClock::new();
        let src = FailingSource {
            inner: ColorFlipSource::new(clock, Region::new(0, 0, 4, 4), 240.0, Duration::ZERO),
            reads_left: std::sync::atomic::AtomicUsize::new(3),
        };
        assert!(matches!(
            calibrate_capture(&src, 10),
            Err(LmtError::SourceFailed(_))
        ));
    }

    #[test]
    fn capture_log_rows_match_capture_count() {
        let captures: Vec<Capture> = (0..5)
            .map(|i| Capture {
                pixels: PixelBuffer::new(1, 1),
                timestamp_us: i * 1000,
                psnr_db: Some(100.0),
            })
            .collect();
        let mut out = Vec::new();
        write_capture_log(&mut out, &captures).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 6); // header + 5 rows
        assert!(text.starts_with("index,timestamp_us,psnr_db"));
    }
}
