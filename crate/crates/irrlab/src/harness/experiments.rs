//! The experiments themselves: baseline and simulated-delay runs over the
//! loopback testbed, and the side-by-side comparison of integrated and
//! observer measurements.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::frame::{Region, SharedSurface};
use crate::harness::report::{write_run_outputs, ExperimentStats};
use crate::harness::stats::{summarize, SummaryStats};
use crate::harness::template::{generate_template, load_template, parse_template};
use crate::harness::HarnessError;
use crate::lmt::detect::DetectionMode;
use crate::lmt::runner::{analyze, calibrate_capture, calibrate_threshold, capture_until, LmtConfig};
use crate::lmt::source::SurfaceSource;
use crate::lmt::{InteractionEvent, ThetaConfig};
use crate::sim::SimulatorMode;
use crate::testbed::client::CompletedInteraction;
use crate::testbed::codec::FrameCodec;
use crate::testbed::server::{IrrServer, ServerConfig};
use crate::testbed::session::{run_session, SessionConfig, SessionReport};
use crate::timing::SessionClock;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub injected_delay_ms: f64,
    pub interaction_rate_hz: f64,
    pub interaction_count: usize,
    pub template_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub codec: FrameCodec,
    pub mode: SimulatorMode,
    pub resolution: (u32, u32),
    pub rotation_step: f64,
    pub timeout_s: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "baseline".into(),
            injected_delay_ms: 0.0,
            interaction_rate_hz: 10.0,
            interaction_count: 1000,
            template_path: None,
            seed: 42,
            output_dir: PathBuf::from("out"),
            codec: FrameCodec::Raw,
            mode: SimulatorMode::Asynchronous,
            resolution: (256, 256),
            rotation_step: 5.0,
            timeout_s: 30.0,
        }
    }
}

impl ExperimentConfig {
    fn template(&self) -> Result<Vec<char>, HarnessError> {
        match &self.template_path {
            Some(path) => load_template(path),
            None => parse_template(&generate_template(self.interaction_count, self.seed)?),
        }
    }
}

/// What one run leaves behind, in memory and on disk.
#[derive(Debug)]
pub struct RunArtifacts {
    pub stats: ExperimentStats,
    pub measurements: Vec<CompletedInteraction>,
    pub run_dir: PathBuf,
}

/// Runs client and server in-process over loopback with the given injected
/// delay, returning the session report. The caller owns naming and stats.
pub fn run_local_session(
    config: &ExperimentConfig,
    delay_ms: f64,
    clock: SessionClock,
    display: SharedSurface,
) -> Result<SessionReport, HarnessError> {
    let template = config.template()?;
    let server = IrrServer::bind(ServerConfig {
        bind_addr: "127.0.0.1:0".into(),
        width: config.resolution.0,
        height: config.resolution.1,
        rotation_step: config.rotation_step,
        codec: config.codec,
        response_delay: Duration::from_secs_f64(delay_ms / 1000.0),
        mode: config.mode,
    })
    .map_err(crate::testbed::TestbedError::Io)?;
    let port = server
        .local_addr()
        .map_err(crate::testbed::TestbedError::Io)?
        .port();
    let server_thread = std::thread::spawn(move || server.serve_one());

    let session = SessionConfig {
        host: "127.0.0.1".into(),
        port,
        rate_hz: config.interaction_rate_hz,
        template,
        timeout: Duration::from_secs_f64(config.timeout_s),
        tick: Duration::from_millis(1),
        codec: config.codec,
        clock,
        display,
        // Large runs would otherwise pin every rendered frame in memory.
        retain_frames: config.interaction_count <= 100,
    };
    let report = run_session(&session)?;
    server_thread
        .join()
        .expect("server thread panicked")
        .map_err(HarnessError::Session)?;
    Ok(report)
}

fn stats_of(
    name: &str,
    delay_ms: f64,
    report: &SessionReport,
    baseline_mean_ms: Option<f64>,
) -> Result<ExperimentStats, HarnessError> {
    let ils: Vec<f64> = report.measurements.iter().map(|m| m.il_ms).collect();
    let stats: SummaryStats = summarize(&ils)?;
    Ok(ExperimentStats {
        experiment: name.to_string(),
        injected_delay_ms: delay_ms,
        stats,
        shift_ms: baseline_mean_ms.map(|b| stats.mean_ms - b),
        baseline_mean_ms,
        protocol_errors: report.protocol_errors,
        partial: report.partial,
    })
}

/// Loopback run with zero injected delay. Its mean becomes the baseline
/// that later simulated runs are compared against.
pub fn run_baseline(config: &ExperimentConfig) -> Result<RunArtifacts, HarnessError> {
    let clock = SessionClock::new();
    let display = SharedSurface::new(config.resolution.0, config.resolution.1);
    let report = run_local_session(config, 0.0, clock, display)?;
    let stats = stats_of(&config.name, 0.0, &report, None)?;
    let run_dir = write_run_outputs(&config.output_dir, &stats, &report.measurements)?;
    Ok(RunArtifacts {
        stats,
        measurements: report.measurements,
        run_dir,
    })
}

/// The same run with the latency injector set to `delay_ms`; the report
/// carries the shift over the supplied baseline mean.
pub fn run_simulated(
    config: &ExperimentConfig,
    delay_ms: f64,
    baseline_mean_ms: f64,
) -> Result<RunArtifacts, HarnessError> {
    let clock = SessionClock::new();
    let display = SharedSurface::new(config.resolution.0, config.resolution.1);
    let report = run_local_session(config, delay_ms, clock, display)?;
    let name = format!("{}-{}ms", config.name, delay_ms.round() as i64);
    let stats = stats_of(&name, delay_ms, &report, Some(baseline_mean_ms))?;
    let run_dir = write_run_outputs(&config.output_dir, &stats, &report.measurements)?;
    Ok(RunArtifacts {
        stats,
        measurements: report.measurements,
        run_dir,
    })
}

#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    pub experiment: ExperimentConfig,
    /// Events per run; kept small since each event must be individually
    /// visible to the observer.
    pub events_per_run: usize,
    /// Submission rate for comparison runs. Spaced well apart so each
    /// frame change is attributable to one event.
    pub rate_hz: f64,
    pub refresh_hz: f64,
    pub region_side: u32,
    pub calibration_samples: usize,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig::default(),
            events_per_run: 10,
            rate_hz: 2.0,
            refresh_hz: 60.0,
            region_side: 50,
            calibration_samples: 60,
        }
    }
}

/// One delay's worth of side-by-side measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub delay_ms: f64,
    pub integrated_mean_ms: f64,
    pub observer_mean_ms: f64,
    /// observer − integrated.
    pub delta_ms: f64,
    pub observer_misses: usize,
    pub events: usize,
    pub mean_capture_ms: f64,
    pub theta_db: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>9} {:>16} {:>14} {:>9} {:>8} {:>12}\n",
            "delay_ms", "integrated_ms", "observer_ms", "delta_ms", "misses", "capture_ms"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>9.1} {:>16.2} {:>14.2} {:>9.2} {:>8} {:>12.2}\n",
                r.delay_ms,
                r.integrated_mean_ms,
                r.observer_mean_ms,
                r.delta_ms,
                r.observer_misses,
                r.mean_capture_ms
            ));
        }
        out
    }
}

/// For each delay, runs one session while the observer tool watches the
/// client's display surface, and reports the integrated mean, the observer
/// mean and their difference.
///
/// Both measurement paths share one clock: the integrated path stops a
/// stopwatch when the result is dequeued; the observer path matches the
/// submission timestamp against the first capture showing the new frame.
pub fn run_comparison(
    config: &ComparisonConfig,
    delays_ms: &[f64],
) -> Result<ComparisonReport, HarnessError> {
    let mut report = ComparisonReport::default();
    for &delay_ms in delays_ms {
        report.rows.push(run_one_comparison(config, delay_ms)?);
    }
    Ok(report)
}

fn run_one_comparison(
    config: &ComparisonConfig,
    delay_ms: f64,
) -> Result<ComparisonRow, HarnessError> {
    let clock = SessionClock::new();
    let (width, height) = config.experiment.resolution;
    let display = SharedSurface::new(width, height);
    let region = Region::centered(width, height, config.region_side);
    let source = Arc::new(SurfaceSource::new(
        clock,
        display.clone(),
        region,
        config.refresh_hz,
    ));

    // Calibrate against the idle surface before any interaction flows.
    let (mean_capture_ms, rest_captures) =
        calibrate_capture(source.as_ref(), config.calibration_samples)?;
    let theta_db = calibrate_threshold(&rest_captures, 3.0)?;

    let stop = Arc::new(AtomicBool::new(false));
    let capture_thread = {
        let source = Arc::clone(&source);
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || capture_until(source.as_ref(), &stop))
    };

    let run_config = ExperimentConfig {
        interaction_count: config.events_per_run,
        interaction_rate_hz: config.rate_hz,
        template_path: None,
        ..config.experiment.clone()
    };
    let session = run_local_session(&run_config, delay_ms, clock, display)?;

    // Let the final frame reach the observer before stopping the loop.
    std::thread::sleep(Duration::from_millis(500));
    stop.store(true, Ordering::Relaxed);
    let (captures, truncated) = capture_thread.join().expect("capture thread panicked");
    if truncated {
        return Err(HarnessError::Lmt(crate::lmt::LmtError::SourceFailed(
            "capture loop truncated during comparison".into(),
        )));
    }

    let events: Vec<InteractionEvent> = session
        .measurements
        .iter()
        .map(|m| InteractionEvent {
            timestamp_us: m.submit_us,
            label: format!("interaction-{}", m.index),
        })
        .collect();

    let lmt_config = LmtConfig {
        mode: DetectionMode::PsnrThreshold,
        theta: ThetaConfig::Fixed(theta_db),
        calibration_samples: config.calibration_samples,
        guard_db: 3.0,
        match_window_ms: 2000.0,
        tail_ms: 0.0,
    };
    let observer = analyze(&captures, &events, &lmt_config, mean_capture_ms, theta_db)?;

    let ils: Vec<f64> = session.measurements.iter().map(|m| m.il_ms).collect();
    let integrated = summarize(&ils)?;
    let observer_mean = observer
        .mean_il_ms
        .ok_or_else(|| HarnessError::Lmt(crate::lmt::LmtError::SourceFailed(
            "observer matched no events".into(),
        )))?;

    Ok(ComparisonRow {
        delay_ms,
        integrated_mean_ms: integrated.mean_ms,
        observer_mean_ms: observer_mean,
        delta_ms: observer_mean - integrated.mean_ms,
        observer_misses: observer.misses,
        events: events.len(),
        mean_capture_ms,
        theta_db,
    })
}
