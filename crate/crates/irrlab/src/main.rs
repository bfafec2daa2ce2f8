//! `irrlab` — run the latency laboratory from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 session failure, 3 measured
//! results outside the requested tolerance (for CI gating).

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use irrlab::frame::Region;
use irrlab::harness::{
    generate_template, load_template, report as report_files, run_baseline, run_comparison,
    run_simulated, ComparisonConfig, ExperimentConfig,
};
use irrlab::lmt::{
    run_lmt, runner::write_capture_log, ColorFlipSource, DetectionMode, LmtConfig, NoisySource,
    ThetaConfig,
};
use irrlab::sim::SimulatorMode;
use irrlab::testbed::{
    run_session, FrameCodec, IrrServer, ServerConfig, SessionConfig, DEFAULT_PORT,
};
use irrlab::timing::SessionClock;
use irrlab::SharedSurface;

#[derive(Parser)]
#[command(name = "irrlab", version, about = "Interaction-latency laboratory for remote rendering")]
struct Cli {
    /// Optional key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rendering server until interrupted.
    Serve(ServeArgs),
    /// Run a measurement session against a running server.
    Client(ClientArgs),
    /// Measure the loopback baseline (zero injected delay).
    Baseline(RunArgs),
    /// Run the baseline plus one run per injected delay and report shifts.
    Simulate(SimulateArgs),
    /// Compare integrated and observer measurements per delay.
    Compare(CompareArgs),
    /// Run the observer tool against a synthetic scene.
    Lmt(LmtArgs),
    /// Generate a deterministic interaction template.
    GenTemplate(GenTemplateArgs),
    /// Summarize previously written stats.json files.
    Report(ReportArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 0.0)]
    delay_ms: f64,
    #[arg(long, default_value = "async")]
    mode: String,
    #[arg(long, default_value = "256x256")]
    resolution: String,
    #[arg(long, default_value_t = 5.0)]
    rotation_step: f64,
    #[arg(long, default_value = "raw")]
    codec: String,
    /// Serve a single session and exit.
    #[arg(long)]
    once: bool,
}

#[derive(Args)]
struct ClientArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long)]
    template: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    rate_hz: f64,
    #[arg(long, default_value_t = 30.0)]
    timeout_s: f64,
    #[arg(long, default_value = "raw")]
    codec: String,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long, default_value = "client-run")]
    experiment: String,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "baseline")]
    experiment: String,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 10.0)]
    rate_hz: f64,
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long, default_value = "raw")]
    codec: String,
    #[arg(long, default_value = "256x256")]
    resolution: String,
    #[arg(long, default_value_t = 5.0)]
    rotation_step: f64,
    #[arg(long, default_value_t = 30.0)]
    timeout_s: f64,
    #[arg(long, default_value = "async")]
    mode: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated injected delays in milliseconds.
    #[arg(long, default_value = "50,100,174", value_delimiter = ',')]
    delays: Vec<f64>,
    /// Repetitions of each delay run (same seed, fresh wall clock), for
    /// repeatability checks.
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    /// Fail (exit 3) when |shift − delay| exceeds this many milliseconds.
    #[arg(long)]
    tolerance_ms: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "50,100", value_delimiter = ',')]
    delays: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    events: usize,
    #[arg(long, default_value_t = 2.0)]
    event_rate_hz: f64,
    #[arg(long, default_value_t = 60.0)]
    refresh_hz: f64,
}

#[derive(Args)]
struct LmtArgs {
    /// Scene: "color-flip" or "noise".
    #[arg(long, default_value = "color-flip")]
    scene: String,
    /// Programmed scene latency between trigger and visible change.
    #[arg(long, default_value_t = 30.0)]
    latency_ms: f64,
    #[arg(long, default_value_t = 10)]
    events: usize,
    #[arg(long, default_value_t = 2000.0)]
    event_spacing_ms: f64,
    #[arg(long, default_value_t = 60.0)]
    refresh_hz: f64,
    /// Detection threshold in dB, or "auto".
    #[arg(long, default_value = "auto")]
    theta: String,
    #[arg(long, default_value = "psnr_threshold")]
    detection_mode: String,
    #[arg(long, default_value_t = 1000)]
    calibration_samples: usize,
    #[arg(long, default_value_t = 3.0)]
    guard_db: f64,
    #[arg(long, default_value_t = 2000.0)]
    match_window_ms: f64,
    #[arg(long, default_value_t = 50)]
    region_side: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value = "out")]
    output_dir: PathBuf,
    #[arg(long, default_value = "lmt")]
    experiment: String,
}

#[derive(Args)]
struct GenTemplateArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// stats.json files or run directories containing one.
    inputs: Vec<PathBuf>,
    /// Also write the combined table as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("bad resolution {s:?}: expected WxH"))?;
    let w = w.parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h = h.parse().map_err(|_| format!("bad height in {s:?}"))?;
    Ok((w, h))
}

fn parse_codec(s: &str) -> Result<FrameCodec, String> {
    FrameCodec::parse(s).ok_or_else(|| format!("unknown codec {s:?} (raw|jpeg)"))
}

fn parse_mode(s: &str) -> Result<SimulatorMode, String> {
    SimulatorMode::parse(s).ok_or_else(|| format!("unknown mode {s:?} (async|sync)"))
}

/// Usage-level failure: bad flags, bad config values, unreadable template.
struct UsageError(String);

fn experiment_config(run: &RunArgs) -> Result<ExperimentConfig, UsageError> {
    Ok(ExperimentConfig {
        name: run.experiment.clone(),
        injected_delay_ms: 0.0,
        interaction_rate_hz: run.rate_hz,
        interaction_count: run.count,
        template_path: run.template.clone(),
        seed: run.seed,
        output_dir: run.output_dir.clone(),
        codec: parse_codec(&run.codec).map_err(UsageError)?,
        mode: parse_mode(&run.mode).map_err(UsageError)?,
        resolution: parse_resolution(&run.resolution).map_err(UsageError)?,
        rotation_step: run.rotation_step,
        timeout_s: run.timeout_s,
    })
}

fn main() -> ExitCode {
    let mut raw_args: Vec<String> = std::env::args().collect();
    if let Err(e) = apply_config_file(&mut raw_args) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse_from(&raw_args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are success paths in clap.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    match run(cli) {
        Ok(code) => code,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Expands `--config file` into leading `--key value` arguments so explicit
/// flags (parsed later) win.
fn apply_config_file(args: &mut Vec<String>) -> Result<(), String> {
    let Some(pos) = args.iter().position(|a| a == "--config") else {
        return Ok(());
    };
    let path = args
        .get(pos + 1)
        .cloned()
        .ok_or_else(|| "--config needs a file path".to_string())?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let mut extra = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", i + 1))?;
        extra.push(format!("--{}", key.trim().replace('_', "-")));
        extra.push(value.trim().to_string());
    }
    // Insert right after the subcommand so the injected flags stay valid;
    // the subcommand is the first non-flag argument that is not the value
    // of --config itself.
    let mut insert_at = args.len();
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            i += 2;
            continue;
        }
        if !args[i].starts_with("--") {
            insert_at = i + 1;
            break;
        }
        i += 1;
    }
    args.splice(insert_at..insert_at, extra);
    Ok(())
}

enum AppError {
    Usage(String),
    Run(anyhow::Error),
}

impl From<UsageError> for AppError {
    fn from(e: UsageError) -> Self {
        AppError::Usage(e.0)
    }
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> Self {
        AppError::Run(e)
    }
}

fn run(cli: Cli) -> Result<ExitCode, AppError> {
    match cli.command {
        Command::Serve(args) => {
            let (width, height) = parse_resolution(&args.resolution).map_err(UsageError)?;
            let config = ServerConfig {
                bind_addr: format!("{}:{}", args.host, args.port),
                width,
                height,
                rotation_step: args.rotation_step,
                codec: parse_codec(&args.codec).map_err(UsageError)?,
                response_delay: Duration::from_secs_f64(args.delay_ms / 1000.0),
                mode: parse_mode(&args.mode).map_err(UsageError)?,
            };
            let server = IrrServer::bind(config).map_err(|e| AppError::Run(e.into()))?;
            eprintln!("serving on {}", server.local_addr().map_err(|e| AppError::Run(e.into()))?);
            let result = if args.once {
                server.serve_one().map(|_| ())
            } else {
                server.serve_forever()
            };
            result.map_err(|e| AppError::Run(e.into()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Client(args) => {
            let template = load_template(&args.template).map_err(|e| AppError::Usage(e.to_string()))?;
            let config = SessionConfig {
                host: args.host,
                port: args.port,
                rate_hz: args.rate_hz,
                template,
                timeout: Duration::from_secs_f64(args.timeout_s),
                tick: Duration::from_millis(1),
                codec: parse_codec(&args.codec).map_err(UsageError)?,
                clock: SessionClock::new(),
                display: SharedSurface::new(256, 256),
                retain_frames: false,
            };
            let report = run_session(&config).map_err(|e| AppError::Run(e.into()))?;
            let ils: Vec<f64> = report.measurements.iter().map(|m| m.il_ms).collect();
            let stats = irrlab::harness::summarize(&ils).map_err(|e| AppError::Run(e.into()))?;
            let experiment = report_files::ExperimentStats {
                experiment: args.experiment,
                injected_delay_ms: 0.0,
                stats,
                shift_ms: None,
                baseline_mean_ms: None,
                protocol_errors: report.protocol_errors,
                partial: report.partial,
            };
            let dir = report_files::write_run_outputs(
                &args.output_dir,
                &experiment,
                &report.measurements,
            )
            .map_err(|e| AppError::Run(e.into()))?;
            print!("{}", report_files::render_report(&experiment));
            eprintln!("artifacts in {}", dir.display());
            Ok(exit_for_partial(report.partial))
        }
        Command::Baseline(args) => {
            let config = experiment_config(&args)?;
            let run = run_baseline(&config).map_err(|e| AppError::Run(e.into()))?;
            print!("{}", report_files::render_report(&run.stats));
            eprintln!("artifacts in {}", run.run_dir.display());
            Ok(exit_for_partial(run.stats.partial))
        }
        Command::Simulate(args) => {
            let config = experiment_config(&args.run)?;
            let baseline_config = ExperimentConfig {
                name: format!("{}-base", config.name),
                ..config.clone()
            };
            let base = run_baseline(&baseline_config).map_err(|e| AppError::Run(e.into()))?;
            println!("baseline mean: {:.2} ms", base.stats.stats.mean_ms);

            let mut rows = vec![base.stats.clone()];
            let mut worst: f64 = 0.0;
            let repetitions = args.repetitions.max(1);
            for &delay in &args.delays {
                for rep in 0..repetitions {
                    let run_config = if repetitions > 1 {
                        ExperimentConfig {
                            name: format!("{}-r{}", config.name, rep + 1),
                            ..config.clone()
                        }
                    } else {
                        config.clone()
                    };
                    let run = run_simulated(&run_config, delay, base.stats.stats.mean_ms)
                        .map_err(|e| AppError::Run(e.into()))?;
                    let shift = run.stats.shift_ms.unwrap_or(f64::NAN);
                    worst = worst.max((shift - delay).abs());
                    rows.push(run.stats.clone());
                }
            }
            print!("{}", report_files::render_summary_table(&rows));

            if let Some(tolerance) = args.tolerance_ms {
                if worst > tolerance {
                    eprintln!(
                        "tolerance violated: worst |shift - delay| = {worst:.2} ms > {tolerance:.2} ms"
                    );
                    return Ok(ExitCode::from(3));
                }
                println!("within tolerance: worst |shift - delay| = {worst:.2} ms");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare(args) => {
            let config = ComparisonConfig {
                experiment: experiment_config(&args.run)?,
                events_per_run: args.events,
                rate_hz: args.event_rate_hz,
                refresh_hz: args.refresh_hz,
                ..ComparisonConfig::default()
            };
            let report = run_comparison(&config, &args.delays).map_err(|e| AppError::Run(e.into()))?;
            print!("{}", report.render());
            let out_dir = args.run.output_dir.join(&args.run.experiment);
            std::fs::create_dir_all(&out_dir).map_err(|e| AppError::Run(e.into()))?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| AppError::Run(e.into()))?;
            std::fs::write(out_dir.join("comparison.json"), json)
                .map_err(|e| AppError::Run(e.into()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Lmt(args) => run_lmt_command(args),
        Command::GenTemplate(args) => {
            let text = generate_template(args.count, args.seed)
                .map_err(|e| AppError::Usage(e.to_string()))?;
            std::fs::write(&args.output, text).map_err(|e| AppError::Run(e.into()))?;
            eprintln!("wrote {} interactions to {}", args.count, args.output.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(args) => {
            if args.inputs.is_empty() {
                return Err(AppError::Usage("report needs at least one input".into()));
            }
            let mut rows = Vec::new();
            for input in &args.inputs {
                let path = if input.is_dir() {
                    input.join("stats.json")
                } else {
                    input.clone()
                };
                rows.push(report_files::load_stats(&path).map_err(|e| AppError::Run(e.into()))?);
            }
            print!("{}", report_files::render_summary_table(&rows));
            if let Some(json_path) = args.json {
                let json = serde_json::to_string_pretty(&rows).map_err(|e| AppError::Run(e.into()))?;
                std::fs::write(json_path, json).map_err(|e| AppError::Run(e.into()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_for_partial(partial: bool) -> ExitCode {
    if partial {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run_lmt_command(args: LmtArgs) -> Result<ExitCode, AppError> {
    let clock = SessionClock::new();
    let region = Region::new(0, 0, args.region_side, args.region_side);
    let theta = if args.theta == "auto" {
        ThetaConfig::Auto
    } else {
        ThetaConfig::Fixed(
            args.theta
                .parse()
                .map_err(|_| AppError::Usage(format!("bad theta {:?}", args.theta)))?,
        )
    };
    let config = LmtConfig {
        mode: DetectionMode::parse(&args.detection_mode)
            .ok_or_else(|| AppError::Usage(format!("unknown detection mode {:?}", args.detection_mode)))?,
        theta,
        calibration_samples: args.calibration_samples,
        guard_db: args.guard_db,
        match_window_ms: args.match_window_ms,
        tail_ms: 500.0,
    };
    let schedule: Vec<Duration> = (0..args.events)
        .map(|i| Duration::from_secs_f64((i + 1) as f64 * args.event_spacing_ms / 1000.0))
        .collect();

    let outcome = match args.scene.as_str() {
        "color-flip" => {
            let source = Arc::new(ColorFlipSource::new(
                clock,
                region,
                args.refresh_hz,
                Duration::from_secs_f64(args.latency_ms / 1000.0),
            ));
            run_lmt(source, &schedule, &config, &clock)
        }
        "noise" => {
            let source = Arc::new(NoisySource::new(
                clock,
                region,
                args.refresh_hz,
                1.0,
                26,
                args.seed,
            ));
            run_lmt(source, &schedule, &config, &clock)
        }
        other => return Err(AppError::Usage(format!("unknown scene {other:?}"))),
    }
    .map_err(|e| AppError::Run(e.into()))?;
    let report = outcome.report;

    let out_dir = args.output_dir.join(&args.experiment);
    std::fs::create_dir_all(&out_dir).map_err(|e| AppError::Run(e.into()))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| AppError::Run(e.into()))?;
    std::fs::write(out_dir.join("report.json"), json).map_err(|e| AppError::Run(e.into()))?;
    let mut capture_log = std::fs::File::create(out_dir.join("captures.csv"))
        .map_err(|e| AppError::Run(e.into()))?;
    write_capture_log(&mut capture_log, &outcome.captures).map_err(|e| AppError::Run(e.into()))?;

    println!("mean capture time : {:.2} ms", report.mean_capture_ms);
    println!("theta             : {:.2} dB", report.theta_db);
    println!("captures          : {}", report.capture_count);
    println!("events            : {}", report.events.len());
    println!("misses            : {}", report.misses);
    if let Some(mean) = report.mean_il_ms {
        println!("mean IL           : {mean:.2} ms");
    }
    if let Some(sd) = report.stddev_ms {
        println!("stddev            : {sd:.2} ms");
    }
    eprintln!("report in {}", out_dir.display());
    Ok(ExitCode::SUCCESS)
}
