//! On-disk run artefacts and human-readable summaries.
//!
//! Every run writes `<output_dir>/<experiment>/log.csv` (one row per
//! measurement, suitable for plotting), `stats.json` (machine readable) and
//! `report.txt` (human readable).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::stats::SummaryStats;
use crate::harness::HarnessError;
use crate::testbed::client::CompletedInteraction;

/// Machine-readable record of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub experiment: String,
    pub injected_delay_ms: f64,
    #[serde(flatten)]
    pub stats: SummaryStats,
    /// mean − baseline mean, when a baseline is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_mean_ms: Option<f64>,
    pub protocol_errors: u64,
    pub partial: bool,
}

/// Writes the full artefact set for one run and returns the directory.
pub fn write_run_outputs(
    output_dir: &Path,
    stats: &ExperimentStats,
    measurements: &[CompletedInteraction],
) -> Result<PathBuf, HarnessError> {
    let dir = output_dir.join(&stats.experiment);
    fs::create_dir_all(&dir)?;

    let mut log = fs::File::create(dir.join("log.csv"))?;
    write_measurement_log(&mut log, measurements)?;

    let json = serde_json::to_string_pretty(stats)?;
    fs::write(dir.join("stats.json"), json)?;

    fs::write(dir.join("report.txt"), render_report(stats))?;
    Ok(dir)
}

/// Measurement log CSV: `index,guid,interaction,submit_us,complete_us,il_ms`.
pub fn write_measurement_log<W: Write>(
    w: &mut W,
    measurements: &[CompletedInteraction],
) -> Result<(), HarnessError> {
    writeln!(w, "index,guid,interaction,submit_us,complete_us,il_ms")?;
    for m in measurements {
        writeln!(
            w,
            "{},{},{},{},{},{:.3}",
            m.index,
            m.id,
            m.interaction.as_char(),
            m.submit_us,
            m.complete_us,
            m.il_ms
        )?;
    }
    Ok(())
}

/// Renders one run as a small human-readable table.
pub fn render_report(stats: &ExperimentStats) -> String {
    let mut out = String::new();
    out.push_str(&format!("experiment        : {}\n", stats.experiment));
    out.push_str(&format!("injected delay    : {:.2} ms\n", stats.injected_delay_ms));
    out.push_str(&format!("measurements      : {}\n", stats.stats.n));
    out.push_str(&format!("mean IL           : {:.2} ms\n", stats.stats.mean_ms));
    out.push_str(&format!("stddev            : {:.2} ms\n", stats.stats.stddev_ms));
    out.push_str(&format!("variance          : {:.2}\n", stats.stats.variance));
    out.push_str(&format!(
        "min / max         : {:.2} / {:.2} ms\n",
        stats.stats.min_ms, stats.stats.max_ms
    ));
    if let (Some(shift), Some(base)) = (stats.shift_ms, stats.baseline_mean_ms) {
        out.push_str(&format!("baseline mean     : {base:.2} ms\n"));
        out.push_str(&format!("shift over base   : {shift:.2} ms\n"));
    }
    if stats.protocol_errors > 0 {
        out.push_str(&format!("protocol errors   : {}\n", stats.protocol_errors));
    }
    if stats.partial {
        out.push_str("PARTIAL RUN: timed out before all interactions completed\n");
    }
    out
}

/// Loads a `stats.json` back.
pub fn load_stats(path: &Path) -> Result<ExperimentStats, HarnessError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Renders several runs side by side for the `report` subcommand.
pub fn render_summary_table(rows: &[ExperimentStats]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>10} {:>6} {:>10} {:>9} {:>9} {:>10}\n",
        "experiment", "delay_ms", "n", "mean_ms", "stddev", "variance", "shift_ms"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>10.2} {:>6} {:>10.2} {:>9.2} {:>9.2} {:>10}\n",
            r.experiment,
            r.injected_delay_ms,
            r.stats.n,
            r.stats.mean_ms,
            r.stats.stddev_ms,
            r.stats.variance,
            r.shift_ms.map_or_else(|| "-".into(), |s| format!("{s:.2}")),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbed::protocol::{Guid, Interaction};

    fn sample_stats() -> ExperimentStats {
        ExperimentStats {
            experiment: "demo".into(),
            injected_delay_ms: 50.0,
            stats: SummaryStats {
                mean_ms: 65.9,
                stddev_ms: 2.2,
                variance: 4.84,
                min_ms: 60.0,
                max_ms: 72.0,
                n: 100,
            },
            shift_ms: Some(50.7),
            baseline_mean_ms: Some(15.2),
            protocol_errors: 0,
            partial: false,
        }
    }

    #[test]
    fn stats_json_round_trips_identically() {
        let stats = sample_stats();
        let json = serde_json::to_string(&stats).unwrap();
        let back: ExperimentStats = serde_json::from_str(&json).unwrap();
        assert_eq!(back, stats);
    }

    #[test]
    fn measurement_log_has_one_row_per_measurement() {
        let measurements: Vec<CompletedInteraction> = (0..7)
            .map(|i| CompletedInteraction {
                index: i,
                id: Guid::random(),
                interaction: Interaction::RotateLeft,
                submit_us: i as u64 * 1000,
                complete_us: i as u64 * 1000 + 500,
                il_ms: 0.5,
                frame: Vec::new(),
            })
            .collect();
        let mut out = Vec::new();
        write_measurement_log(&mut out, &measurements).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("index,guid,interaction,submit_us,complete_us,il_ms"));
    }

    #[test]
    fn run_outputs_land_in_the_expected_tree() {
        let dir = tempfile::tempdir().unwrap();
        let stats = sample_stats();
        let run_dir = write_run_outputs(dir.path(), &stats, &[]).unwrap();
        assert_eq!(run_dir, dir.path().join("demo"));
        assert!(run_dir.join("log.csv").exists());
        assert!(run_dir.join("stats.json").exists());
        assert!(run_dir.join("report.txt").exists());
        let back = load_stats(&run_dir.join("stats.json")).unwrap();
        assert_eq!(back, stats);
    }

    #[test]
    fn summary_table_has_a_row_per_run() {
        let table = render_summary_table(&[sample_stats(), sample_stats()]);
        assert_eq!(table.lines().count(), 3);
    }
}
