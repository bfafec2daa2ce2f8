//! Change detection over a capture sequence and matching of detections back
//! to interaction events.

use crate::lmt::{Capture, InteractionEvent, LmtError};

/// How a frame change is recognised.
///
/// Per-pixel comparison only works on bitwise-static scenes; the PSNR modes
/// tolerate scene noise. The threshold reading (drop below θ, the calibrated
/// rest level) is the default; the delta reading (consecutive-capture PSNR
/// jump larger than θ) is also available since both interpretations of the
/// detection rule are defensible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectionMode {
    PerPixel,
    #[default]
    PsnrThreshold,
    PsnrDelta,
}

impl DetectionMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per_pixel" | "per-pixel" => Some(DetectionMode::PerPixel),
            "psnr_threshold" | "threshold" => Some(DetectionMode::PsnrThreshold),
            "psnr_delta" | "delta" => Some(DetectionMode::PsnrDelta),
            _ => None,
        }
    }
}

/// Scans captures (timestamp order) and returns the timestamps at which a
/// change event begins. Consecutive below-threshold (or above-delta)
/// captures are coalesced into the single detection that opened them, so a
/// change that persists across several captures is reported once.
pub fn detect_changes(
    captures: &[Capture],
    mode: DetectionMode,
    theta_db: f64,
) -> Result<Vec<u64>, LmtError> {
    let mut detections = Vec::new();
    match mode {
        DetectionMode::PerPixel => {
            for (i, pair) in captures.windows(2).enumerate() {
                if pair[0].pixels != pair[1].pixels {
                    detections.push(captures[i + 1].timestamp_us);
                }
            }
        }
        DetectionMode::PsnrThreshold => {
            let psnrs = assigned_psnrs(captures)?;
            let mut in_event = false;
            for (i, &p) in psnrs.iter().enumerate() {
                if p < theta_db {
                    if !in_event {
                        detections.push(captures[i].timestamp_us);
                        in_event = true;
                    }
                } else {
                    in_event = false;
                }
            }
        }
        DetectionMode::PsnrDelta => {
            let psnrs = assigned_psnrs(captures)?;
            let mut in_event = false;
            for i in 1..psnrs.len() {
                if (psnrs[i] - psnrs[i - 1]).abs() > theta_db {
                    if !in_event {
                        detections.push(captures[i].timestamp_us);
                        in_event = true;
                    }
                } else {
                    in_event = false;
                }
            }
        }
    }
    Ok(detections)
}

fn assigned_psnrs(captures: &[Capture]) -> Result<Vec<f64>, LmtError> {
    captures
        .iter()
        .enumerate()
        .map(|(i, c)| c.psnr_db.ok_or(LmtError::UnassignedPsnr(i)))
        .collect()
}

/// An event with the detection it was matched to, if any. The measured
/// latency is the capture-time minus the interaction time.
#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub event: InteractionEvent,
    pub detection_us: Option<u64>,
    pub il_ms: Option<f64>,
}

impl MatchOutcome {
    pub fn is_miss(&self) -> bool {
        self.detection_us.is_none()
    }
}

/// Matches each event (time order) to the earliest unclaimed detection at
/// or after it and within the window. Each detection is claimed at most
/// once; events with no eligible detection are reported as misses, and
/// detections preceding every event are left unclaimed as spontaneous
/// scene changes.
pub fn match_interactions(
    events: &[InteractionEvent],
    detections: &[u64],
    window_ms: f64,
) -> Vec<MatchOutcome> {
    let window_us = (window_ms * 1000.0) as u64;
    let mut claimed = vec![false; detections.len()];
    events
        .iter()
        .map(|event| {
            let hit = detections.iter().enumerate().find(|&(i, &d)| {
                !claimed[i] && d >= event.timestamp_us && d - event.timestamp_us <= window_us
            });
            match hit {
                Some((i, &d)) => {
                    claimed[i] = true;
                    MatchOutcome {
                        event: event.clone(),
                        detection_us: Some(d),
                        il_ms: Some((d - event.timestamp_us) as f64 / 1000.0),
                    }
                }
                None => MatchOutcome {
                    event: event.clone(),
                    detection_us: None,
                    il_ms: None,
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::PixelBuffer;

    fn capture(ts_ms: u64, psnr: f64) -> Capture {
        Capture {
            pixels: PixelBuffer::new(1, 1),
            timestamp_us: ts_ms * 1000,
            psnr_db: Some(psnr),
        }
    }

    fn event(ts_ms: u64) -> InteractionEvent {
        InteractionEvent {
            timestamp_us: ts_ms * 1000,
            label: format!("event@{ts_ms}"),
        }
    }

    #[test]
    fn threshold_mode_detects_the_drop_capture() {
        let captures = vec![
            capture(0, 100.0),
            capture(16, 100.0),
            capture(32, 27.0),
            capture(48, 100.0),
        ];
        let detections = detect_changes(&captures, DetectionMode::PsnrThreshold, 97.0).unwrap();
        assert_eq!(detections, vec![32_000]);
    }

    #[test]
    fn a_persistent_drop_is_coalesced_until_recovery() {
        let captures = vec![
            capture(0, 100.0),
            capture(16, 20.0),
            capture(32, 25.0),
            capture(48, 100.0),
            capture(64, 30.0),
        ];
        let detections = detect_changes(&captures, DetectionMode::PsnrThreshold, 97.0).unwrap();
        assert_eq!(detections, vec![16_000, 64_000]);
    }

    #[test]
    fn one_injected_change_yields_one_detection_in_every_mode() {
        // A static stream with a single changed frame that then persists.
        let quiet = PixelBuffer::filled(4, 4, [10, 10, 10]);
        let changed = PixelBuffer::filled(4, 4, [200, 10, 10]);
        let mut captures = Vec::new();
        for i in 0..8u64 {
            let pixels = if i < 4 { quiet.clone() } else { changed.clone() };
            let prev = captures.last().map(|c: &Capture| &c.pixels);
            let psnr = crate::lmt::metrics::capture_psnr(&pixels, prev).unwrap();
            captures.push(Capture {
                pixels,
                timestamp_us: i * 16_000,
                psnr_db: Some(psnr),
            });
        }
        for mode in [
            DetectionMode::PerPixel,
            DetectionMode::PsnrThreshold,
            DetectionMode::PsnrDelta,
        ] {
            let detections = detect_changes(&captures, mode, 50.0).unwrap();
            assert_eq!(detections, vec![4 * 16_000], "mode {mode:?}");
        }
    }

    #[test]
    fn per_pixel_mode_stays_quiet_on_a_bitwise_static_stream() {
        let quiet = PixelBuffer::filled(4, 4, [10, 10, 10]);
        let captures: Vec<Capture> = (0..10u64)
            .map(|i| Capture {
                pixels: quiet.clone(),
                timestamp_us: i * 16_000,
                psnr_db: Some(100.0),
            })
            .collect();
        assert!(detect_changes(&captures, DetectionMode::PerPixel, 0.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unassigned_psnr_is_an_error_in_psnr_modes() {
        let mut captures = vec![capture(0, 100.0), capture(16, 100.0)];
        captures[1].psnr_db = None;
        assert_eq!(
            detect_changes(&captures, DetectionMode::PsnrThreshold, 97.0).unwrap_err(),
            LmtError::UnassignedPsnr(1)
        );
        // Per-pixel mode never consults PSNR.
        assert!(detect_changes(&captures, DetectionMode::PerPixel, 0.0).is_ok());
    }

    #[test]
    fn matching_pairs_an_event_with_the_next_detection() {
        let outcome = match_interactions(&[event(0)], &[17_000], 2000.0);
        assert_eq!(outcome.len(), 1);
        assert_eq!(outcome[0].detection_us, Some(17_000));
        assert!((outcome[0].il_ms.unwrap() - 17.0).abs() < 1e-9);
    }

    #[test]
    fn two_events_one_detection_gives_one_match_and_one_miss() {
        let outcome = match_interactions(&[event(0), event(100)], &[110_000], 2000.0);
        assert_eq!(outcome.len(), 2);
        // The earlier event claims the detection; the later one misses.
        assert_eq!(outcome[0].detection_us, Some(110_000));
        assert!(outcome[1].is_miss());
        assert_eq!(outcome.iter().filter(|o| o.is_miss()).count(), 1);
    }

    #[test]
    fn detections_before_any_event_are_left_unclaimed() {
        let outcome = match_interactions(&[event(100)], &[50_000, 120_000], 2000.0);
        assert_eq!(outcome[0].detection_us, Some(120_000));
    }

    #[test]
    fn detections_outside_the_window_do_not_match() {
        let outcome = match_interactions(&[event(0)], &[3_000_000], 2000.0);
        assert!(outcome[0].is_miss());
    }

    /// Exhaustive optimal assignment on a small instance, used as an oracle
    /// for the greedy matcher's match count.
    fn brute_force_max_matches(events: &[u64], detections: &[u64], window_us: u64) -> usize {
        fn go(events: &[u64], detections: &[u64], window_us: u64, used: &mut Vec<bool>) -> usize {
            let Some((&e, rest)) = events.split_first() else {
                return 0;
            };
            // Either leave this event unmatched...
            let mut best = go(rest, detections, window_us, used);
            // ...or try every eligible detection for it.
            for (i, &d) in detections.iter().enumerate() {
                if !used[i] && d >= e && d - e <= window_us {
                    used[i] = true;
                    best = best.max(1 + go(rest, detections, window_us, used));
                    used[i] = false;
                }
            }
            best
        }
        let mut used = vec![false; detections.len()];
        go(events, detections, window_us, &mut used)
    }

    #[test]
    fn greedy_matching_is_optimal_and_claims_each_detection_once() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let n_events = rng.gen_range(0..5);
            let n_detections = rng.gen_range(0..5);
            let mut event_ts: Vec<u64> = (0..n_events).map(|_| rng.gen_range(0..200_000)).collect();
            event_ts.sort_unstable();
            event_ts.dedup();
            let mut detections: Vec<u64> =
                (0..n_detections).map(|_| rng.gen_range(0..200_000)).collect();
            detections.sort_unstable();
            detections.dedup();
            let window_ms = 50.0;

            let events: Vec<InteractionEvent> = event_ts
                .iter()
                .map(|&t| InteractionEvent {
                    timestamp_us: t,
                    label: String::new(),
                })
                .collect();
            let outcome = match_interactions(&events, &detections, window_ms);

            assert_eq!(outcome.len(), events.len());
            let matched: Vec<u64> = outcome.iter().filter_map(|o| o.detection_us).collect();
            let mut dedup = matched.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(matched.len(), dedup.len(), "a detection was claimed twice");

            let optimal = brute_force_max_matches(&event_ts, &detections, 50_000);
            assert_eq!(matched.len(), optimal);
        }
    }
}
