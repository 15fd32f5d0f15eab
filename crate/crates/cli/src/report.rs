//! Report documents (pretty JSON, fields in declaration order) and CSV logs.
//!
//! Floats are written in shortest round-trip form and no document carries wall-clock data
//! unless stamping is requested, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use herdnav_core::replay::{ActionLabel, EvalReport, ReplayStep};
use herdnav_core::sim::{SimMetrics, TrajectoryRow};
use herdnav_core::stats::{summarize, SummaryStats};
use herdnav_core::telemetry::{BehaviorAltitudes, UsabilityReport, UsableSeries};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct StatsDoc {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

impl From<SummaryStats> for StatsDoc {
    fn from(s: SummaryStats) -> Self {
        Self {
            count: s.count,
            mean: s.mean,
            std: s.std,
            min: s.min,
            p25: s.p25,
            p50: s.p50,
            p75: s.p75,
            max: s.max,
        }
    }
}

fn stats_of(series: &[f64]) -> Option<StatsDoc> {
    summarize(series).ok().map(StatsDoc::from)
}

#[derive(Debug, Clone, Serialize)]
pub struct UsabilityDoc {
    pub usable_frames: usize,
    pub total_frames: usize,
    pub usable_minutes: f64,
    pub total_minutes: f64,
    pub rate: Option<f64>,
    pub unjoined_frames: usize,
}

impl From<UsabilityReport> for UsabilityDoc {
    fn from(r: UsabilityReport) -> Self {
        Self {
            usable_frames: r.usable_frames,
            total_frames: r.total_frames,
            usable_minutes: r.usable_minutes,
            total_minutes: r.total_minutes,
            rate: r.rate,
            unjoined_frames: r.unjoined_frames,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesStatsDoc {
    pub altitude_m: Option<StatsDoc>,
    pub speed_mps: Option<StatsDoc>,
    pub bbox_width_px: Option<StatsDoc>,
    pub bbox_height_px: Option<StatsDoc>,
}

impl From<&UsableSeries> for SeriesStatsDoc {
    fn from(s: &UsableSeries) -> Self {
        Self {
            altitude_m: stats_of(&s.altitude),
            speed_mps: stats_of(&s.speed),
            bbox_width_px: stats_of(&s.bbox_width),
            bbox_height_px: stats_of(&s.bbox_height),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BehaviorBucketDoc {
    pub behavior: String,
    pub count: usize,
    pub altitudes_m: Vec<f64>,
}

impl From<&BehaviorAltitudes> for BehaviorBucketDoc {
    fn from(b: &BehaviorAltitudes) -> Self {
        Self {
            behavior: b.behavior.clone(),
            count: b.altitudes.len(),
            altitudes_m: b.altitudes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisDoc {
    pub kind: &'static str,
    pub mission: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub usability_rule: &'static str,
    pub usability: UsabilityDoc,
    pub statistics: SeriesStatsDoc,
    pub behavior_altitude: Vec<BehaviorBucketDoc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalDoc {
    pub kind: &'static str,
    pub mission: String,
    pub policy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub total_windows: usize,
    pub exact_matches: usize,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub flagged_windows: usize,
}

impl EvalDoc {
    pub fn new(mission: String, policy: &'static str, r: &EvalReport) -> Self {
        Self {
            kind: "evaluation",
            mission,
            policy,
            generated_at: None,
            total_windows: r.total_windows,
            exact_matches: r.exact_matches,
            accuracy: r.accuracy,
            tp: r.tp,
            fp: r.fp,
            fn_: r.fn_,
            tn: r.tn,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            flagged_windows: r.flagged_windows,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimDoc {
    pub kind: &'static str,
    pub policy: &'static str,
    /// `None` for the aggregate.
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub frames_total: u64,
    pub frames_in_view: u64,
    pub frames_fully_usable: u64,
    pub horizontal_distance_m: f64,
    pub vertical_distance_m: f64,
    pub yield_proxy: f64,
    pub no_detection_decisions: u64,
    /// Share of decisions after the first 30 s flown inside the altitude band.
    pub altitude_in_band_after_30s: Option<f64>,
}

impl SimDoc {
    pub fn new(policy: &'static str, seed: Option<u64>, m: &SimMetrics) -> Self {
        Self {
            kind: "simulation",
            policy,
            seed,
            seeds: Vec::new(),
            generated_at: None,
            frames_total: m.frames_total,
            frames_in_view: m.frames_in_view,
            frames_fully_usable: m.frames_fully_usable,
            horizontal_distance_m: m.horizontal_distance_m,
            vertical_distance_m: m.vertical_distance_m,
            yield_proxy: m.yield_proxy,
            no_detection_decisions: 0,
            altitude_in_band_after_30s: None,
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report documents serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn command_cells(out: &mut String, kind: &str, magnitude: f64) {
    let _ = write!(out, "{kind},{magnitude}");
}

/// Side-by-side log: `window_start,predicted,magnitude_m,expert,match,flagged`.
pub fn command_log_csv(steps: &[ReplayStep], labels: &[ActionLabel]) -> String {
    let mut out = String::from("window_start,predicted,magnitude_m,expert,match,flagged\n");
    for (s, l) in steps.iter().zip(labels) {
        let _ = write!(out, "{},", s.window_start);
        command_cells(&mut out, s.command.kind.as_str(), s.command.magnitude);
        let expert = match l.sign {
            0 => l.kind.as_str().to_string(),
            1 => format!("{}+", l.kind.as_str()),
            _ => format!("{}-", l.kind.as_str()),
        };
        let _ = writeln!(out, ",{expert},{},{}", l.matches(&s.command), s.flagged);
    }
    out
}

/// One row per physics step: `t,uav_x,uav_y,uav_z,command,magnitude_m,a0_x,a0_y,...`.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("t,uav_x,uav_y,uav_z,command,magnitude_m");
    let animals = rows.first().map_or(0, |r| r.animals.len());
    for i in 0..animals {
        let _ = write!(out, ",a{i}_x,a{i}_y");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},{},{},{},", r.t, r.uav[0], r.uav[1], r.uav[2]);
        command_cells(&mut out, r.command.kind.as_str(), r.command.magnitude);
        for (x, y) in &r.animals {
            let _ = write!(out, ",{x},{y}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use herdnav_core::{Command, CommandKind};

    #[test]
    fn eval_doc_field_order_is_stable() {
        let r = herdnav_core::replay::score(
            &[Command::HOVER],
            &[ActionLabel {
                window_start: 0.0,
                kind: CommandKind::Hover,
                sign: 0,
            }],
        )
        .unwrap();
        let json = to_json(&EvalDoc::new("m".into(), "improved", &r));
        let keys: Vec<&str> = json
            .lines()
            .filter_map(|l| l.trim().strip_prefix('"'))
            .filter_map(|l| l.split('"').next())
            .collect();
        assert_eq!(
            keys,
            [
                "kind",
                "mission",
                "policy",
                "total_windows",
                "exact_matches",
                "accuracy",
                "tp",
                "fp",
                "fn",
                "tn",
                "precision",
                "recall",
                "f1",
                "flagged_windows"
            ]
        );
    }

    #[test]
    fn trajectory_header_lists_animals() {
        let rows = [TrajectoryRow {
            t: 0.1,
            uav: [0.0, 0.0, 45.0],
            animals: vec![(1.0, 2.0), (3.5, -4.0)],
            command: Command::movement(CommandKind::MoveZ, -5.0),
        }];
        let csv = trajectory_csv(&rows);
        assert_eq!(
            csv,
            "t,uav_x,uav_y,uav_z,command,magnitude_m,a0_x,a0_y,a1_x,a1_y\n0.1,0,0,45,move_z,-5,1,2,3.5,-4\n"
        );
    }
}
