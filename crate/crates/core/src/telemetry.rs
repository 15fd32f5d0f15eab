//! Telemetry/annotation reconciliation and usability accounting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::geometry::PixelPoint;
use crate::FRAME_RATE_HZ;

/// Annotation labels marking a box as unusable for behavior inference.
pub const UNUSABLE_BEHAVIORS: [&str; 3] = ["Occluded", "Out of Frame", "Out of Focus"];

/// Default maximum |annotation time - telemetry time| for a join, in seconds.
pub const DEFAULT_MAX_GAP_S: f64 = 0.5;

pub fn is_usable_behavior(label: &str) -> bool {
    let label = label.trim();
    !UNUSABLE_BEHAVIORS
        .iter()
        .any(|u| u.eq_ignore_ascii_case(label))
}

fn detection_is_usable(d: &Detection) -> bool {
    d.behavior.as_deref().is_none_or(is_usable_behavior)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    /// Seconds since the mission epoch.
    pub timestamp: f64,
    pub frame: Option<u64>,
    pub vel_x: f64,
    pub vel_y: f64,
    pub vel_z: f64,
    /// Meters above ground.
    pub altitude: f64,
}

impl TelemetryRecord {
    pub fn speed(&self) -> f64 {
        libm::sqrt(self.vel_x * self.vel_x + self.vel_y * self.vel_y + self.vel_z * self.vel_z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationRecord {
    pub frame: u64,
    pub timestamp: f64,
    pub track_id: u32,
    pub behavior: String,
    pub bbox_min: PixelPoint,
    pub bbox_max: PixelPoint,
}

impl AnnotationRecord {
    /// Timestamp of `frame` for a video starting at `video_start` seconds.
    pub fn frame_timestamp(video_start: f64, frame: u64) -> f64 {
        video_start + frame as f64 / FRAME_RATE_HZ
    }

    pub fn to_detection(&self) -> Result<Detection> {
        Ok(Detection::new(self.frame, self.bbox_min, self.bbox_max)?
            .with_behavior(self.behavior.clone())
            .with_track_id(self.track_id))
    }
}

/// One annotated frame joined to its nearest telemetry sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub frame: u64,
    pub timestamp: f64,
    pub detections: Vec<Detection>,
    /// `None` when the nearest sample is further than the join gap.
    pub telemetry: Option<TelemetryRecord>,
    /// At least one detection carries a usable behavior label.
    pub usable: bool,
}

impl FrameObservation {
    pub fn new(
        frame: u64,
        timestamp: f64,
        detections: Vec<Detection>,
        telemetry: Option<TelemetryRecord>,
    ) -> Self {
        let usable = detections.iter().any(detection_is_usable);
        Self {
            frame,
            timestamp,
            detections,
            telemetry,
            usable,
        }
    }

    pub fn is_joined(&self) -> bool {
        self.telemetry.is_some()
    }
}

/// Index of the record nearest to `t` in a timestamp-sorted slice; ties go to the earlier.
pub fn nearest_index(telemetry: &[TelemetryRecord], t: f64) -> Option<usize> {
    if telemetry.is_empty() {
        return None;
    }
    let i = telemetry.partition_point(|r| r.timestamp < t);
    if i == 0 {
        return Some(0);
    }
    if i == telemetry.len() {
        return Some(i - 1);
    }
    let before = t - telemetry[i - 1].timestamp;
    let after = telemetry[i].timestamp - t;
    Some(if before <= after { i - 1 } else { i })
}

/// Groups annotations by frame and joins each frame to the nearest telemetry sample.
///
/// Every annotation row ends up as a detection of exactly one output frame; frames whose
/// nearest sample is more than `max_gap` seconds away carry `telemetry: None`.
pub fn reconcile(
    telemetry: &[TelemetryRecord],
    annotations: &[AnnotationRecord],
    max_gap: f64,
) -> Result<Vec<FrameObservation>> {
    if telemetry.is_empty() {
        return Err(Error::EmptyTelemetry);
    }
    let mut frames: BTreeMap<u64, (f64, Vec<Detection>)> = BTreeMap::new();
    for a in annotations {
        let det = a.to_detection()?;
        frames
            .entry(a.frame)
            .or_insert_with(|| (a.timestamp, Vec::new()))
            .1
            .push(det);
    }
    Ok(frames
        .into_iter()
        .map(|(frame, (t, detections))| {
            let joined = nearest_index(telemetry, t)
                .map(|i| telemetry[i])
                .filter(|r| (r.timestamp - t).abs() <= max_gap);
            FrameObservation::new(frame, t, detections, joined)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UsabilityRule {
    /// A frame is usable if any of its boxes carries a usable label.
    #[default]
    PerFrame,
    /// Every annotation row counts on its own.
    PerRow,
}

/// Usable share of the joined frames (or rows, under [`UsabilityRule::PerRow`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsabilityReport {
    pub usable_frames: usize,
    pub total_frames: usize,
    pub usable_minutes: f64,
    pub total_minutes: f64,
    /// `None` when nothing was counted.
    pub rate: Option<f64>,
    /// Frames left out because no telemetry sample was within the join gap.
    pub unjoined_frames: usize,
}

impl UsabilityReport {
    /// Sums the counts of several reports; minutes are re-derived from the sums.
    pub fn merge(reports: &[UsabilityReport]) -> UsabilityReport {
        let mut out = UsabilityReport {
            usable_frames: 0,
            total_frames: 0,
            usable_minutes: 0.0,
            total_minutes: 0.0,
            rate: None,
            unjoined_frames: 0,
        };
        let mut frame_minutes = 0.0;
        for r in reports {
            out.usable_frames += r.usable_frames;
            out.total_frames += r.total_frames;
            out.unjoined_frames += r.unjoined_frames;
            frame_minutes += r.total_minutes;
        }
        out.total_minutes = frame_minutes;
        if out.total_frames > 0 {
            let rate = out.usable_frames as f64 / out.total_frames as f64;
            out.rate = Some(rate);
            out.usable_minutes = rate * frame_minutes;
        }
        out
    }
}

fn frames_to_minutes(frames: usize) -> f64 {
    frames as f64 / (FRAME_RATE_HZ * 60.0)
}

/// Minutes are always frame based; under `PerRow` the usable minutes are the row rate
/// applied to the joined footage.
pub fn usability_report(observations: &[FrameObservation], rule: UsabilityRule) -> UsabilityReport {
    let joined = observations.iter().filter(|o| o.is_joined());
    let unjoined_frames = observations.iter().filter(|o| !o.is_joined()).count();
    let joined_frames = observations.len() - unjoined_frames;
    let (usable, total) = match rule {
        UsabilityRule::PerFrame => (joined.filter(|o| o.usable).count(), joined_frames),
        UsabilityRule::PerRow => joined.fold((0, 0), |(u, t), o| {
            let good = o
                .detections
                .iter()
                .filter(|d| detection_is_usable(d))
                .count();
            (u + good, t + o.detections.len())
        }),
    };
    let total_minutes = frames_to_minutes(joined_frames);
    let rate = (total > 0).then(|| usable as f64 / total as f64);
    let usable_minutes = match rule {
        UsabilityRule::PerFrame => frames_to_minutes(usable),
        UsabilityRule::PerRow => rate.unwrap_or(0.0) * total_minutes,
    };
    UsabilityReport {
        usable_frames: usable,
        total_frames: total,
        usable_minutes,
        total_minutes,
        rate,
        unjoined_frames,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorAltitudes {
    pub behavior: String,
    pub altitudes: Vec<f64>,
}

/// Altitudes at which each usable behavior label was observed, most frequent label
/// first (ties alphabetical). Only joined frames contribute.
pub fn behavior_altitude_histogram(observations: &[FrameObservation]) -> Vec<BehaviorAltitudes> {
    let mut buckets: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for o in observations {
        let Some(t) = o.telemetry else { continue };
        for d in &o.detections {
            if let Some(b) = d.behavior.as_deref().filter(|b| is_usable_behavior(b)) {
                buckets.entry(b).or_default().push(t.altitude);
            }
        }
    }
    let mut out: Vec<BehaviorAltitudes> = buckets
        .into_iter()
        .map(|(b, altitudes)| BehaviorAltitudes {
            behavior: b.into(),
            altitudes,
        })
        .collect();
    // BTreeMap order is alphabetical; stable sort keeps it among equal counts
    out.sort_by_key(|b| core::cmp::Reverse(b.altitudes.len()));
    out
}

/// Series behind the usable-footage statistics: per usable joined frame the altitude and
/// speed, per usable box its width and height.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UsableSeries {
    pub altitude: Vec<f64>,
    pub speed: Vec<f64>,
    pub bbox_width: Vec<f64>,
    pub bbox_height: Vec<f64>,
}

pub fn usable_series(observations: &[FrameObservation]) -> UsableSeries {
    let mut s = UsableSeries::default();
    for o in observations.iter().filter(|o| o.usable) {
        let Some(t) = o.telemetry else { continue };
        s.altitude.push(t.altitude);
        s.speed.push(t.speed());
        for d in o.detections.iter().filter(|d| detection_is_usable(d)) {
            s.bbox_width.push(d.width());
            s.bbox_height.push(d.height());
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tel(t: f64, alt: f64) -> TelemetryRecord {
        TelemetryRecord {
            timestamp: t,
            frame: None,
            vel_x: 0.0,
            vel_y: 0.0,
            vel_z: 0.0,
            altitude: alt,
        }
    }

    fn ann(frame: u64, t: f64, id: u32, behavior: &str) -> AnnotationRecord {
        AnnotationRecord {
            frame,
            timestamp: t,
            track_id: id,
            behavior: behavior.into(),
            bbox_min: PixelPoint::new(10.0, 10.0),
            bbox_max: PixelPoint::new(60.0, 80.0),
        }
    }

    #[test]
    fn frame_timestamp_uses_30_fps() {
        assert_eq!(AnnotationRecord::frame_timestamp(100.0, 60), 102.0);
    }

    #[test]
    fn behavior_set() {
        assert!(!is_usable_behavior("Occluded"));
        assert!(!is_usable_behavior("out of frame"));
        assert!(!is_usable_behavior(" Out of Focus "));
        assert!(is_usable_behavior("Graze"));
    }

    #[test]
    fn joins_nearest_sample() {
        let t = [tel(9.9, 15.0), tel(10.3, 16.0)];
        let obs = reconcile(&t, &[ann(0, 10.0, 1, "Graze")], 0.5).unwrap();
        assert_eq!(obs[0].telemetry.unwrap().timestamp, 9.9);
    }

    #[test]
    fn flags_gap() {
        let t = [tel(11.0, 15.0)];
        let obs = reconcile(&t, &[ann(0, 10.0, 1, "Graze")], 0.5).unwrap();
        assert_eq!(obs.len(), 1);
        assert!(!obs[0].is_joined());
        assert_eq!(
            usability_report(&obs, UsabilityRule::PerFrame).unjoined_frames,
            1
        );
    }

    #[test]
    fn empty_telemetry_is_error() {
        assert_eq!(reconcile(&[], &[], 0.5), Err(Error::EmptyTelemetry));
    }

    #[test]
    fn groups_rows_per_frame_without_dropping() {
        let t = [tel(0.0, 15.0), tel(1.0, 15.0)];
        let anns = [
            ann(0, 0.0, 1, "Graze"),
            ann(0, 0.0, 2, "Occluded"),
            ann(3, 0.1, 1, "Walk"),
            ann(90, 3.0, 1, "Walk"),
        ];
        let obs = reconcile(&t, &anns, 0.5).unwrap();
        assert_eq!(obs.len(), 3);
        assert_eq!(
            obs.iter().map(|o| o.detections.len()).sum::<usize>(),
            anns.len()
        );
        assert!(obs[0].usable);
        assert!(!obs[2].is_joined());
    }

    fn one_per_frame(behaviors: &[&str]) -> Vec<FrameObservation> {
        behaviors
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let a = ann(i as u64, i as f64 / 30.0, 1, b);
                FrameObservation::new(
                    a.frame,
                    a.timestamp,
                    vec![a.to_detection().unwrap()],
                    Some(tel(0.0, 12.0 + i as f64)),
                )
            })
            .collect()
    }

    #[test]
    fn usability_half() {
        let obs = one_per_frame(&["Graze", "Occluded", "Walk", "Out of Frame"]);
        let r = usability_report(&obs, UsabilityRule::PerFrame);
        assert_eq!((r.usable_frames, r.total_frames), (2, 4));
        assert_eq!(r.rate, Some(0.5));
        assert!((r.total_minutes - 4.0 / 1800.0).abs() < 1e-15);
        assert!((r.usable_minutes - 2.0 / 1800.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_frame_is_usable_per_frame_but_split_per_row() {
        let a = ann(0, 0.0, 1, "Graze");
        let b = ann(0, 0.0, 2, "Occluded");
        let obs = vec![FrameObservation::new(
            0,
            0.0,
            vec![a.to_detection().unwrap(), b.to_detection().unwrap()],
            Some(tel(0.0, 15.0)),
        )];
        assert!(obs[0].usable);
        assert_eq!(
            usability_report(&obs, UsabilityRule::PerFrame).rate,
            Some(1.0)
        );
        assert_eq!(
            usability_report(&obs, UsabilityRule::PerRow).rate,
            Some(0.5)
        );
    }

    #[test]
    fn empty_usability_is_undefined() {
        let r = usability_report(&[], UsabilityRule::PerFrame);
        assert_eq!((r.total_frames, r.rate), (0, None));
    }

    #[test]
    fn merge_sums_counts() {
        let a = usability_report(
            &one_per_frame(&["Graze", "Occluded"]),
            UsabilityRule::PerFrame,
        );
        let b = usability_report(&one_per_frame(&["Graze", "Walk"]), UsabilityRule::PerFrame);
        let m = UsabilityReport::merge(&[a, b]);
        assert_eq!(
            (m.usable_frames, m.total_frames, m.rate),
            (3, 4, Some(0.75))
        );
    }

    #[test]
    fn histogram_single_bucket() {
        let obs = one_per_frame(&["Graze", "Graze"]);
        let h = behavior_altitude_histogram(&obs);
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].altitudes, vec![12.0, 13.0]);
    }

    #[test]
    fn histogram_orders_by_count_then_name() {
        let obs = one_per_frame(&[
            "Walk", "Graze", "Walk", "Graze", "Walk", "Graze", "Walk", "Walk", "Occluded", "Auto",
            "Run",
        ]);
        let h = behavior_altitude_histogram(&obs);
        let names: Vec<&str> = h.iter().map(|b| b.behavior.as_str()).collect();
        assert_eq!(names, ["Walk", "Graze", "Auto", "Run"]);
        assert_eq!(h[0].altitudes.len(), 5);
    }

    #[test]
    fn usable_series_skips_unusable() {
        let obs = one_per_frame(&["Graze", "Occluded", "Walk"]);
        let s = usable_series(&obs);
        assert_eq!(s.altitude, vec![12.0, 14.0]);
        assert_eq!(s.bbox_width, vec![50.0, 50.0]);
        assert_eq!(s.bbox_height, vec![70.0, 70.0]);
    }
}
