//! Open-loop replay of recorded detections through a policy, scored against action labels
//! derived from the expert pilot's telemetry.
//!
//! Matching is on command kind and sign only. The move/hover F1 treats "move" as the
//! positive class; precision (recall) is 1 when nothing was predicted (labelled) as a move.

use alloc::vec::Vec;

use crate::controller::{Command, CommandKind, Policy, PolicyConfig, UavState};
use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::telemetry::{nearest_index, FrameObservation, TelemetryRecord};

/// Default speed below which an averaged axis velocity counts as hovering (m/s).
pub const DEFAULT_V_HOVER: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionLabel {
    pub window_start: f64,
    pub kind: CommandKind,
    /// +1 / -1, or 0 exactly when `kind` is hover.
    pub sign: i8,
}

impl ActionLabel {
    pub fn from_command(window_start: f64, cmd: &Command) -> Self {
        Self {
            window_start,
            kind: cmd.kind,
            sign: cmd.sign(),
        }
    }

    pub fn is_move(&self) -> bool {
        self.kind != CommandKind::Hover
    }

    pub fn matches(&self, cmd: &Command) -> bool {
        self.kind == cmd.kind && self.sign == cmd.sign()
    }
}

/// Evenly spaced decision windows `[start + k * period, start + (k + 1) * period)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowGrid {
    pub start: f64,
    pub period: f64,
    pub count: usize,
}

impl WindowGrid {
    pub fn new(start: f64, period: f64, count: usize) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Domain("window period must be positive"));
        }
        Ok(Self {
            start,
            period,
            count,
        })
    }

    /// Smallest grid starting at `first` whose windows cover `last`.
    pub fn spanning(first: f64, last: f64, period: f64) -> Result<Self> {
        let count = libm::floor((last - first) / period) as usize + 1;
        Self::new(first, period, count)
    }

    /// Windows covering the annotated footage of a mission.
    pub fn covering(observations: &[FrameObservation], period: f64) -> Result<Self> {
        match (observations.first(), observations.last()) {
            (Some(a), Some(b)) => Self::spanning(a.timestamp, b.timestamp, period),
            _ => Self::new(0.0, period, 0),
        }
    }

    pub fn window_start(&self, k: usize) -> f64 {
        self.start + k as f64 * self.period
    }

    pub fn starts(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.window_start(k))
    }
}

fn dominant_axis_label(window_start: f64, v: [f64; 3], v_hover: f64) -> ActionLabel {
    let mut axis = 0;
    for i in 1..3 {
        if v[i].abs() > v[axis].abs() {
            axis = i;
        }
    }
    if v[axis].abs() < v_hover {
        return ActionLabel {
            window_start,
            kind: CommandKind::Hover,
            sign: 0,
        };
    }
    let kind = [CommandKind::MoveX, CommandKind::MoveY, CommandKind::MoveZ][axis];
    ActionLabel {
        window_start,
        kind,
        sign: if v[axis] > 0.0 { 1 } else { -1 },
    }
}

/// Labels each window of `grid` from the mean telemetry velocity inside it.
///
/// A window without samples takes the velocity of the sample nearest its start. The
/// axis with the largest mean |velocity| wins (ties: x, then y, then z); if that is
/// below `v_hover` the window is a hover.
pub fn label_windows(
    telemetry: &[TelemetryRecord],
    grid: &WindowGrid,
    v_hover: f64,
) -> Result<Vec<ActionLabel>> {
    if telemetry.is_empty() {
        return Err(Error::EmptyTelemetry);
    }
    let mut labels = Vec::with_capacity(grid.count);
    for start in grid.starts() {
        let end = start + grid.period;
        let lo = telemetry.partition_point(|r| r.timestamp < start);
        let hi = telemetry.partition_point(|r| r.timestamp < end);
        let v = if hi > lo {
            let n = (hi - lo) as f64;
            let mut sum = [0.0; 3];
            for r in &telemetry[lo..hi] {
                sum[0] += r.vel_x;
                sum[1] += r.vel_y;
                sum[2] += r.vel_z;
            }
            [sum[0] / n, sum[1] / n, sum[2] / n]
        } else {
            let r = telemetry[nearest_index(telemetry, start).unwrap_or(0)];
            [r.vel_x, r.vel_y, r.vel_z]
        };
        labels.push(dominant_axis_label(start, v, v_hover));
    }
    Ok(labels)
}

/// Expert labels over the whole telemetry span at `period` second windows.
pub fn label_expert_actions(
    telemetry: &[TelemetryRecord],
    period: f64,
    v_hover: f64,
) -> Result<Vec<ActionLabel>> {
    let (Some(first), Some(last)) = (telemetry.first(), telemetry.last()) else {
        return Err(Error::EmptyTelemetry);
    };
    let grid = WindowGrid::spanning(first.timestamp, last.timestamp, period)?;
    label_windows(telemetry, &grid, v_hover)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayStep {
    pub window_start: f64,
    pub command: Command,
    /// The window had no joined observation; the command is the no-detection hover.
    pub flagged: bool,
}

/// Runs `policy` once per window on the earliest observation inside it. Commands are only
/// recorded, never applied to the trajectory.
pub fn replay(
    observations: &[FrameObservation],
    policy: Policy,
    cfg: &PolicyConfig,
    intrinsics: &CameraIntrinsics,
    grid: &WindowGrid,
) -> Vec<ReplayStep> {
    grid.starts()
        .map(|start| {
            let i = observations.partition_point(|o| o.timestamp < start);
            let chosen = observations
                .get(i)
                .filter(|o| o.timestamp < start + grid.period)
                .and_then(|o| o.telemetry.map(|t| (o, t)));
            match chosen {
                Some((obs, t)) => {
                    let state = UavState {
                        position: [0.0, 0.0, t.altitude],
                        velocity: [t.vel_x, t.vel_y, t.vel_z],
                        timestamp: t.timestamp,
                    };
                    ReplayStep {
                        window_start: start,
                        command: policy.decide(&obs.detections, &state, intrinsics, cfg),
                        flagged: false,
                    }
                }
                None => ReplayStep {
                    window_start: start,
                    command: Command::HOVER,
                    flagged: true,
                },
            }
        })
        .collect()
}

/// The labels a policy would give itself: kind and sign of its own commands.
pub fn labels_from_steps(steps: &[ReplayStep]) -> Vec<ActionLabel> {
    steps
        .iter()
        .map(|s| ActionLabel::from_command(s.window_start, &s.command))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub total_windows: usize,
    pub exact_matches: usize,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Windows replayed without a joined observation (scored as-is).
    pub flagged_windows: usize,
}

impl EvalReport {
    fn from_counts(
        total_windows: usize,
        exact_matches: usize,
        tp: usize,
        fp: usize,
        fn_: usize,
        tn: usize,
        flagged_windows: usize,
    ) -> Self {
        // an empty denominator means that class was never predicted / never present,
        // which is scored as perfect
        let rate = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
        let precision = rate(tp, tp + fp);
        let recall = rate(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            total_windows,
            exact_matches,
            accuracy: if total_windows == 0 {
                0.0
            } else {
                exact_matches as f64 / total_windows as f64
            },
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            flagged_windows,
        }
    }

    /// Fraction of windows where move/hover agrees, regardless of axis and sign.
    pub fn binary_accuracy(&self) -> f64 {
        if self.total_windows == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / self.total_windows as f64
        }
    }

    /// Pools the counts of several reports and recomputes the rates.
    pub fn merge(reports: &[EvalReport]) -> Self {
        let mut c = [0usize; 7];
        for r in reports {
            for (acc, v) in c.iter_mut().zip([
                r.total_windows,
                r.exact_matches,
                r.tp,
                r.fp,
                r.fn_,
                r.tn,
                r.flagged_windows,
            ]) {
                *acc += v;
            }
        }
        Self::from_counts(c[0], c[1], c[2], c[3], c[4], c[5], c[6])
    }
}

pub fn score(predicted: &[Command], expert: &[ActionLabel]) -> Result<EvalReport> {
    if predicted.len() != expert.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            expert: expert.len(),
        });
    }
    let (mut exact, mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0, 0);
    for (cmd, label) in predicted.iter().zip(expert) {
        if label.matches(cmd) {
            exact += 1;
        }
        match (!cmd.is_hover(), label.is_move()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(
        predicted.len(),
        exact,
        tp,
        fp,
        fn_,
        tn,
        0,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub period: f64,
    pub v_hover: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            period: 1.0,
            v_hover: DEFAULT_V_HOVER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionEval {
    pub steps: Vec<ReplayStep>,
    pub labels: Vec<ActionLabel>,
    pub report: EvalReport,
}

/// Replays one mission and scores it against telemetry-derived expert labels on the
/// windows covering its annotated footage.
pub fn evaluate_mission(
    telemetry: &[TelemetryRecord],
    observations: &[FrameObservation],
    policy: Policy,
    cfg: &PolicyConfig,
    intrinsics: &CameraIntrinsics,
    opts: &EvalOptions,
) -> Result<MissionEval> {
    let grid = WindowGrid::covering(observations, opts.period)?;
    let labels = label_windows(telemetry, &grid, opts.v_hover)?;
    let steps = replay(observations, policy, cfg, intrinsics, &grid);
    let commands: Vec<Command> = steps.iter().map(|s| s.command).collect();
    let mut report = score(&commands, &labels)?;
    report.flagged_windows = steps.iter().filter(|s| s.flagged).count();
    Ok(MissionEval {
        steps,
        labels,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::Detection;
    use crate::geometry::PixelPoint;
    use alloc::vec;

    fn tel(t: f64, v: [f64; 3], alt: f64) -> TelemetryRecord {
        TelemetryRecord {
            timestamp: t,
            frame: None,
            vel_x: v[0],
            vel_y: v[1],
            vel_z: v[2],
            altitude: alt,
        }
    }

    fn mv(kind: CommandKind, m: f64) -> Command {
        Command::movement(kind, m)
    }

    fn label(kind: CommandKind, sign: i8) -> ActionLabel {
        ActionLabel {
            window_start: 0.0,
            kind,
            sign,
        }
    }

    #[test]
    fn dominant_axis_examples() {
        let t = [tel(0.0, [0.0; 3], 20.0)];
        let l = label_expert_actions(&t, 1.0, 0.25).unwrap();
        assert_eq!((l.len(), l[0].kind, l[0].sign), (1, CommandKind::Hover, 0));

        let t = [tel(0.0, [0.9, 0.1, 0.0], 20.0)];
        let l = label_expert_actions(&t, 1.0, 0.25).unwrap();
        assert_eq!((l[0].kind, l[0].sign), (CommandKind::MoveX, 1));

        let t = [tel(0.0, [0.1, 0.2, 0.1], 20.0)];
        let l = label_expert_actions(&t, 1.0, 0.25).unwrap();
        assert_eq!(l[0].kind, CommandKind::Hover);

        let t = [tel(0.0, [0.1, 0.2, -3.0], 20.0)];
        let l = label_expert_actions(&t, 1.0, 0.25).unwrap();
        assert_eq!((l[0].kind, l[0].sign), (CommandKind::MoveZ, -1));

        assert_eq!(
            label_expert_actions(&[], 1.0, 0.25),
            Err(Error::EmptyTelemetry)
        );
    }

    #[test]
    fn windows_average_their_samples() {
        let t = [
            tel(0.0, [1.0, 0.0, 0.0], 20.0),
            tel(0.5, [-0.6, 0.0, 0.0], 20.0),
            tel(1.0, [0.0, -1.0, 0.0], 20.0),
            tel(3.2, [0.0, 0.0, 0.0], 20.0),
        ];
        let l = label_expert_actions(&t, 1.0, 0.25).unwrap();
        // windows [0,1) [1,2) [2,3) [3,4); the empty third window copies its nearest sample
        assert_eq!(l.len(), 4);
        assert_eq!(l[0].kind, CommandKind::Hover); // mean 0.2
        assert_eq!((l[1].kind, l[1].sign), (CommandKind::MoveY, -1));
        assert_eq!((l[2].kind, l[2].sign), (CommandKind::MoveY, -1));
        assert_eq!(l[3].kind, CommandKind::Hover);
    }

    #[test]
    fn score_hand_enumerated() {
        let p = [
            mv(CommandKind::MoveX, 2.0),
            Command::HOVER,
            mv(CommandKind::MoveX, 1.0),
            mv(CommandKind::MoveX, 3.0),
        ];
        let l = [
            label(CommandKind::MoveX, 1),
            label(CommandKind::MoveX, 1),
            label(CommandKind::MoveX, 1),
            label(CommandKind::Hover, 0),
        ];
        let r = score(&p, &l).unwrap();
        assert_eq!((r.tp, r.fn_, r.fp, r.tn), (2, 1, 1, 0));
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn score_identity_and_mismatch() {
        let p = [
            mv(CommandKind::MoveZ, -1.0),
            Command::HOVER,
            mv(CommandKind::MoveY, 4.0),
        ];
        let l: Vec<_> = p
            .iter()
            .map(|c| ActionLabel::from_command(0.0, c))
            .collect();
        let r = score(&p, &l).unwrap();
        assert_eq!((r.accuracy, r.f1), (1.0, 1.0));
        assert_eq!(
            score(&p, &l[..2]),
            Err(Error::LengthMismatch {
                predicted: 3,
                expert: 2
            })
        );
        let all_move = [mv(CommandKind::MoveX, 1.0); 3];
        let all_hover = [label(CommandKind::Hover, 0); 3];
        let r = score(&all_move, &all_hover).unwrap();
        assert_eq!((r.accuracy, r.f1), (0.0, 0.0));
        let r = score(&[Command::HOVER; 3], &all_hover).unwrap();
        assert_eq!(
            (r.accuracy, r.precision, r.recall, r.f1),
            (1.0, 1.0, 1.0, 1.0)
        );
        let r = score(&[Command::HOVER; 3], &[label(CommandKind::MoveY, -1); 3]).unwrap();
        assert_eq!(
            (r.accuracy, r.precision, r.recall, r.f1),
            (0.0, 1.0, 0.0, 0.0)
        );
        // wrong sign still counts as a binary hit
        let r = score(
            &[mv(CommandKind::MoveX, -1.0)],
            &[label(CommandKind::MoveX, 1)],
        )
        .unwrap();
        assert_eq!((r.accuracy, r.tp, r.binary_accuracy()), (0.0, 1, 1.0));
    }

    #[test]
    fn merge_pools_counts() {
        let a = score(&[Command::HOVER], &[label(CommandKind::Hover, 0)]).unwrap();
        let b = score(
            &[mv(CommandKind::MoveX, 1.0)],
            &[label(CommandKind::MoveX, 1)],
        )
        .unwrap();
        let m = EvalReport::merge(&[a, b]);
        assert_eq!((m.total_windows, m.exact_matches, m.tp, m.tn), (2, 2, 1, 1));
        assert_eq!((m.accuracy, m.f1), (1.0, 1.0));
    }

    fn centered_obs(t: f64, alt: f64) -> FrameObservation {
        let c = CameraIntrinsics::default().center();
        let d = Detection::new(
            0,
            PixelPoint::new(c.x - 50.0, c.y - 50.0),
            PixelPoint::new(c.x + 50.0, c.y + 50.0),
        )
        .unwrap()
        .with_behavior("Graze");
        FrameObservation::new((t * 30.0) as u64, t, vec![d], Some(tel(t, [0.0; 3], alt)))
    }

    #[test]
    fn replay_centered_in_band_hovers_and_gaps_are_flagged() {
        let cam = CameraIntrinsics::default();
        let cfg = PolicyConfig::default();
        let obs = [
            centered_obs(0.0, 18.0),
            centered_obs(1.0, 18.0),
            centered_obs(3.0, 18.0),
        ];
        let grid = WindowGrid::covering(&obs, 1.0).unwrap();
        assert_eq!(grid.count, 4);
        let steps = replay(&obs, Policy::Improved, &cfg, &cam, &grid);
        assert!(steps.iter().all(|s| s.command.is_hover()));
        let flagged: Vec<bool> = steps.iter().map(|s| s.flagged).collect();
        assert_eq!(flagged, [false, false, true, false]);
    }

    #[test]
    fn replay_disagreement_is_exactly_the_altitude_windows() {
        let cam = CameraIntrinsics::default();
        let cfg = PolicyConfig::default();
        let alts = [18.0, 40.0, 22.0, 31.0, 9.0, 29.9];
        let obs: Vec<_> = alts
            .iter()
            .enumerate()
            .map(|(i, &a)| centered_obs(i as f64, a))
            .collect();
        let grid = WindowGrid::covering(&obs, 1.0).unwrap();
        let base = replay(&obs, Policy::Baseline, &cfg, &cam, &grid);
        let imp = replay(&obs, Policy::Improved, &cfg, &cam, &grid);
        let differing: Vec<usize> = (0..alts.len())
            .filter(|&i| base[i].command != imp[i].command)
            .collect();
        assert_eq!(differing, [1, 3, 4]);
    }

    #[test]
    fn self_labels_score_perfectly() {
        let cam = CameraIntrinsics::default();
        let cfg = PolicyConfig::default();
        let obs: Vec<_> = [45.0, 40.0, 35.0, 30.0, 25.0]
            .iter()
            .enumerate()
            .map(|(i, &a)| centered_obs(i as f64, a))
            .collect();
        let grid = WindowGrid::covering(&obs, 1.0).unwrap();
        let steps = replay(&obs, Policy::Improved, &cfg, &cam, &grid);
        let cmds: Vec<_> = steps.iter().map(|s| s.command).collect();
        let r = score(&cmds, &labels_from_steps(&steps)).unwrap();
        assert_eq!((r.accuracy, r.f1), (1.0, 1.0));
    }
}
