//! Navigation policies mapping one frame's detections to a single-axis UAV command.
//!
//! Command sign conventions (heading fixed at north):
//! `MoveX` + is right/east, `MoveY` + is forward/north (image up), `MoveZ` + is up.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::detection::Detection;
use crate::error::{invalid, Error, Result};
use crate::geometry::{CameraIntrinsics, PixelPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CommandKind {
    Hover,
    MoveX,
    MoveY,
    MoveZ,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Hover => "hover",
            CommandKind::MoveX => "move_x",
            CommandKind::MoveY => "move_y",
            CommandKind::MoveZ => "move_z",
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A discrete UAV action: hover, or a signed move in meters along exactly one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub kind: CommandKind,
    pub magnitude: f64,
}

impl Command {
    pub const HOVER: Command = Command {
        kind: CommandKind::Hover,
        magnitude: 0.0,
    };

    pub fn movement(kind: CommandKind, magnitude: f64) -> Self {
        debug_assert!(kind != CommandKind::Hover && magnitude != 0.0);
        Self { kind, magnitude }
    }

    pub fn is_hover(&self) -> bool {
        self.kind == CommandKind::Hover
    }

    /// +1, -1, or 0 for hover.
    pub fn sign(&self) -> i8 {
        if self.is_hover() {
            0
        } else if self.magnitude > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Displacement (east, north, up) in meters this command asks for.
    pub fn displacement(&self) -> [f64; 3] {
        match self.kind {
            CommandKind::Hover => [0.0; 3],
            CommandKind::MoveX => [self.magnitude, 0.0, 0.0],
            CommandKind::MoveY => [0.0, self.magnitude, 0.0],
            CommandKind::MoveZ => [0.0, 0.0, self.magnitude],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_hover() {
            f.write_str("hover")
        } else {
            write!(f, "{} {:+}", self.kind, self.magnitude)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavState {
    /// East, north, altitude above ground (m).
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub timestamp: f64,
}

impl UavState {
    pub fn at_altitude(altitude: f64) -> Self {
        Self {
            position: [0.0, 0.0, altitude],
            velocity: [0.0; 3],
            timestamp: 0.0,
        }
    }

    #[inline]
    pub fn altitude(&self) -> f64 {
        self.position[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    /// Per-axis centroid tolerance around the image center.
    pub deadband_px: f64,
    pub alt_min_m: f64,
    pub alt_max_m: f64,
    pub bbox_target_px: f64,
    pub bbox_tolerance_px: f64,
    pub max_step_m: f64,
    pub min_step_m: f64,
    pub decision_period_s: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            // 5% of a 3840 px frame
            deadband_px: 192.0,
            alt_min_m: 10.0,
            alt_max_m: 30.0,
            bbox_target_px: 100.0,
            bbox_tolerance_px: 25.0,
            max_step_m: 5.0,
            min_step_m: 0.5,
            decision_period_s: 1.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alt_min_m > 0.0) {
            return Err(invalid("policy.alt_min_m", "must be > 0"));
        }
        if !(self.alt_min_m < self.alt_max_m) {
            return Err(invalid("policy.alt_max_m", "alt_min_m must be < alt_max_m"));
        }
        if !(self.deadband_px > 0.0) {
            return Err(invalid("policy.deadband_px", "must be > 0"));
        }
        if !(self.bbox_target_px > 0.0) {
            return Err(invalid("policy.bbox_target_px", "must be > 0"));
        }
        if !(self.bbox_tolerance_px >= 0.0) {
            return Err(invalid("policy.bbox_tolerance_px", "must be >= 0"));
        }
        if !(self.min_step_m > 0.0) {
            return Err(invalid("policy.min_step_m", "must be > 0"));
        }
        if !(self.min_step_m <= self.max_step_m) {
            return Err(invalid(
                "policy.max_step_m",
                "min_step_m must be <= max_step_m",
            ));
        }
        if !(self.decision_period_s > 0.0) {
            return Err(invalid("policy.decision_period_s", "must be > 0"));
        }
        Ok(())
    }

    pub fn altitude_in_band(&self, z: f64) -> bool {
        (self.alt_min_m..=self.alt_max_m).contains(&z)
    }

    pub fn size_in_band(&self, size_px: f64) -> bool {
        (self.bbox_target_px - self.bbox_tolerance_px
            ..=self.bbox_target_px + self.bbox_tolerance_px)
            .contains(&size_px)
    }
}

/// Order-independent sum: sorting first makes the result bitwise permutation invariant.
fn stable_sum(mut values: Vec<f64>) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

/// Mean of the bounding-box centers.
pub fn herd_centroid(detections: &[Detection]) -> Result<PixelPoint> {
    if detections.is_empty() {
        return Err(Error::NoDetections);
    }
    let n = detections.len() as f64;
    let xs = detections.iter().map(|d| d.center().x).collect();
    let ys = detections.iter().map(|d| d.center().y).collect();
    Ok(PixelPoint::new(stable_sum(xs) / n, stable_sum(ys) / n))
}

/// Mean (width, height) of the bounding boxes.
pub fn mean_bbox_size(detections: &[Detection]) -> Result<(f64, f64)> {
    if detections.is_empty() {
        return Err(Error::NoDetections);
    }
    let n = detections.len() as f64;
    let ws = detections.iter().map(Detection::width).collect();
    let hs = detections.iter().map(Detection::height).collect();
    Ok((stable_sum(ws) / n, stable_sum(hs) / n))
}

fn signed_step(value: f64, cfg: &PolicyConfig) -> f64 {
    value
        .abs()
        .clamp(cfg.min_step_m, cfg.max_step_m)
        .copysign(value)
}

/// Lateral recentering shared by both policies; `None` inside the deadband.
fn recenter(
    detections: &[Detection],
    state: &UavState,
    intrinsics: &CameraIntrinsics,
    cfg: &PolicyConfig,
) -> Option<Command> {
    let centroid = herd_centroid(detections).ok()?;
    let c = intrinsics.center();
    let offset = PixelPoint::new(centroid.x - c.x, centroid.y - c.y);
    if offset.x.abs() <= cfg.deadband_px && offset.y.abs() <= cfg.deadband_px {
        return None;
    }
    let (east, down) = intrinsics
        .pixel_offset_to_ground_offset(state.altitude(), offset)
        .ok()?;
    // ties go to x
    Some(if offset.x.abs() >= offset.y.abs() {
        Command::movement(CommandKind::MoveX, signed_step(east, cfg))
    } else {
        Command::movement(CommandKind::MoveY, signed_step(-down, cfg))
    })
}

/// x-y centroid tracker at constant altitude. Never commands vertical motion.
pub fn decide_baseline(
    detections: &[Detection],
    state: &UavState,
    intrinsics: &CameraIntrinsics,
    cfg: &PolicyConfig,
) -> Command {
    recenter(detections, state, intrinsics, cfg).unwrap_or(Command::HOVER)
}

/// Centroid tracker with altitude control.
///
/// Priority: altitude-band safety, then lateral recentering, then bounding-box size
/// targeting, then hover. Size targeting uses `max(mean width, mean height)` and the
/// inverse-altitude scaling of box size: the altitude that would bring the size to
/// `bbox_target_px` is `z * size / target`. The resulting step is limited to
/// `max_step_m`, kept inside the altitude band, and dropped (hover) below `min_step_m`.
pub fn decide_improved(
    detections: &[Detection],
    state: &UavState,
    intrinsics: &CameraIntrinsics,
    cfg: &PolicyConfig,
) -> Command {
    let z = state.altitude();
    if z < cfg.alt_min_m {
        return Command::movement(CommandKind::MoveZ, signed_step(cfg.alt_min_m - z, cfg));
    }
    if z > cfg.alt_max_m {
        return Command::movement(CommandKind::MoveZ, signed_step(cfg.alt_max_m - z, cfg));
    }
    if detections.is_empty() {
        return Command::HOVER;
    }
    if let Some(cmd) = recenter(detections, state, intrinsics, cfg) {
        return cmd;
    }
    let Ok((w, h)) = mean_bbox_size(detections) else {
        return Command::HOVER;
    };
    let size = w.max(h);
    if cfg.size_in_band(size) {
        return Command::HOVER;
    }
    let dz = (z * (size / cfg.bbox_target_px - 1.0))
        .clamp(-cfg.max_step_m, cfg.max_step_m)
        .clamp(cfg.alt_min_m - z, cfg.alt_max_m - z);
    if dz.abs() >= cfg.min_step_m {
        Command::movement(CommandKind::MoveZ, dz)
    } else {
        Command::HOVER
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Baseline,
    Improved,
}

impl Policy {
    pub fn decide(
        self,
        detections: &[Detection],
        state: &UavState,
        intrinsics: &CameraIntrinsics,
        cfg: &PolicyConfig,
    ) -> Command {
        match self {
            Policy::Baseline => decide_baseline(detections, state, intrinsics, cfg),
            Policy::Improved => decide_improved(detections, state, intrinsics, cfg),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Baseline => "baseline",
            Policy::Improved => "improved",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Policy::Baseline),
            "improved" => Ok(Policy::Improved),
            _ => Err(Error::Domain("policy must be `baseline` or `improved`")),
        }
    }
}

/// A policy bound to its camera and configuration, counting decisions made without
/// any detection.
#[derive(Debug, Clone)]
pub struct Navigator {
    pub policy: Policy,
    pub config: PolicyConfig,
    pub intrinsics: CameraIntrinsics,
    no_detection_decisions: u64,
}

impl Navigator {
    pub fn new(policy: Policy, config: PolicyConfig, intrinsics: CameraIntrinsics) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            policy,
            config,
            intrinsics,
            no_detection_decisions: 0,
        })
    }

    pub fn decide(&mut self, detections: &[Detection], state: &UavState) -> Command {
        if detections.is_empty() {
            self.no_detection_decisions += 1;
        }
        self.policy
            .decide(detections, state, &self.intrinsics, &self.config)
    }

    pub fn no_detection_decisions(&self) -> u64 {
        self.no_detection_decisions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn boxed(cx: f64, cy: f64, w: f64, h: f64) -> Detection {
        Detection::new(
            0,
            PixelPoint::new(cx - w / 2.0, cy - h / 2.0),
            PixelPoint::new(cx + w / 2.0, cy + h / 2.0),
        )
        .unwrap()
    }

    fn square_cam() -> CameraIntrinsics {
        CameraIntrinsics::new(1000, 1000, FRAC_PI_2).unwrap()
    }

    #[test]
    fn centroid_examples() {
        let one = Detection::new(
            0,
            PixelPoint::new(400.0, 300.0),
            PixelPoint::new(500.0, 400.0),
        )
        .unwrap();
        assert_eq!(
            herd_centroid(&[one]).unwrap(),
            PixelPoint::new(450.0, 350.0)
        );
        let two = [
            boxed(100.0, 100.0, 10.0, 10.0),
            boxed(300.0, 200.0, 20.0, 40.0),
        ];
        assert_eq!(herd_centroid(&two).unwrap(), PixelPoint::new(200.0, 150.0));
        assert_eq!(herd_centroid(&[]), Err(Error::NoDetections));
    }

    #[test]
    fn centroid_matches_loop_oracle() {
        // five fixed pseudo-random boxes; oracle is a plain accumulation loop
        let boxes = [
            (812.3, 77.1, 40.0, 52.5),
            (13.9, 640.0, 8.0, 3.0),
            (555.5, 555.5, 120.0, 90.0),
            (1204.25, 300.75, 66.0, 71.0),
            (90.0, 1000.5, 15.0, 15.0),
        ];
        let dets: Vec<_> = boxes
            .iter()
            .map(|&(x, y, w, h)| boxed(x, y, w, h))
            .collect();
        let (mut sx, mut sy) = (0.0, 0.0);
        for d in &dets {
            sx += (d.bbox_min.x + d.bbox_max.x) / 2.0;
            sy += (d.bbox_min.y + d.bbox_max.y) / 2.0;
        }
        let c = herd_centroid(&dets).unwrap();
        assert!((c.x - sx / 5.0).abs() < 1e-9 && (c.y - sy / 5.0).abs() < 1e-9);
    }

    #[test]
    fn mean_size_examples() {
        assert_eq!(
            mean_bbox_size(&[boxed(50.0, 50.0, 100.0, 100.0)]).unwrap(),
            (100.0, 100.0)
        );
        let two = [
            boxed(200.0, 200.0, 80.0, 90.0),
            boxed(400.0, 400.0, 120.0, 110.0),
        ];
        assert_eq!(mean_bbox_size(&two).unwrap(), (100.0, 100.0));
        assert_eq!(mean_bbox_size(&[]), Err(Error::NoDetections));
    }

    #[test]
    fn baseline_examples() {
        let cam = square_cam();
        let cfg = PolicyConfig {
            deadband_px: 50.0,
            ..PolicyConfig::default()
        };
        let st = UavState::at_altitude(10.0);
        assert_eq!(
            decide_baseline(&[boxed(500.0, 500.0, 40.0, 40.0)], &st, &cam, &cfg),
            Command::HOVER
        );
        let cmd = decide_baseline(&[boxed(650.0, 500.0, 40.0, 40.0)], &st, &cam, &cfg);
        assert_eq!(cmd.kind, CommandKind::MoveX);
        assert!((cmd.magnitude - 3.0).abs() < 1e-12);
        assert_eq!(
            decide_baseline(&[boxed(510.0, 500.0, 40.0, 40.0)], &st, &cam, &cfg),
            Command::HOVER
        );
        assert_eq!(decide_baseline(&[], &st, &cam, &cfg), Command::HOVER);
    }

    #[test]
    fn baseline_axis_conventions_and_tie_break() {
        let cam = square_cam();
        let cfg = PolicyConfig {
            deadband_px: 50.0,
            ..PolicyConfig::default()
        };
        let st = UavState::at_altitude(10.0);
        // herd below center is to the south
        let down = decide_baseline(&[boxed(500.0, 700.0, 10.0, 10.0)], &st, &cam, &cfg);
        assert_eq!(down.kind, CommandKind::MoveY);
        assert!((down.magnitude + 4.0).abs() < 1e-12);
        let left = decide_baseline(&[boxed(100.0, 500.0, 10.0, 10.0)], &st, &cam, &cfg);
        assert_eq!((left.kind, left.magnitude), (CommandKind::MoveX, -5.0));
        let tie = decide_baseline(&[boxed(400.0, 400.0, 10.0, 10.0)], &st, &cam, &cfg);
        assert_eq!(tie.kind, CommandKind::MoveX);
        // 60 px at 0.02 m/px is 1.2 m; 30 m rounds up to min_step
        let small = decide_baseline(&[boxed(560.0, 500.0, 10.0, 10.0)], &st, &cam, &cfg);
        assert!((small.magnitude - 1.2).abs() < 1e-12);
        let cfg2 = PolicyConfig {
            deadband_px: 20.0,
            ..cfg
        };
        let tiny = decide_baseline(&[boxed(521.0, 500.0, 10.0, 10.0)], &st, &cam, &cfg2);
        assert_eq!(tiny.magnitude, 0.5);
    }

    #[test]
    fn improved_examples() {
        let cam = CameraIntrinsics::default();
        let cfg = PolicyConfig::default();
        let c = cam.center();
        let centered_100 = [boxed(c.x, c.y, 100.0, 100.0)];
        assert_eq!(
            decide_improved(&centered_100, &UavState::at_altitude(17.55), &cam, &cfg),
            Command::HOVER
        );

        // 20 * (0.5 - 1) = -10, limited to -5; lands at 15 m, inside the band
        let small = [boxed(c.x, c.y, 50.0, 50.0)];
        let cmd = decide_improved(&small, &UavState::at_altitude(20.0), &cam, &cfg);
        assert_eq!((cmd.kind, cmd.magnitude), (CommandKind::MoveZ, -5.0));
        assert!(20.0 + cmd.magnitude >= cfg.alt_min_m);

        let high = decide_improved(&centered_100, &UavState::at_altitude(35.0), &cam, &cfg);
        assert_eq!((high.kind, high.magnitude), (CommandKind::MoveZ, -5.0));
        let high_blind = decide_improved(&[], &UavState::at_altitude(35.0), &cam, &cfg);
        assert_eq!(high_blind.kind, CommandKind::MoveZ);
        assert!(high_blind.magnitude < 0.0);

        assert_eq!(
            decide_improved(&[], &UavState::at_altitude(20.0), &cam, &cfg),
            Command::HOVER
        );
    }

    #[test]
    fn improved_size_targeting_respects_band() {
        let cam = CameraIntrinsics::default();
        let cfg = PolicyConfig::default();
        let c = cam.center();
        // near the floor: the step that would reach target is cut at alt_min
        let small = [boxed(c.x, c.y, 50.0, 50.0)];
        let cmd = decide_improved(&small, &UavState::at_altitude(12.0), &cam, &cfg);
        assert_eq!(cmd.kind, CommandKind::MoveZ);
        assert!((cmd.magnitude + 2.0).abs() < 1e-12);
        // within min_step of the floor: hover
        let cmd = decide_improved(&small, &UavState::at_altitude(10.3), &cam, &cfg);
        assert_eq!(cmd, Command::HOVER);
        // oversized boxes ascend
        let big = [boxed(c.x, c.y, 200.0, 60.0)];
        let cmd = decide_improved(&big, &UavState::at_altitude(15.0), &cam, &cfg);
        assert_eq!((cmd.kind, cmd.magnitude), (CommandKind::MoveZ, 5.0));
        // below the band: climb back in
        let cmd = decide_improved(&big, &UavState::at_altitude(9.9), &cam, &cfg);
        assert_eq!((cmd.kind, cmd.magnitude), (CommandKind::MoveZ, 0.5));
    }

    #[test]
    fn navigator_counts_blind_decisions() {
        let mut nav = Navigator::new(
            Policy::Improved,
            PolicyConfig::default(),
            CameraIntrinsics::default(),
        )
        .unwrap();
        let st = UavState::at_altitude(20.0);
        nav.decide(&[], &st);
        nav.decide(&[boxed(1920.0, 1080.0, 100.0, 100.0)], &st);
        nav.decide(&[], &st);
        assert_eq!(nav.no_detection_decisions(), 2);
    }

    #[test]
    fn config_validation_names_field() {
        let bad = PolicyConfig {
            alt_min_m: 30.0,
            alt_max_m: 30.0,
            ..PolicyConfig::default()
        };
        match bad.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "policy.alt_max_m"),
            other => panic!("{other:?}"),
        }
        assert!(PolicyConfig::default().validate().is_ok());
    }

    #[test]
    fn policy_parse() {
        assert_eq!("baseline".parse::<Policy>().unwrap(), Policy::Baseline);
        assert_eq!("improved".parse::<Policy>().unwrap(), Policy::Improved);
        assert!("other".parse::<Policy>().is_err());
    }
}
