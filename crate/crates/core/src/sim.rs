//! Closed-loop kinematic simulation: a correlated-random-walk herd, a geometric detector
//! with pixel noise and dropout, and a UAV that flies each command at constant velocity
//! over one decision period.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::controller::{mean_bbox_size, Command, Navigator, Policy, PolicyConfig, UavState};
use crate::detection::Detection;
use crate::error::{invalid, Result};
use crate::geometry::CameraIntrinsics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub duration_s: f64,
    pub physics_dt: f64,
    pub herd_size: usize,
    /// Radius of the disk the animals start in around `initial_herd_center`.
    pub herd_spread_m: f64,
    pub animal_speed_mean: f64,
    pub animal_speed_std: f64,
    /// Heading diffusion, radians per sqrt(second).
    pub animal_turn_std: f64,
    /// Ground extent (east, north) of one animal in meters.
    pub animal_extent: (f64, f64),
    pub detector_noise_px: f64,
    pub detector_dropout: f64,
    pub initial_uav: [f64; 3],
    pub initial_herd_center: [f64; 2],
}

impl Default for SimConfig {
    /// Out-of-band start: the UAV begins at 45 m above a loosely grouped, grazing herd.
    fn default() -> Self {
        Self {
            seed: 0,
            duration_s: 300.0,
            physics_dt: 0.1,
            herd_size: 5,
            herd_spread_m: 4.0,
            animal_speed_mean: 0.3,
            animal_speed_std: 0.1,
            animal_turn_std: 0.3,
            animal_extent: (1.0, 0.6),
            detector_noise_px: 2.0,
            detector_dropout: 0.05,
            initial_uav: [0.0, 0.0, 45.0],
            initial_herd_center: [0.0, 0.0],
        }
    }
}

impl SimConfig {
    pub fn validate(&self, decision_period_s: f64) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(invalid("sim.duration_s", "must be > 0"));
        }
        if !(self.physics_dt > 0.0 && self.physics_dt <= decision_period_s) {
            return Err(invalid(
                "sim.physics_dt",
                "must lie in (0, policy.decision_period_s]",
            ));
        }
        if self.herd_size < 1 {
            return Err(invalid("sim.herd_size", "must be >= 1"));
        }
        if !(self.herd_spread_m >= 0.0) {
            return Err(invalid("sim.herd_spread_m", "must be >= 0"));
        }
        if !(self.animal_speed_mean >= 0.0) {
            return Err(invalid("sim.animal_speed_mean", "must be >= 0"));
        }
        if !(self.animal_speed_std >= 0.0) {
            return Err(invalid("sim.animal_speed_std", "must be >= 0"));
        }
        if !(self.animal_turn_std >= 0.0) {
            return Err(invalid("sim.animal_turn_std", "must be >= 0"));
        }
        if !(self.animal_extent.0 > 0.0 && self.animal_extent.1 > 0.0) {
            return Err(invalid("sim.animal_extent", "must be positive"));
        }
        if !(self.detector_noise_px >= 0.0) {
            return Err(invalid("sim.detector_noise_px", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.detector_dropout) {
            return Err(invalid("sim.detector_dropout", "must lie in [0, 1)"));
        }
        if !(self.initial_uav[2] > 0.0) {
            return Err(invalid("sim.initial_uav", "altitude must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Animal {
    pub x: f64,
    pub y: f64,
    /// Radians counter-clockwise from east.
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Herd {
    pub animals: Vec<Animal>,
}

impl Herd {
    /// Scatters `cfg.herd_size` animals uniformly over the starting disk.
    pub fn spawn<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Self {
        let animals = (0..cfg.herd_size)
            .map(|_| {
                let r = cfg.herd_spread_m * libm::sqrt(rng.random::<f64>());
                let a = rng.random_range(0.0..TAU);
                Animal {
                    x: cfg.initial_herd_center[0] + r * libm::cos(a),
                    y: cfg.initial_herd_center[1] + r * libm::sin(a),
                    heading: rng.random_range(0.0..TAU),
                    speed: cfg.animal_speed_mean,
                }
            })
            .collect();
        Self { animals }
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Advances every animal one correlated-random-walk step of `dt` seconds.
pub fn step_herd<R: Rng>(rng: &mut R, herd: &mut Herd, cfg: &SimConfig, dt: f64) {
    let turn_scale = cfg.animal_turn_std * libm::sqrt(dt);
    for a in &mut herd.animals {
        let h = a.heading + turn_scale * normal(rng);
        a.heading = h - TAU * libm::floor(h / TAU);
        a.speed = (cfg.animal_speed_mean + cfg.animal_speed_std * normal(rng)).max(0.0);
        a.x += a.speed * dt * libm::cos(a.heading);
        a.y += a.speed * dt * libm::sin(a.heading);
    }
}

/// Geometric stand-in for the object detector.
///
/// Each animal inside the footprint is projected, dropped with probability
/// `detector_dropout`, then jittered by Gaussian pixel noise on center and size.
pub fn sense<R: Rng>(
    herd: &Herd,
    uav: [f64; 3],
    intrinsics: &CameraIntrinsics,
    cfg: &SimConfig,
    frame: u64,
    rng: &mut R,
) -> Result<Vec<Detection>> {
    let gsd = intrinsics.ground_sample_distance(uav[2])?;
    let c = intrinsics.center();
    let (iw, ih) = (
        f64::from(intrinsics.image_width()),
        f64::from(intrinsics.image_height()),
    );
    let sigma = cfg.detector_noise_px;
    let mut out = Vec::new();
    for (i, a) in herd.animals.iter().enumerate() {
        let cx = c.x + (a.x - uav[0]) / gsd;
        let cy = c.y - (a.y - uav[1]) / gsd;
        if !(0.0..=iw).contains(&cx) || !(0.0..=ih).contains(&cy) {
            continue;
        }
        if rng.random::<f64>() < cfg.detector_dropout {
            continue;
        }
        let w = (cfg.animal_extent.0 / gsd + sigma * normal(rng)).max(1.0);
        let h = (cfg.animal_extent.1 / gsd + sigma * normal(rng)).max(1.0);
        let cx = cx + sigma * normal(rng);
        let cy = cy + sigma * normal(rng);
        if let Some(mut d) = intrinsics.clipped_box(cx, cy, w, h) {
            d.frame = frame;
            d.track_id = Some(i as u32);
            out.push(d);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimMetrics {
    /// Decision windows simulated.
    pub frames_total: u64,
    /// Windows with at least one detection.
    pub frames_in_view: u64,
    /// Windows in view with altitude and mean box size both inside the policy bands.
    pub frames_fully_usable: u64,
    pub horizontal_distance_m: f64,
    pub vertical_distance_m: f64,
    pub yield_proxy: f64,
}

impl SimMetrics {
    fn finish(mut self) -> Self {
        self.yield_proxy = if self.frames_total == 0 {
            0.0
        } else {
            self.frames_fully_usable as f64 / self.frames_total as f64
        };
        self
    }

    /// Sums counts and distances; the yield is recomputed from the pooled counts.
    pub fn aggregate(runs: &[SimMetrics]) -> SimMetrics {
        let mut total = SimMetrics::default();
        for m in runs {
            total.frames_total += m.frames_total;
            total.frames_in_view += m.frames_in_view;
            total.frames_fully_usable += m.frames_fully_usable;
            total.horizontal_distance_m += m.horizontal_distance_m;
            total.vertical_distance_m += m.vertical_distance_m;
        }
        total.finish()
    }
}

/// State after one physics step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub uav: [f64; 3],
    pub animals: Vec<(f64, f64)>,
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionRecord {
    pub t: f64,
    pub uav: [f64; 3],
    pub detections: usize,
    pub command: Command,
    pub fully_usable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub metrics: SimMetrics,
    pub decisions: Vec<DecisionRecord>,
    pub trajectory: Vec<TrajectoryRow>,
    pub no_detection_decisions: u64,
}

/// Seeded simulation; identical arguments reproduce identical runs bit for bit.
///
/// The herd and the detector draw from separate streams of the same seed, so herd
/// motion does not depend on the policy being flown.
pub fn run(
    sim: &SimConfig,
    policy_cfg: &PolicyConfig,
    intrinsics: &CameraIntrinsics,
    policy: Policy,
) -> Result<SimRun> {
    policy_cfg.validate()?;
    sim.validate(policy_cfg.decision_period_s)?;
    let mut nav = Navigator::new(policy, *policy_cfg, *intrinsics)?;

    let mut herd_rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let mut sensor_rng = ChaCha8Rng::seed_from_u64(sim.seed);
    sensor_rng.set_stream(1);

    let period = policy_cfg.decision_period_s;
    let substeps = libm::ceil(period / sim.physics_dt - 1e-9).max(1.0) as u64;
    let dt = period / substeps as f64;
    let decisions = libm::floor(sim.duration_s / period + 1e-9) as u64;

    let mut herd = Herd::spawn(sim, &mut herd_rng);
    let mut uav = sim.initial_uav;
    let mut velocity = [0.0; 3];
    let mut metrics = SimMetrics::default();
    let mut decision_log = Vec::with_capacity(decisions as usize);
    let mut trajectory = Vec::with_capacity((decisions * substeps) as usize);

    for k in 0..decisions {
        let t0 = k as f64 * period;
        let detections = sense(&herd, uav, intrinsics, sim, k, &mut sensor_rng).unwrap_or_default();
        let state = UavState {
            position: uav,
            velocity,
            timestamp: t0,
        };
        let command = nav.decide(&detections, &state);

        let fully_usable = !detections.is_empty()
            && policy_cfg.altitude_in_band(uav[2])
            && mean_bbox_size(&detections).is_ok_and(|(w, h)| policy_cfg.size_in_band(w.max(h)));
        metrics.frames_total += 1;
        metrics.frames_in_view += u64::from(!detections.is_empty());
        metrics.frames_fully_usable += u64::from(fully_usable);
        decision_log.push(DecisionRecord {
            t: t0,
            uav,
            detections: detections.len(),
            command,
            fully_usable,
        });

        let start = uav;
        let disp = command.displacement();
        velocity = [disp[0] / period, disp[1] / period, disp[2] / period];
        for s in 1..=substeps {
            step_herd(&mut herd_rng, &mut herd, sim, dt);
            let frac = s as f64 / substeps as f64;
            let next = [
                start[0] + disp[0] * frac,
                start[1] + disp[1] * frac,
                start[2] + disp[2] * frac,
            ];
            metrics.horizontal_distance_m += libm::hypot(next[0] - uav[0], next[1] - uav[1]);
            metrics.vertical_distance_m += (next[2] - uav[2]).abs();
            uav = next;
            trajectory.push(TrajectoryRow {
                t: t0 + s as f64 * dt,
                uav,
                animals: herd.animals.iter().map(|a| (a.x, a.y)).collect(),
                command,
            });
        }
    }

    Ok(SimRun {
        metrics: metrics.finish(),
        decisions: decision_log,
        trajectory,
        no_detection_decisions: nav.no_detection_decisions(),
    })
}
