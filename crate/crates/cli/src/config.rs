//! Flat key-value configuration with section prefixes (`policy.*`, `camera.*`, `sim.*`,
//! `eval.*`).
//!
//! Files are TOML; nested tables flatten to dotted keys, so `[policy]\nalt_min_m = 12`
//! and `policy.alt_min_m = 12` are the same setting. Later sources override earlier ones.

use std::path::Path;

use herdnav_core::replay::{EvalOptions, DEFAULT_V_HOVER};
use herdnav_core::sim::SimConfig;
use herdnav_core::{CameraIntrinsics, PolicyConfig};
use toml::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub policy: PolicyConfig,
    pub sim: SimConfig,
    pub v_hover: f64,
    image_width: u32,
    image_height: u32,
    horizontal_fov: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let cam = CameraIntrinsics::default();
        Self {
            policy: PolicyConfig::default(),
            sim: SimConfig::default(),
            v_hover: DEFAULT_V_HOVER,
            image_width: cam.image_width(),
            image_height: cam.image_height(),
            horizontal_fov: cam.horizontal_fov(),
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("`{key}` must be a number"))),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::Config(format!(
            "`{key}` must be a non-negative integer"
        ))),
    }
}

fn as_array<const N: usize>(key: &str, v: &Value) -> Result<[f64; N]> {
    let err = || Error::Config(format!("`{key}` must be an array of {N} numbers"));
    let arr = v.as_array().ok_or_else(err)?;
    if arr.len() != N {
        return Err(err());
    }
    let mut out = [0.0; N];
    for (slot, item) in out.iter_mut().zip(arr) {
        *slot = as_f64(key, item)?;
    }
    Ok(out)
}

impl Settings {
    /// Applies one dotted key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        let p = &mut self.policy;
        let s = &mut self.sim;
        match key {
            "policy.deadband_px" => p.deadband_px = as_f64(key, v)?,
            "policy.alt_min_m" => p.alt_min_m = as_f64(key, v)?,
            "policy.alt_max_m" => p.alt_max_m = as_f64(key, v)?,
            "policy.bbox_target_px" => p.bbox_target_px = as_f64(key, v)?,
            "policy.bbox_tolerance_px" => p.bbox_tolerance_px = as_f64(key, v)?,
            "policy.max_step_m" => p.max_step_m = as_f64(key, v)?,
            "policy.min_step_m" => p.min_step_m = as_f64(key, v)?,
            "policy.decision_period_s" => p.decision_period_s = as_f64(key, v)?,
            "camera.image_width" => self.image_width = as_dimension(key, v)?,
            "camera.image_height" => self.image_height = as_dimension(key, v)?,
            "camera.horizontal_fov" => self.horizontal_fov = as_f64(key, v)?,
            "sim.seed" => s.seed = as_u64(key, v)?,
            "sim.duration_s" => s.duration_s = as_f64(key, v)?,
            "sim.physics_dt" => s.physics_dt = as_f64(key, v)?,
            "sim.herd_size" => s.herd_size = as_u64(key, v)? as usize,
            "sim.herd_spread_m" => s.herd_spread_m = as_f64(key, v)?,
            "sim.animal_speed_mean" => s.animal_speed_mean = as_f64(key, v)?,
            "sim.animal_speed_std" => s.animal_speed_std = as_f64(key, v)?,
            "sim.animal_turn_std" => s.animal_turn_std = as_f64(key, v)?,
            "sim.animal_extent" => {
                let [w, l] = as_array::<2>(key, v)?;
                s.animal_extent = (w, l);
            }
            "sim.detector_noise_px" => s.detector_noise_px = as_f64(key, v)?,
            "sim.detector_dropout" => s.detector_dropout = as_f64(key, v)?,
            "sim.initial_uav" => s.initial_uav = as_array::<3>(key, v)?,
            "sim.initial_herd_center" => s.initial_herd_center = as_array::<2>(key, v)?,
            "eval.v_hover" => self.v_hover = as_f64(key, v)?,
            _ => return Err(Error::Config(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies every key of a TOML table, in sorted key order.
    pub fn apply_table(&mut self, table: &toml::Table) -> Result<()> {
        let mut pairs = Vec::new();
        flatten("", table, &mut pairs);
        for (k, v) in &pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Like [`apply_table`](Self::apply_table) with `prefix` prepended to every key.
    pub fn apply_section(&mut self, prefix: &str, table: &toml::Table) -> Result<()> {
        let mut pairs = Vec::new();
        flatten(prefix, table, &mut pairs);
        for (k, v) in &pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigFile {
            path: path.into(),
            message: e.to_string(),
        })?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::ConfigFile {
                path: path.into(),
                message: e.message().to_string(),
            })?;
        self.apply_table(&table).map_err(|e| Error::ConfigFile {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// Applies a `key=value` override; the value uses TOML syntax (`1.5`, `[0, 0, 40]`).
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected key=value, got `{assignment}`")))?;
        let doc: toml::Table = format!("v = {}", raw.trim())
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse value for `{}`", key.trim())))?;
        self.set(key.trim(), &doc["v"])
    }

    pub fn camera(&self) -> Result<CameraIntrinsics> {
        Ok(CameraIntrinsics::new(
            self.image_width,
            self.image_height,
            self.horizontal_fov,
        )?)
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            period: self.policy.decision_period_s,
            v_hover: self.v_hover,
        }
    }

    /// Checks every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        self.camera()?;
        self.policy.validate()?;
        self.sim.validate(self.policy.decision_period_s)?;
        if !(self.v_hover >= 0.0) {
            return Err(Error::Config(
                "invalid config `eval.v_hover`: must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

fn as_dimension(key: &str, v: &Value) -> Result<u32> {
    u32::try_from(as_u64(key, v)?).map_err(|_| Error::Config(format!("`{key}` is out of range")))
}
