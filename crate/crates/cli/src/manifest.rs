//! Mission manifest: which telemetry/annotation pairs to process and how to read them.
//!
//! ```toml
//! output_dir = "reports"          # optional, `--out` wins
//! delimiter = ","                 # optional
//! max_gap_s = 0.5                 # optional join tolerance
//! usability_rule = "frame"        # or "row"
//!
//! [policy]                        # optional overrides, same keys as the policy config
//! deadband_px = 150
//!
//! [telemetry_columns]             # optional column mapping
//! timestamp = "t"
//!
//! [[missions]]
//! name = "day1_flight3"
//! telemetry = "day1_flight3.telemetry.csv"
//! annotations = "day1_flight3.annotations.csv"
//! video_start = 41.2
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use herdnav_core::telemetry::{UsabilityRule, DEFAULT_MAX_GAP_S};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::formats::TelemetryColumns;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RuleName {
    #[default]
    Frame,
    Row,
}

impl From<RuleName> for UsabilityRule {
    fn from(r: RuleName) -> Self {
        match r {
            RuleName::Frame => UsabilityRule::PerFrame,
            RuleName::Row => UsabilityRule::PerRow,
        }
    }
}

impl RuleName {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Frame => "frame",
            RuleName::Row => "row",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionEntry {
    pub name: String,
    pub telemetry: PathBuf,
    pub annotations: PathBuf,
    /// Seconds on the telemetry clock at which annotation frame 0 was recorded.
    pub video_start: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    output_dir: Option<PathBuf>,
    #[serde(default = "default_delimiter")]
    delimiter: char,
    #[serde(default = "default_max_gap")]
    max_gap_s: f64,
    #[serde(default)]
    usability_rule: RuleName,
    #[serde(default)]
    policy: toml::Table,
    #[serde(default)]
    camera: toml::Table,
    #[serde(default)]
    eval: toml::Table,
    #[serde(default)]
    telemetry_columns: TelemetryColumns,
    #[serde(default)]
    missions: Vec<MissionEntry>,
}

fn default_delimiter() -> char {
    ','
}

fn default_max_gap() -> f64 {
    DEFAULT_MAX_GAP_S
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub missions: Vec<MissionEntry>,
    pub output_dir: Option<PathBuf>,
    pub delimiter: u8,
    pub max_gap_s: f64,
    pub usability_rule: RuleName,
    pub telemetry_columns: TelemetryColumns,
    /// Overrides as `(section, table)`, applied in this order.
    pub overrides: Vec<(&'static str, toml::Table)>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg_err = |message: String| Error::ConfigFile {
            path: path.into(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(e.to_string()))?;
        let raw: RawManifest =
            toml::from_str(&text).map_err(|e| cfg_err(e.message().to_string()))?;
        if raw.missions.is_empty() {
            return Err(Error::Usage(format!(
                "{}: manifest lists no missions",
                path.display()
            )));
        }
        if !raw.delimiter.is_ascii() {
            return Err(cfg_err("delimiter must be a single ASCII character".into()));
        }
        if !(raw.max_gap_s >= 0.0) {
            return Err(cfg_err("max_gap_s must be >= 0".into()));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let mut missions = raw.missions;
        let mut names = std::collections::HashSet::new();
        for m in &mut missions {
            if !names.insert(m.name.clone()) {
                return Err(cfg_err(format!("duplicate mission name `{}`", m.name)));
            }
            if m.name.is_empty() || m.name.contains(['/', '\\']) {
                return Err(cfg_err(format!(
                    "mission name `{}` is not a plain file stem",
                    m.name
                )));
            }
            for p in [&mut m.telemetry, &mut m.annotations] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.is_file() {
                    return Err(cfg_err(format!(
                        "mission `{}`: {} does not exist",
                        m.name,
                        p.display()
                    )));
                }
            }
        }
        let output_dir = raw
            .output_dir
            .map(|d| if d.is_relative() { base.join(d) } else { d });
        Ok(Self {
            missions,
            output_dir,
            delimiter: raw.delimiter as u8,
            max_gap_s: raw.max_gap_s,
            usability_rule: raw.usability_rule,
            telemetry_columns: raw.telemetry_columns,
            overrides: vec![
                ("policy", raw.policy),
                ("camera", raw.camera),
                ("eval", raw.eval),
            ],
        })
    }
}
