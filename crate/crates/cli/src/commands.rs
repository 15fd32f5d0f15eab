//! The `analyze`, `evaluate` and `simulate` subcommands.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use herdnav_core::controller::Policy;
use herdnav_core::replay::{evaluate_mission, EvalReport};
use herdnav_core::sim::{self, DecisionRecord, SimMetrics};
use herdnav_core::telemetry::{
    behavior_altitude_histogram, reconcile, usability_report, usable_series, FrameObservation,
    TelemetryRecord, UsabilityRule,
};
use log::info;

use crate::config::Settings;
use crate::error::{Error, Result};
use crate::formats::{parse_annotations, parse_telemetry};
use crate::manifest::{MissionEntry, RuleName, RunManifest};
use crate::report::{
    command_log_csv, to_json, trajectory_csv, write_file, AnalysisDoc, BehaviorBucketDoc, EvalDoc,
    SimDoc, UsabilityDoc,
};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct GlobalOptions {
    pub camera: Option<PathBuf>,
    pub policy_config: Option<PathBuf>,
    /// `key=value` overrides applied last.
    pub set: Vec<String>,
    pub stamp: bool,
}

/// Missions that failed while the others were processed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub failures: Vec<(String, Error)>,
    pub written: Vec<PathBuf>,
}

impl GlobalOptions {
    /// Defaults, then `base` sections, then `extra` file, then `--camera`,
    /// `--policy-config` and `--set`, then validation.
    fn settings(
        &self,
        base: &[(&'static str, toml::Table)],
        extra: Option<&Path>,
    ) -> Result<Settings> {
        let mut s = Settings::default();
        for (section, table) in base {
            s.apply_section(section, table)?;
        }
        for file in [extra, self.camera.as_deref(), self.policy_config.as_deref()]
            .into_iter()
            .flatten()
        {
            s.apply_file(file)?;
        }
        for a in &self.set {
            s.apply_assignment(a)?;
        }
        s.validate()?;
        Ok(s)
    }

    fn stamp(&self) -> Option<u64> {
        self.stamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
    }
}

fn resolve_out(flag: Option<PathBuf>, manifest: Option<&PathBuf>) -> Result<PathBuf> {
    let out = flag
        .or_else(|| manifest.cloned())
        .ok_or_else(|| Error::Usage("no output directory: pass --out".into()))?;
    std::fs::create_dir_all(&out)
        .map_err(|e| Error::Config(format!("output directory {}: {e}", out.display())))?;
    Ok(out)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub struct LoadedMission {
    pub telemetry: Vec<TelemetryRecord>,
    pub observations: Vec<FrameObservation>,
}

pub fn load_mission(entry: &MissionEntry, manifest: &RunManifest) -> Result<LoadedMission> {
    let telemetry = parse_telemetry(
        open(&entry.telemetry)?,
        &manifest.telemetry_columns,
        manifest.delimiter,
    )
    .map_err(|source| Error::Parse {
        path: entry.telemetry.clone(),
        source,
    })?;
    let annotations = parse_annotations(
        open(&entry.annotations)?,
        manifest.delimiter,
        entry.video_start,
    )
    .map_err(|source| Error::Parse {
        path: entry.annotations.clone(),
        source,
    })?;
    let observations = reconcile(&telemetry, &annotations, manifest.max_gap_s)?;
    info!(
        "mission {}: {} telemetry rows, {} annotation rows, {} frames",
        entry.name,
        telemetry.len(),
        annotations.len(),
        observations.len()
    );
    Ok(LoadedMission {
        telemetry,
        observations,
    })
}

fn analysis_doc(
    mission: &str,
    observations: &[FrameObservation],
    rule: RuleName,
    stamp: Option<u64>,
) -> AnalysisDoc {
    let usability = usability_report(observations, UsabilityRule::from(rule));
    let series = usable_series(observations);
    AnalysisDoc {
        kind: "analysis",
        mission: mission.to_string(),
        generated_at: stamp,
        usability_rule: rule.as_str(),
        usability: UsabilityDoc::from(usability),
        statistics: (&series).into(),
        behavior_altitude: behavior_altitude_histogram(observations)
            .iter()
            .map(BehaviorBucketDoc::from)
            .collect(),
    }
}

/// Per-mission and pooled usability, usable-footage statistics and behavior/altitude data.
pub fn analyze(
    manifest_path: &Path,
    out: Option<PathBuf>,
    rule: Option<RuleName>,
    global: &GlobalOptions,
) -> Result<Outcome> {
    let manifest = RunManifest::load(manifest_path)?;
    // validates camera/policy overrides even though analysis does not use them
    global.settings(&manifest.overrides, None)?;
    let out = resolve_out(out, manifest.output_dir.as_ref())?;
    let rule = rule.unwrap_or(manifest.usability_rule);
    let stamp = global.stamp();

    let mut outcome = Outcome::default();
    let mut pooled = Vec::new();
    for entry in &manifest.missions {
        match load_mission(entry, &manifest) {
            Ok(m) => {
                let path = out.join(format!("{}.analysis.json", entry.name));
                write_file(
                    &path,
                    &to_json(&analysis_doc(&entry.name, &m.observations, rule, stamp)),
                )?;
                outcome.written.push(path);
                pooled.extend(m.observations);
            }
            Err(e) => outcome.failures.push((entry.name.clone(), e)),
        }
    }
    let path = out.join("aggregate.analysis.json");
    write_file(
        &path,
        &to_json(&analysis_doc("aggregate", &pooled, rule, stamp)),
    )?;
    outcome.written.push(path);
    Ok(outcome)
}

/// Replays each mission through `policy` and scores it against the pilot's actions.
pub fn evaluate(
    manifest_path: &Path,
    out: Option<PathBuf>,
    policy: Policy,
    global: &GlobalOptions,
) -> Result<Outcome> {
    let manifest = RunManifest::load(manifest_path)?;
    let settings = global.settings(&manifest.overrides, None)?;
    let camera = settings.camera()?;
    let out = resolve_out(out, manifest.output_dir.as_ref())?;
    let stamp = global.stamp();
    let opts = settings.eval_options();

    let mut outcome = Outcome::default();
    let mut reports: Vec<EvalReport> = Vec::new();
    for entry in &manifest.missions {
        let result = load_mission(entry, &manifest).and_then(|m| {
            Ok(evaluate_mission(
                &m.telemetry,
                &m.observations,
                policy,
                &settings.policy,
                &camera,
                &opts,
            )?)
        });
        match result {
            Ok(eval) => {
                let stem = format!("{}.{}", entry.name, policy);
                let mut doc = EvalDoc::new(entry.name.clone(), policy.as_str(), &eval.report);
                doc.generated_at = stamp;
                let json = out.join(format!("{stem}.eval.json"));
                write_file(&json, &to_json(&doc))?;
                let log = out.join(format!("{stem}.commands.csv"));
                write_file(&log, &command_log_csv(&eval.steps, &eval.labels))?;
                outcome.written.extend([json, log]);
                reports.push(eval.report);
            }
            Err(e) => outcome.failures.push((entry.name.clone(), e)),
        }
    }
    let mut doc = EvalDoc::new(
        "aggregate".into(),
        policy.as_str(),
        &EvalReport::merge(&reports),
    );
    doc.generated_at = stamp;
    let path = out.join(format!("aggregate.{policy}.eval.json"));
    write_file(&path, &to_json(&doc))?;
    outcome.written.push(path);
    Ok(outcome)
}

/// Parses `a..b` / `a..=b` (both inclusive), `a,b,c`, or a single seed.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("cannot parse seeds `{spec}`"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds = if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn in_band_after(decisions: &[DecisionRecord], settings: &Settings, after_s: f64) -> (u64, u64) {
    decisions
        .iter()
        .filter(|d| d.t >= after_s)
        .fold((0, 0), |(inside, n), d| {
            (
                inside + u64::from(settings.policy.altitude_in_band(d.uav[2])),
                n + 1,
            )
        })
}

const WARMUP_S: f64 = 30.0;

/// Closed-loop runs, one per seed, plus a pooled summary.
pub fn simulate(
    config: Option<&Path>,
    policy: Policy,
    seeds: &[u64],
    out: PathBuf,
    global: &GlobalOptions,
) -> Result<Outcome> {
    let settings = global.settings(&[], config)?;
    let camera = settings.camera()?;
    let out = resolve_out(Some(out), None)?;
    let stamp = global.stamp();

    let mut outcome = Outcome::default();
    let mut metrics: Vec<SimMetrics> = Vec::new();
    let (mut inside, mut counted, mut blind) = (0, 0, 0);
    for &seed in seeds {
        let cfg = sim::SimConfig {
            seed,
            ..settings.sim
        };
        let run = sim::run(&cfg, &settings.policy, &camera, policy)?;
        let (i, n) = in_band_after(&run.decisions, &settings, WARMUP_S);
        inside += i;
        counted += n;
        blind += run.no_detection_decisions;
        let mut doc = SimDoc::new(policy.as_str(), Some(seed), &run.metrics);
        doc.generated_at = stamp;
        doc.no_detection_decisions = run.no_detection_decisions;
        doc.altitude_in_band_after_30s = (n > 0).then(|| i as f64 / n as f64);
        let stem = format!("seed_{seed}.{policy}");
        let json = out.join(format!("{stem}.metrics.json"));
        write_file(&json, &to_json(&doc))?;
        let traj = out.join(format!("{stem}.trajectory.csv"));
        write_file(&traj, &trajectory_csv(&run.trajectory))?;
        outcome.written.extend([json, traj]);
        info!("seed {seed}: yield {:.3}", run.metrics.yield_proxy);
        metrics.push(run.metrics);
    }
    let mut doc = SimDoc::new(policy.as_str(), None, &SimMetrics::aggregate(&metrics));
    doc.seeds = seeds.to_vec();
    doc.generated_at = stamp;
    doc.no_detection_decisions = blind;
    doc.altitude_in_band_after_30s = (counted > 0).then(|| inside as f64 / counted as f64);
    let path = out.join(format!("aggregate.{policy}.metrics.json"));
    write_file(&path, &to_json(&doc))?;
    outcome.written.push(path);
    Ok(outcome)
}
