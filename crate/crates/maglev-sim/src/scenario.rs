//! Scenario files: one JSON document describing a complete run.
//!
//! A scenario bundles the track layout and fleet, the physical
//! parameterization of the movers, a goal script, and the run
//! horizon. `run_scenario` drives the line simulation tick by tick
//! and synthesizes one telemetry record per mover per tick, with the
//! levitation hold current for each mover's mass and the quadrature
//! drive current implied by its realized acceleration.

use crate::control::{iq_for_force, PIDGains};
use crate::dispatch::Job;
use crate::emfield::{levitation_current_for_load, GapActuatorSpec, MagnetSpec};
use crate::line::{
    self, advance, Command, LineConfig, LineError, LineEvent, LineState, MoverSpec, ScriptEntry,
    Station, TrackSegment,
};
use crate::telemetry::{summarize, RunSummary, TelemetryRecord};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    /// The text is not JSON at all.
    #[error("not valid JSON: {0}")]
    Malformed(String),
    /// Valid JSON that does not fit the scenario schema; the message
    /// names the offending field.
    #[error("does not match the scenario schema: {0}")]
    Schema(String),
    #[error("scenario invalid:\n  {}", diagnostics.join("\n  "))]
    Invalid { diagnostics: Vec<String> },
    #[error("simulation failed at tick {tick} (t = {t} s): {source}")]
    Simulation {
        tick: u64,
        t: f64,
        source: LineError,
    },
}

/// Track layout and fleet. The scenario's top-level `dt` completes
/// this into a line configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineLayout {
    pub segments: Vec<TrackSegment>,
    pub stations: Vec<Station>,
    pub movers: Vec<MoverSpec>,
    /// Minimum mover separation [m].
    pub min_headway: f64,
}

/// Linear synchronous motor constants shared by all movers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorConstants {
    /// Direct-axis flux linkage [Wb].
    pub psi_d: f64,
    /// Quadrature-axis flux linkage [Wb].
    pub psi_q: f64,
    /// Pole pitch [m].
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub line: LineLayout,
    /// Gap-loop controller gains.
    pub gains: PIDGains,
    pub motor: MotorConstants,
    /// Permanent magnet carried by each mover.
    pub magnet: MagnetSpec,
    /// Levitation electromagnet; its `gap` field is the nominal
    /// design gap, each mover rides at its own.
    pub actuator: GapActuatorSpec,
    #[serde(default)]
    pub jobs: Vec<Job>,
    #[serde(default)]
    pub script: Vec<ScriptEntry>,
    #[serde(default)]
    pub rng_seed: u64,
    /// Simulation timestep [s].
    pub dt: f64,
    /// Run horizon [s].
    pub t_end: f64,
}

impl Scenario {
    /// Parses a scenario, distinguishing malformed JSON from valid
    /// JSON that misses the schema.
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ScenarioError::Malformed(e.to_string()))?;
        serde_json::from_value(value).map_err(|e| ScenarioError::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn line_config(&self) -> LineConfig {
        LineConfig {
            segments: self.line.segments.clone(),
            stations: self.line.stations.clone(),
            movers: self.line.movers.clone(),
            min_headway: self.line.min_headway,
            dt: self.dt,
        }
    }

    /// Every problem found, one message each; empty means runnable.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut diags = line::validate(&self.line_config());

        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            diags.push(format!("t_end must be >= 0, got {}", self.t_end));
        }
        if let Err(e) = self.gains.validate() {
            diags.push(format!("gains: {e}"));
        }
        if let Err(e) = self.magnet.validate() {
            diags.push(format!("magnet: {e}"));
        }
        if let Err(e) = self.actuator.validate() {
            diags.push(format!("actuator: {e}"));
        }
        if !self.motor.psi_d.is_finite() || self.motor.psi_d == 0.0 {
            diags.push(format!(
                "motor psi_d must be finite and nonzero, got {}",
                self.motor.psi_d
            ));
        }
        if !self.motor.psi_q.is_finite() {
            diags.push(format!("motor psi_q must be finite, got {}", self.motor.psi_q));
        }
        if !(self.motor.tau > 0.0) || !self.motor.tau.is_finite() {
            diags.push(format!("motor tau must be > 0, got {}", self.motor.tau));
        }

        let stations: BTreeSet<&str> =
            self.line.stations.iter().map(|s| s.id.as_str()).collect();
        let movers: BTreeSet<&str> = self.line.movers.iter().map(|m| m.id.as_str()).collect();
        for (i, entry) in self.script.iter().enumerate() {
            if !(entry.t >= 0.0) || !entry.t.is_finite() {
                diags.push(format!(
                    "script[{i}]: time must be >= 0, got {}",
                    entry.t
                ));
            }
            if !movers.contains(entry.mover.as_str()) {
                diags.push(format!("script[{i}]: unknown mover {}", entry.mover));
            }
            if !stations.contains(entry.station.as_str()) {
                diags.push(format!("script[{i}]: unknown station {}", entry.station));
            }
        }
        let mut job_ids = BTreeSet::new();
        for job in &self.jobs {
            if let Err(e) = job.validate() {
                diags.push(format!("job {}: {e}", job.id));
            }
            if !job_ids.insert(job.id.as_str()) {
                diags.push(format!("duplicate job id {}", job.id));
            }
            if !stations.contains(job.station.as_str()) {
                diags.push(format!("job {}: unknown station {}", job.id, job.station));
            }
        }
        diags
    }
}

/// Everything one simulated run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// One record per mover per tick, plus the initial snapshot.
    pub records: Vec<TelemetryRecord>,
    pub events: Vec<LineEvent>,
    pub summary: RunSummary,
}

fn event_mover(event: &LineEvent) -> &str {
    match event {
        LineEvent::Arrival { mover, .. }
        | LineEvent::DwellComplete { mover, .. }
        | LineEvent::HeadwayIntervention { mover, .. } => mover,
    }
}

fn event_tag(event: &LineEvent) -> String {
    match event {
        LineEvent::Arrival { station, .. } => format!("arrival {station}"),
        LineEvent::DwellComplete { station, .. } => format!("dwell_complete {station}"),
        LineEvent::HeadwayIntervention { segment, .. } => format!("headway {segment}"),
    }
}

/// Runs a scenario to its horizon. Fully deterministic: identical
/// scenarios produce identical outputs.
pub fn run_scenario(scenario: &Scenario) -> Result<SimOutput, ScenarioError> {
    let diagnostics = scenario.diagnostics();
    if !diagnostics.is_empty() {
        return Err(ScenarioError::Invalid { diagnostics });
    }
    let config = scenario.line_config();
    let mut state = LineState::new(&config).map_err(|e| ScenarioError::Invalid {
        diagnostics: vec![e.to_string()],
    })?;

    // the gap never changes in flight, so each mover's levitation
    // hold current is one constant
    let hold_current: BTreeMap<String, f64> = state
        .movers
        .iter()
        .map(|m| {
            let spec = GapActuatorSpec {
                gap: m.gap,
                current: 0.0,
                ..scenario.actuator.clone()
            };
            let current = levitation_current_for_load(&spec, m.mass)
                .expect("mover mass validated nonnegative");
            (m.id.clone(), current)
        })
        .collect();

    let mut ordered: Vec<&ScriptEntry> = scenario.script.iter().collect();
    ordered.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("timestamps validated finite"));

    let mut records = Vec::new();
    for m in &state.movers {
        records.push(TelemetryRecord {
            t: 0.0,
            mover: m.id.clone(),
            position: 0.0,
            velocity: m.velocity,
            gap: m.gap,
            lev_current: hold_current[&m.id],
            drive_iq: 0.0,
            event: None,
        });
    }

    let ticks = (scenario.t_end / config.dt + 1e-9).floor() as u64;
    let mut cursor = 0;
    let mut seen_events = 0;
    for _ in 0..ticks {
        let mut commands = Vec::new();
        while cursor < ordered.len() && ordered[cursor].t <= state.clock + 1e-9 {
            commands.push(Command {
                mover: ordered[cursor].mover.clone(),
                station: ordered[cursor].station.clone(),
            });
            cursor += 1;
        }
        let tick = state.tick;
        let t_after = state.clock + config.dt;
        advance(&mut state, &config, &commands).map_err(|source| ScenarioError::Simulation {
            tick,
            t: t_after,
            source,
        })?;

        let fresh = &state.events[seen_events..];
        for m in &state.movers {
            let tags: Vec<String> = fresh
                .iter()
                .filter(|e| event_mover(e) == m.id)
                .map(event_tag)
                .collect();
            let thrust = m.mass * m.acceleration;
            records.push(TelemetryRecord {
                t: state.clock,
                mover: m.id.clone(),
                position: m.distance_traveled,
                velocity: m.velocity,
                gap: m.gap,
                lev_current: hold_current[&m.id],
                drive_iq: iq_for_force(scenario.motor.psi_d, scenario.motor.tau, thrust)
                    .expect("motor constants validated"),
                event: if tags.is_empty() {
                    None
                } else {
                    Some(tags.join(";"))
                },
            });
        }
        seen_events = state.events.len();
    }

    let summary = summarize(&records, &state.events);
    Ok(SimOutput {
        records,
        events: state.events,
        summary,
    })
}
