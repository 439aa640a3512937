//! Run recording, summary statistics, and anomaly flagging.
//!
//! Records are per-tick mover snapshots; summaries aggregate a run
//! into counters and a current-squared energy proxy; anomaly flags
//! come from a rolling z-score over each record stream.

use crate::line::LineEvent;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum TelemetryError {
    #[error("{what} must be finite and in range, got {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("record field {field} is not finite")]
    NonFinite { field: &'static str },
    #[error("csv write failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// One per-tick snapshot of a mover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    /// Sample time [s].
    pub t: f64,
    pub mover: String,
    /// Odometer reading, cumulative distance traveled [m].
    pub position: f64,
    pub velocity: f64,
    /// Levitation air gap [m].
    pub gap: f64,
    /// Levitation coil current [A].
    pub lev_current: f64,
    /// Quadrature drive current [A].
    pub drive_iq: f64,
    /// Free-text tag for ticks where something happened.
    pub event: Option<String>,
}

impl TelemetryRecord {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        let fields = [
            ("t", self.t),
            ("position", self.position),
            ("velocity", self.velocity),
            ("gap", self.gap),
            ("lev_current", self.lev_current),
            ("drive_iq", self.drive_iq),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(TelemetryError::NonFinite { field });
            }
        }
        Ok(())
    }
}

/// Aggregate view of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub jobs_completed: u64,
    /// Completions per second of recorded time.
    pub throughput: f64,
    /// Meters per mover id.
    pub distance_traveled: BTreeMap<String, f64>,
    /// Time integral of lev_current^2 + drive_iq^2 [A^2 s].
    pub energy_proxy: f64,
    pub headway_interventions: u64,
}

/// Indices whose value deviates from the mean of the `window`
/// points before them by more than `threshold` standard deviations
/// (population). The first `window` indices are never flagged; a
/// window shorter than the series yields an empty result.
///
/// `threshold` may be +inf: inf times a positive stddev exceeds any
/// deviation, and inf times a zero stddev is NaN, which compares
/// false, so nothing is ever flagged. A zero-stddev window with a
/// finite threshold flags any nonzero deviation.
pub fn zscore_anomalies(
    series: &[f64],
    window: usize,
    threshold: f64,
) -> Result<Vec<usize>, TelemetryError> {
    if window < 2 {
        return Err(TelemetryError::InvalidParameter {
            what: "window",
            value: window as f64,
        });
    }
    if !(threshold > 0.0) {
        return Err(TelemetryError::InvalidParameter {
            what: "threshold",
            value: threshold,
        });
    }
    let mut flagged = Vec::new();
    for i in window..series.len() {
        let prev = &series[i - window..i];
        let mean = prev.iter().sum::<f64>() / window as f64;
        let variance = prev.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / window as f64;
        if (series[i] - mean).abs() > threshold * variance.sqrt() {
            flagged.push(i);
        }
    }
    Ok(flagged)
}

/// Aggregates a run. Records must be time-ordered; streams from
/// different movers may interleave. Positions are odometer readings,
/// so a drop between consecutive records of one mover marks a stream
/// restart, not backwards travel, and contributes nothing.
pub fn summarize(records: &[TelemetryRecord], events: &[LineEvent]) -> RunSummary {
    let mut jobs_completed = 0;
    let mut headway_interventions = 0;
    for event in events {
        match event {
            LineEvent::DwellComplete { .. } => jobs_completed += 1,
            LineEvent::HeadwayIntervention { .. } => headway_interventions += 1,
            LineEvent::Arrival { .. } => {}
        }
    }

    let mut streams: BTreeMap<&str, Vec<&TelemetryRecord>> = BTreeMap::new();
    for r in records {
        streams.entry(r.mover.as_str()).or_default().push(r);
    }
    let mut distance_traveled = BTreeMap::new();
    let mut energy_proxy = 0.0;
    for (mover, stream) in &streams {
        let mut distance = 0.0;
        for pair in stream.windows(2) {
            let dt = (pair[1].t - pair[0].t).max(0.0);
            distance += (pair[1].position - pair[0].position).max(0.0);
            energy_proxy += (pair[0].lev_current.powi(2) + pair[0].drive_iq.powi(2)) * dt;
        }
        distance_traveled.insert((*mover).to_string(), distance);
    }

    let duration = match (records.first(), records.last()) {
        (Some(first), Some(last)) => (last.t - first.t).max(0.0),
        _ => 0.0,
    };
    let throughput = if duration > 0.0 {
        jobs_completed as f64 / duration
    } else {
        0.0
    };
    RunSummary {
        jobs_completed,
        throughput,
        distance_traveled,
        energy_proxy,
        headway_interventions,
    }
}

/// Writes records as CSV: fixed header, one row per record, empty
/// event column when there is no tag, newline-terminated rows.
pub fn write_csv<W: std::io::Write>(
    records: &[TelemetryRecord],
    out: W,
) -> Result<(), TelemetryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "mover",
        "position",
        "velocity",
        "gap",
        "lev_current",
        "drive_iq",
        "event",
    ])?;
    for r in records {
        r.validate()?;
        w.write_record(&[
            r.t.to_string(),
            r.mover.clone(),
            r.position.to_string(),
            r.velocity.to_string(),
            r.gap.to_string(),
            r.lev_current.to_string(),
            r.drive_iq.to_string(),
            r.event.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
