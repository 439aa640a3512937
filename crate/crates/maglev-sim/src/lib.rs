//! Deterministic simulator and motion-control toolkit for a maglev
//! conveyor line.
//!
//! The crate is organized around the life of a mover on the line:
//!
//! * [`emfield`]: electromagnetic force laws (coil and trace fields,
//!   dipole thrust, gap attraction, transition velocity).
//! * [`dynamics`]: 1-D force balance and fixed-step integration of a
//!   single mover along its track coordinate.
//! * [`control`]: PID regulation, trapezoidal motion profiles, and
//!   linear-synchronous-motor traction with its inverse.
//! * [`line`]: multi-mover line simulation on a segment graph with
//!   headway enforcement, stations, and an event log.
//! * [`dispatch`]: minimum-ETA routing and job-to-mover assignment
//!   (greedy, local search, and an exhaustive reference solver).
//! * [`telemetry`]: per-tick records, CSV export, rolling z-score
//!   anomaly detection, and run summaries.
//! * [`scenario`]: JSON scenario files tying everything together; the
//!   `maglev` CLI is a thin wrapper over this module.
//!
//! Everything is deterministic: the same inputs (including the scenario
//! `rng_seed`) produce bit-identical outputs. All quantities are SI.

pub mod control;
pub mod dispatch;
pub mod dynamics;
pub mod emfield;
pub mod line;
pub mod scenario;
pub mod telemetry;
