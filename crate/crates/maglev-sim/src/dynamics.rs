//! 1-D mover dynamics along the track coordinate.
//!
//! A mover is driven by an electromagnetic force and resisted by
//! mechanical friction and electromagnetic drag, both of which oppose
//! the direction of motion. The force balance gives an acceleration,
//! integrated with semi-implicit Euler at a fixed step (velocity first,
//! then position with the new velocity). The vertical gap axis is
//! quasi-static here: it is held by the control loop, not integrated as
//! a second degree of freedom.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DynamicsError {
    #[error("{what} must be finite and in range, got {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("non-finite force sample at step {step} (t = {t} s)")]
    NonFiniteForce { step: u64, t: f64 },
    #[error("state became non-finite at step {step} (t = {t} s)")]
    NonFiniteState { step: u64, t: f64 },
}

fn check(what: &'static str, value: f64, ok: bool) -> Result<(), DynamicsError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(DynamicsError::InvalidParameter { what, value })
    }
}

/// Forces acting on a mover at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceBalance {
    /// Electromagnetic drive force [N], signed along the track.
    pub drive: f64,
    /// Mechanical friction magnitude [N]; opposes motion.
    pub friction: f64,
    /// Electromagnetic drag magnitude [N]; opposes motion.
    pub drag: f64,
}

impl ForceBalance {
    pub fn new(drive: f64, friction: f64, drag: f64) -> Result<Self, DynamicsError> {
        let fb = ForceBalance {
            drive,
            friction,
            drag,
        };
        fb.validate()?;
        Ok(fb)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        check("drive force", self.drive, true)?;
        check("friction", self.friction, self.friction >= 0.0)?;
        check("drag", self.drag, self.drag >= 0.0)
    }

    fn is_finite(&self) -> bool {
        self.drive.is_finite() && self.friction.is_finite() && self.drag.is_finite()
    }
}

/// One mover's kinematic and electrical state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoverState {
    /// Track position [m].
    pub position: f64,
    /// Track velocity [m/s].
    pub velocity: f64,
    /// Mover mass including payload [kg].
    pub mass: f64,
    /// Levitation air gap [m].
    pub gap: f64,
    /// Levitation coil current [A].
    pub lev_current: f64,
    /// Propulsion quadrature current [A].
    pub drive_iq: f64,
}

impl MoverState {
    pub fn new(
        position: f64,
        velocity: f64,
        mass: f64,
        gap: f64,
        lev_current: f64,
        drive_iq: f64,
    ) -> Result<Self, DynamicsError> {
        let state = MoverState {
            position,
            velocity,
            mass,
            gap,
            lev_current,
            drive_iq,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        check("position", self.position, true)?;
        check("velocity", self.velocity, true)?;
        check("mass", self.mass, self.mass > 0.0)?;
        check("air gap", self.gap, self.gap > 0.0)?;
        check("levitation current", self.lev_current, true)?;
        check("drive current", self.drive_iq, true)
    }

    fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Time [s].
    pub t: f64,
    /// Position [m].
    pub position: f64,
    /// Velocity [m/s].
    pub velocity: f64,
    /// Instantaneous acceleration [m/s²].
    pub acceleration: f64,
}

/// Time-ordered samples of one mover's motion; first sample at t = 0,
/// timestamps strictly increasing, never containing NaN or infinity.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }
}

/// Sign of the current motion, as the force balance sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionSign {
    Reverse,
    Rest,
    Forward,
}

impl MotionSign {
    pub fn of_velocity(v: f64) -> MotionSign {
        if v > 0.0 {
            MotionSign::Forward
        } else if v < 0.0 {
            MotionSign::Reverse
        } else {
            MotionSign::Rest
        }
    }
}

/// Net acceleration from the force balance:
/// `a = (F_em − sign·F_f − sign·F_B) / mass`, resistive terms opposing
/// the current direction of motion. Static threshold 0 (pure kinetic
/// model): from rest, any drive above the resistive level moves the
/// mover; below it the mover stays put.
pub fn net_acceleration(fb: &ForceBalance, mass: f64, sign: MotionSign) -> f64 {
    net_acceleration_with_threshold(fb, mass, sign, 0.0)
}

/// [`net_acceleration`] with a configurable static threshold: at rest
/// with `|F_em|` below the threshold the resistive terms drop out of the
/// balance entirely.
///
/// At rest above the threshold the resistive terms oppose the impending
/// motion, capped at breakaway so they can only cancel the drive, never
/// reverse it.
pub fn net_acceleration_with_threshold(
    fb: &ForceBalance,
    mass: f64,
    sign: MotionSign,
    static_threshold: f64,
) -> f64 {
    debug_assert!(mass > 0.0);
    let resistive = fb.friction + fb.drag;
    match sign {
        MotionSign::Forward => (fb.drive - resistive) / mass,
        MotionSign::Reverse => (fb.drive + resistive) / mass,
        MotionSign::Rest => {
            if fb.drive.abs() < static_threshold {
                fb.drive / mass
            } else {
                fb.drive.signum() * (fb.drive.abs() - resistive).max(0.0) / mass
            }
        }
    }
}

/// Closed-form constant-acceleration kinematics:
/// `v = v0 + a·t`, `x = v0·t + ½·a·t²` (displacement from the start).
pub fn closed_form(v0: f64, a: f64, t: f64) -> Result<(f64, f64), DynamicsError> {
    check("initial velocity", v0, true)?;
    check("acceleration", a, true)?;
    check("time", t, t >= 0.0)?;
    Ok((v0 + a * t, v0 * t + 0.5 * a * t * t))
}

/// Advances `state` one semi-implicit Euler step of length `dt`:
/// velocity first, then position with the new velocity.
///
/// `force` must be a pure function of the state. Resistive forces stop
/// the mover at a zero crossing within the step instead of pushing it
/// through (they dissipate, never drive). A standalone step reports any
/// force-sample failure as step 0 at t = 0.
pub fn step<F>(state: &MoverState, force: F, dt: f64) -> Result<MoverState, DynamicsError>
where
    F: Fn(&MoverState) -> ForceBalance,
{
    check("dt", dt, dt > 0.0)?;
    step_inner(state, &force, dt).ok_or(DynamicsError::NonFiniteForce { step: 0, t: 0.0 })
}

/// Core integrator step; `None` when the force sample is non-finite.
fn step_inner<F>(state: &MoverState, force: &F, dt: f64) -> Option<MoverState>
where
    F: Fn(&MoverState) -> ForceBalance,
{
    let fb = force(state);
    if !fb.is_finite() {
        return None;
    }
    let sign = MotionSign::of_velocity(state.velocity);
    let a = net_acceleration(&fb, state.mass, sign);
    let mut v_next = state.velocity + a * dt;
    if state.velocity != 0.0 && v_next * state.velocity < 0.0 {
        // the step crossed zero; if drive alone would not have crossed,
        // the flip is a resistive artifact and the mover stops instead
        let v_drive_only = state.velocity + (fb.drive / state.mass) * dt;
        if v_drive_only * state.velocity >= 0.0 {
            v_next = 0.0;
        }
    }
    Some(MoverState {
        position: state.position + v_next * dt,
        velocity: v_next,
        ..*state
    })
}

/// Instantaneous acceleration at a state, for trajectory records;
/// `None` when the force sample is non-finite.
fn acceleration_at<F>(state: &MoverState, force: &F) -> Option<f64>
where
    F: Fn(&MoverState) -> ForceBalance,
{
    let fb = force(state);
    if !fb.is_finite() {
        return None;
    }
    Some(net_acceleration(
        &fb,
        state.mass,
        MotionSign::of_velocity(state.velocity),
    ))
}

/// Integrates from `state` to `t_end`, sampling every `dt`; a final
/// partial step is truncated exactly to `t_end`.
///
/// The trajectory starts with a sample at t = 0 and contains
/// `floor(t_end/dt) + 1` samples, plus one more for the truncated tail
/// when `t_end` is not a whole number of steps.
pub fn simulate<F>(
    state: &MoverState,
    force: F,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError>
where
    F: Fn(&MoverState) -> ForceBalance,
{
    check("t_end", t_end, t_end >= 0.0)?;
    check("dt", dt, dt > 0.0)?;
    state.validate()?;

    // snap the step count so t_end = k·dt lands on exactly k full steps
    // despite binary rounding of the quotient
    let ratio = t_end / dt;
    let full_steps = (ratio + 1e-9).floor() as u64;
    let tail = t_end - full_steps as f64 * dt;
    let has_tail = tail > 1e-9 * dt;

    let mut current = *state;
    let mut samples = Vec::with_capacity(full_steps as usize + 2);
    let record =
        |samples: &mut Vec<TrajectorySample>, t: f64, s: &MoverState| -> Result<(), DynamicsError> {
            let step_idx = samples.len() as u64;
            let acceleration = acceleration_at(s, &force)
                .ok_or(DynamicsError::NonFiniteForce { step: step_idx, t })?;
            if !s.is_finite() || !acceleration.is_finite() {
                return Err(DynamicsError::NonFiniteState { step: step_idx, t });
            }
            samples.push(TrajectorySample {
                t,
                position: s.position,
                velocity: s.velocity,
                acceleration,
            });
            Ok(())
        };

    record(&mut samples, 0.0, &current)?;
    for k in 1..=full_steps {
        let t = k as f64 * dt;
        current = step_inner(&current, &force, dt)
            .ok_or(DynamicsError::NonFiniteForce { step: k, t })?;
        record(&mut samples, t, &current)?;
    }
    if has_tail {
        current = step_inner(&current, &force, tail).ok_or(DynamicsError::NonFiniteForce {
            step: full_steps + 1,
            t: t_end,
        })?;
        record(&mut samples, t_end, &current)?;
    }
    Ok(Trajectory { samples })
}
